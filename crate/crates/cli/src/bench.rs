//! `--bench` timing runs. Each workload is repeated five times and the
//! median wall time reported.

use std::path::PathBuf;
use std::time::Instant;

use depthcue_core::guided::{guided_filter_fast, guided_filter_reference, GuidedFilterParams};
use depthcue_core::image::ImageBuffer;
use depthcue_core::io::{save_image, write_pfm, PfmImage, PngDepth};
use depthcue_core::synth::{bimodal_card, value_noise};
use serde::Serialize;
use serde_json::{json, Value};

use crate::config::PipelineConfig;
use crate::error::{CliError, Result};
use crate::pipeline::{run, StageTimings};

pub const REPEATS: usize = 5;
pub const BENCH_SIZE: (usize, usize) = (1920, 1080);

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum BenchKind {
    GuidedFilter,
    Pipeline,
}

impl std::str::FromStr for BenchKind {
    type Err = CliError;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "guided-filter" => Ok(BenchKind::GuidedFilter),
            "pipeline" => Ok(BenchKind::Pipeline),
            _ => Err(CliError::config(format!(
                "bench: expected guided-filter or pipeline, got {s:?}"
            ))),
        }
    }
}

pub fn median(values: &[f64]) -> f64 {
    let mut v = values.to_vec();
    v.sort_by(f64::total_cmp);
    let n = v.len();
    if n == 0 {
        0.0
    } else if n % 2 == 1 {
        v[n / 2]
    } else {
        0.5 * (v[n / 2 - 1] + v[n / 2])
    }
}

fn time_runs<T>(mut f: impl FnMut() -> T) -> (Vec<f64>, T) {
    let mut times = Vec::with_capacity(REPEATS);
    let mut last = None;
    for _ in 0..REPEATS {
        let t = Instant::now();
        last = Some(f());
        times.push(t.elapsed().as_secs_f64());
    }
    (times, last.expect("at least one run"))
}

fn noise_plane(w: usize, h: usize, seed: u64) -> ImageBuffer {
    ImageBuffer::from_fn(w, h, |x, y| value_noise(x as f64, y as f64, 5.0, seed))
}

fn bench_guided(threads: Option<usize>) -> Result<Value> {
    let pool = pool(threads)?;
    pool.install(|| {
        let (w, h) = BENCH_SIZE;
        let guide = noise_plane(w, h, 1);
        let input = noise_plane(w, h, 2);
        let p = GuidedFilterParams::new(16, 1e-4)?;
        let (times, _) = time_runs(|| guided_filter_fast(&guide, &input, p));

        let small_g = noise_plane(64, 64, 3);
        let small_i = noise_plane(64, 64, 4);
        let sp = GuidedFilterParams::new(8, 1e-2)?;
        let (fast_t, fast) = time_runs(|| guided_filter_fast(&small_g, &small_i, sp));
        let (ref_t, reference) = time_runs(|| guided_filter_reference(&small_g, &small_i, sp));
        let (fast, reference) = (fast?, reference?);
        let max_diff = fast
            .data()
            .iter()
            .zip(reference.data())
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max);

        Ok(json!({
            "bench": "guided-filter",
            "repeats": REPEATS,
            "threads": rayon::current_num_threads(),
            "fast_1080p": {
                "width": w,
                "height": h,
                "radius": p.radius,
                "epsilon": p.epsilon,
                "median_s": median(&times),
                "runs_s": times,
            },
            "sanity_64": {
                "radius": sp.radius,
                "fast_median_s": median(&fast_t),
                "reference_median_s": median(&ref_t),
                "fast_not_slower": median(&fast_t) <= median(&ref_t),
                "max_abs_diff": max_diff,
            },
        }))
    })
}

#[derive(Serialize)]
struct PipelineRun {
    total_s: f64,
    timings: StageTimings,
    digest: String,
}

fn bench_pipeline(threads: Option<usize>) -> Result<Value> {
    let (w, h) = BENCH_SIZE;
    let dir = std::env::temp_dir().join(format!("depthcue-bench-{}", std::process::id()));
    std::fs::create_dir_all(&dir).map_err(|e| CliError::io("bench scratch dir", e))?;
    let result = (|| {
        let scene = bimodal_card(w, h, 1);
        let input = dir.join("card.png");
        let depth = dir.join("card.pfm");
        save_image(&scene.rgb, &input, PngDepth::Sixteen)?;
        let pfm = PfmImage {
            width: w,
            height: h,
            channels: 1,
            data: scene.nearness.nearness().iter().map(|&v| (1.0 + 99.0 * v) as f32).collect(),
        };
        write_pfm(&pfm, &depth)?;

        let cfg = PipelineConfig {
            inputs: vec![input],
            depths: vec![depth],
            resize: None,
            out: dir.join("out"),
            threads,
            ..PipelineConfig::default()
        };
        let mut runs = Vec::with_capacity(REPEATS);
        for _ in 0..REPEATS {
            let report = run(&cfg)?;
            let img = &report.images[0];
            if let Some(e) = &img.error {
                return Err(CliError::config(format!("bench pipeline failed: {e}")));
            }
            runs.push(PipelineRun {
                total_s: img.total_s,
                timings: img.timings,
                digest: img.digest.clone().unwrap_or_default(),
            });
        }
        Ok(runs)
    })();
    let _ = std::fs::remove_dir_all(&dir);
    let runs = result?;

    let stage = |f: fn(&StageTimings) -> f64| median(&runs.iter().map(|r| f(&r.timings)).collect::<Vec<_>>());
    let stages = StageTimings {
        load: stage(|t| t.load),
        depth_analysis: stage(|t| t.depth_analysis),
        decomposition: stage(|t| t.decomposition),
        retargeting: stage(|t| t.retargeting),
        motion_parallax: stage(|t| t.motion_parallax),
    };
    let totals: Vec<f64> = runs.iter().map(|r| r.total_s).collect();
    let deterministic = runs.windows(2).all(|p| p[0].digest == p[1].digest);
    let accounted = runs.iter().all(|r| r.timings.sum() <= r.total_s * 1.05);
    Ok(json!({
        "bench": "pipeline",
        "repeats": REPEATS,
        "width": w,
        "height": h,
        "median_total_s": median(&totals),
        "median_stage_s": stages,
        "stages_within_total": accounted,
        "deterministic": deterministic,
        "digest": runs[0].digest,
        "runs": runs,
    }))
}

fn pool(threads: Option<usize>) -> Result<rayon::ThreadPool> {
    let mut b = rayon::ThreadPoolBuilder::new();
    if let Some(n) = threads {
        b = b.num_threads(n);
    }
    b.build()
        .map_err(|e| CliError::config(format!("cannot start worker threads: {e}")))
}

/// Runs a benchmark and returns its JSON report.
pub fn run_bench(which: BenchKind, threads: Option<usize>) -> Result<Value> {
    match which {
        BenchKind::GuidedFilter => bench_guided(threads),
        BenchKind::Pipeline => bench_pipeline(threads),
    }
}

/// Where `--bench` writes its report when `--out` is given.
pub fn report_path(dir: &std::path::Path, which: BenchKind) -> PathBuf {
    let name = match which {
        BenchKind::GuidedFilter => "bench_guided_filter.json",
        BenchKind::Pipeline => "bench_pipeline.json",
    };
    dir.join(name)
}
