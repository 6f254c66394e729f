//! Batch driver: load, depth analysis, decomposition, retargeting and
//! motion parallax for each input, with a JSON run report.

use std::fs;
use std::path::{Path, PathBuf};
use std::time::Instant;

use depthcue_core::decompose::{decompose, Decomposition};
use depthcue_core::depth::{
    depth_from_file, depth_from_prior, profile_from_map, resample_depth, DepthMap, DepthProfile,
    ProfileKind,
};
use depthcue_core::image::{luminance_of, ImageBuffer};
use depthcue_core::io::{load_image, save_image, PngDepth};
use depthcue_core::metrics::{detail_variance, psnr, rms_contrast};
use depthcue_core::parallax::{build_layers, export_stack, render_trajectory, LayerStack};
use depthcue_core::resample::resize_bilinear;
use depthcue_core::retarget::retarget;
use log::{info, warn};
use rayon::prelude::*;
use serde::Serialize;
use sha2::{Digest, Sha256};

use crate::ablation::{ablation_panels, compose_panel, PanelMetrics, PANEL_LABELS};
use crate::config::{output_stem, PipelineConfig};
use crate::error::{CliError, Result};

pub const REPORT_FILE: &str = "report.json";

/// Seconds spent in each pipeline stage.
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize)]
pub struct StageTimings {
    pub load: f64,
    pub depth_analysis: f64,
    pub decomposition: f64,
    pub retargeting: f64,
    pub motion_parallax: f64,
}

impl StageTimings {
    pub const STAGES: [&'static str; 5] = [
        "load",
        "depth_analysis",
        "decomposition",
        "retargeting",
        "motion_parallax",
    ];

    pub fn sum(&self) -> f64 {
        self.load + self.depth_analysis + self.decomposition + self.retargeting + self.motion_parallax
    }
}

#[derive(Clone, Debug, Default, PartialEq, Serialize)]
pub struct ImageMetrics {
    /// `None` when input and output are identical.
    pub psnr_db: Option<f64>,
    pub rms_contrast_in: f64,
    pub rms_contrast_out: f64,
    pub fg_detail_variance_in: f64,
    pub fg_detail_variance_out: f64,
    pub bg_detail_variance_in: f64,
    pub bg_detail_variance_out: f64,
}

impl ImageMetrics {
    pub fn measure(input: &ImageBuffer, output: &ImageBuffer, profile: &DepthProfile) -> Result<Self> {
        let (y_in, y_out) = (luminance_of(input)?, luminance_of(output)?);
        let fg = profile.foreground();
        let bg: Vec<bool> = fg.iter().map(|f| !f).collect();
        Ok(Self {
            psnr_db: finite(psnr(input, output)?),
            rms_contrast_in: rms_contrast(&y_in),
            rms_contrast_out: rms_contrast(&y_out),
            fg_detail_variance_in: detail_variance(&y_in, &fg),
            fg_detail_variance_out: detail_variance(&y_out, &fg),
            bg_detail_variance_in: detail_variance(&y_in, &bg),
            bg_detail_variance_out: detail_variance(&y_out, &bg),
        })
    }
}

pub(crate) fn finite(v: f64) -> Option<f64> {
    v.is_finite().then_some(v)
}

#[derive(Clone, Debug, Default, PartialEq, Serialize)]
pub struct Outputs {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub enhanced: Option<PathBuf>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub ablation_panel: Option<PathBuf>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub layers: Option<PathBuf>,
    #[serde(skip_serializing_if = "Vec::is_empty")]
    pub frames: Vec<PathBuf>,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Status {
    Ok,
    Failed,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ImageReport {
    pub input: PathBuf,
    pub status: Status,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
    pub width: usize,
    pub height: usize,
    pub depth_source: String,
    /// Profile actually used (a two-layer request may fall back).
    pub profile: Option<ProfileKind>,
    pub layer_count: usize,
    pub timings: StageTimings,
    /// Wall time for the whole image, including output writes.
    pub total_s: f64,
    pub metrics: Option<ImageMetrics>,
    /// SHA-256 of the enhanced image's samples (f64 little-endian).
    pub digest: Option<String>,
    pub outputs: Outputs,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub ablation: Option<Vec<PanelMetrics>>,
}

impl ImageReport {
    fn new(input: &Path) -> Self {
        Self {
            input: input.to_path_buf(),
            status: Status::Ok,
            error: None,
            width: 0,
            height: 0,
            depth_source: String::new(),
            profile: None,
            layer_count: 0,
            timings: StageTimings::default(),
            total_s: 0.0,
            metrics: None,
            digest: None,
            outputs: Outputs::default(),
            ablation: None,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct RunReport {
    pub mode: String,
    pub threads: usize,
    pub stages: [&'static str; 5],
    pub images: Vec<ImageReport>,
    pub failed: usize,
    pub wall_s: f64,
}

impl RunReport {
    pub fn exit_code(&self) -> i32 {
        if self.failed > 0 {
            crate::error::EXIT_IMAGE_FAILURE
        } else {
            0
        }
    }
}

/// SHA-256 over the raw sample bits.
pub fn digest(img: &ImageBuffer) -> String {
    let mut hasher = Sha256::new();
    hasher.update((img.width() as u64).to_le_bytes());
    hasher.update((img.height() as u64).to_le_bytes());
    hasher.update((img.channels() as u64).to_le_bytes());
    for v in img.data() {
        hasher.update(v.to_le_bytes());
    }
    hasher
        .finalize()
        .iter()
        .map(|b| format!("{b:02x}"))
        .collect()
}

fn to_rgb(img: ImageBuffer) -> Result<ImageBuffer> {
    if img.channels() == 3 {
        return Ok(img);
    }
    Ok(ImageBuffer::from_planes(&[&img, &img, &img])?)
}

/// Reads the input image (resized if configured) and its raw depth map.
pub fn load_stage(cfg: &PipelineConfig, index: usize) -> Result<(ImageBuffer, Option<DepthMap>)> {
    let mut rgb = to_rgb(load_image(&cfg.inputs[index])?)?;
    if let Some((w, h)) = cfg.resize {
        rgb = resize_bilinear(&rgb, w, h)?;
    }
    let depth = match cfg.depths.get(index) {
        Some(p) => Some(depth_from_file(p, cfg.depth_kind)?),
        None => None,
    };
    Ok((rgb, depth))
}

/// Brings the depth map to the image size and derives the profile. A
/// two-layer request on a map without separation falls back to continuous.
pub fn depth_stage(
    cfg: &PipelineConfig,
    rgb: &ImageBuffer,
    depth: Option<DepthMap>,
) -> Result<(DepthProfile, ProfileKind)> {
    let (w, h) = (rgb.width(), rgb.height());
    let map = match depth {
        Some(m) if m.width() == w && m.height() == h => m,
        Some(m) => resample_depth(&m, w, h)?,
        None => depth_from_prior(w, h, cfg.depth_prior)?,
    };
    match profile_from_map(map.clone(), cfg.profile) {
        Ok(p) => Ok((p, cfg.profile)),
        Err(depthcue_core::Error::Data(msg)) if cfg.profile == ProfileKind::TwoLayer => {
            warn!("two-layer profile unavailable ({msg}); using continuous depth");
            Ok((DepthProfile::Continuous(map), ProfileKind::Continuous))
        }
        Err(e) => Err(e.into()),
    }
}

fn timed<T>(slot: &mut f64, f: impl FnOnce() -> Result<T>) -> Result<T> {
    let start = Instant::now();
    let out = f();
    *slot = start.elapsed().as_secs_f64();
    out
}

fn describe_depth(cfg: &PipelineConfig, index: usize) -> String {
    match cfg.depths.get(index) {
        Some(p) => format!("file:{}", p.display()),
        None => {
            let prior = serde_json::to_value(cfg.depth_prior)
                .ok()
                .and_then(|v| v.as_str().map(str::to_string))
                .unwrap_or_default();
            format!("prior:{prior}")
        }
    }
}

fn create_dir(dir: &Path) -> Result<()> {
    fs::create_dir_all(dir).map_err(|e| CliError::io(format!("cannot create {}", dir.display()), e))
}

fn write_frames(stack: &LayerStack, cfg: &PipelineConfig, dir: &Path) -> Result<Vec<PathBuf>> {
    let Some(poses) = cfg.poses() else {
        return Ok(Vec::new());
    };
    let frames_dir = dir.join("frames");
    create_dir(&frames_dir)?;
    let frames = render_trajectory(stack, &poses, cfg.parallax.gain_px);
    let mut paths = Vec::with_capacity(frames.len());
    for (i, frame) in frames.iter().enumerate() {
        let path = frames_dir.join(format!("frame_{i:04}.png"));
        save_image(frame, &path, PngDepth::Eight)?;
        paths.push(path);
    }
    Ok(paths)
}

fn process_one(cfg: &PipelineConfig, index: usize, report: &mut ImageReport) -> Result<()> {
    let dir = cfg.out.join(output_stem(&cfg.inputs[index]));
    create_dir(&dir)?;
    report.depth_source = describe_depth(cfg, index);
    let mut t = StageTimings::default();

    let (rgb, depth) = timed(&mut t.load, || load_stage(cfg, index))?;
    report.width = rgb.width();
    report.height = rgb.height();
    let (profile, kind) = timed(&mut t.depth_analysis, || depth_stage(cfg, &rgb, depth))?;
    report.profile = Some(kind);
    let decomp: Decomposition = timed(&mut t.decomposition, || Ok(decompose(&rgb, &cfg.decomposition)?))?;

    let enhanced = if cfg.ablation_sweep {
        let result = timed(&mut t.retargeting, || ablation_panels(&rgb, &decomp, &profile, &cfg.retargeting))?;
        let panel = compose_panel(&result.panels, &PANEL_LABELS)?;
        let path = dir.join("ablation.png");
        save_image(&panel, &path, cfg.bit_depth)?;
        report.outputs.ablation_panel = Some(path);
        report.ablation = Some(result.metrics);
        result.panels.into_iter().last().expect("five panels")
    } else {
        timed(&mut t.retargeting, || Ok(retarget(&decomp, &profile, &cfg.retargeting)?))?
    };
    drop(decomp);

    if !cfg.ablation_sweep {
        let mut layer_count = 0;
        let mut layers_dir = None;
        let mut frames = Vec::new();
        timed(&mut t.motion_parallax, || {
            let stack = build_layers(&enhanced, &profile, &cfg.parallax)?;
            layer_count = stack.layers().len();
            if cfg.export_layers {
                let d = dir.join("layers");
                export_stack(&stack, cfg.parallax.gain_px, &d)?;
                layers_dir = Some(d);
            }
            frames = write_frames(&stack, cfg, &dir)?;
            Ok(())
        })?;
        report.layer_count = layer_count;
        report.outputs.layers = layers_dir;
        report.outputs.frames = frames;
    }

    let path = dir.join("enhanced.png");
    save_image(&enhanced, &path, cfg.bit_depth)?;
    report.outputs.enhanced = Some(path);
    report.metrics = Some(ImageMetrics::measure(&rgb, &enhanced, &profile)?);
    report.digest = Some(digest(&enhanced));
    report.timings = t;
    Ok(())
}

fn process_all(cfg: &PipelineConfig, mode: &str) -> Result<RunReport> {
    create_dir(&cfg.out)?;
    let mut builder = rayon::ThreadPoolBuilder::new();
    if let Some(n) = cfg.threads {
        builder = builder.num_threads(n);
    }
    let pool = builder
        .build()
        .map_err(|e| CliError::config(format!("cannot start {:?} worker threads: {e}", cfg.threads)))?;

    let start = Instant::now();
    let images: Vec<ImageReport> = pool.install(|| {
        (0..cfg.inputs.len())
            .into_par_iter()
            .map(|i| {
                let input = &cfg.inputs[i];
                let mut report = ImageReport::new(input);
                let t0 = Instant::now();
                if let Err(e) = process_one(cfg, i, &mut report) {
                    log::error!("{}: {e}", input.display());
                    report.status = Status::Failed;
                    report.error = Some(e.to_string());
                } else {
                    info!("{}: done", input.display());
                }
                report.total_s = t0.elapsed().as_secs_f64();
                report
            })
            .collect()
    });

    let report = RunReport {
        mode: mode.to_string(),
        threads: pool.current_num_threads(),
        stages: StageTimings::STAGES,
        failed: images.iter().filter(|r| r.status == Status::Failed).count(),
        images,
        wall_s: start.elapsed().as_secs_f64(),
    };
    let path = cfg.out.join(REPORT_FILE);
    let json = serde_json::to_string_pretty(&report).expect("report serializes");
    fs::write(&path, json).map_err(|e| CliError::io(format!("cannot write {}", path.display()), e))?;
    Ok(report)
}

/// Runs the full pipeline on every input. Per-image failures are recorded
/// in the report; `Err` means nothing could be processed.
pub fn run(cfg: &PipelineConfig) -> Result<RunReport> {
    if cfg.ablation_sweep {
        return run_ablation(cfg);
    }
    process_all(cfg, "run")
}

/// Renders the five cumulative toggle configurations for every input and
/// writes a labelled panel per image.
pub fn run_ablation(cfg: &PipelineConfig) -> Result<RunReport> {
    let mut cfg = cfg.clone();
    cfg.ablation_sweep = true;
    process_all(&cfg, "ablation")
}
