use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::Context;
use clap::Parser;
use depthcue_cli::bench::{report_path, run_bench, BenchKind};
use depthcue_cli::config::{load_config_file, parse_assignment, ConfigMap};
use depthcue_cli::{run, CliError, PipelineConfig};
use serde_json::Value;

/// Monocular depth-cue enhancement: shading/contrast retargeting driven by
/// depth, plus layered motion parallax.
#[derive(Parser, Debug)]
#[command(name = "depthcue", version)]
struct Args {
    /// Input image (PNG, PPM or PGM) or directory; repeatable.
    #[arg(long, value_name = "PATH")]
    input: Vec<PathBuf>,
    /// Disparity/depth map (PFM or 16-bit PNG), one per input; repeatable.
    #[arg(long, value_name = "PATH")]
    depth: Vec<PathBuf>,
    /// How depth-file values relate to distance.
    #[arg(long, value_name = "disparity|depth")]
    depth_kind: Option<String>,
    /// Built-in depth estimate for inputs without a depth file.
    #[arg(long, value_name = "vertical-gradient")]
    depth_prior: Option<String>,
    #[arg(long, value_name = "two-layer|continuous")]
    profile: Option<String>,
    /// Working size, or `none` to keep the input size [default: 1920x1080].
    #[arg(long, value_name = "WxH")]
    resize: Option<String>,
    /// Output directory.
    #[arg(long, value_name = "DIR")]
    out: Option<PathBuf>,
    /// Toggles (`a,b,c,d`, `1,0,1,1`, `none`) or `sweep` for the five-panel run.
    #[arg(long, value_name = "a,b,c,d|sweep")]
    ablation: Option<String>,
    /// Write the parallax layer stack (RGBA PNGs + manifest.json).
    #[arg(long)]
    export_layers: bool,
    /// Render parallax frames for `sin:N` or poses read from `file:PATH`.
    #[arg(long, value_name = "sin:N|file:PATH")]
    trajectory: Option<String>,
    /// Run a benchmark instead of the pipeline.
    #[arg(long, value_name = "guided-filter|pipeline")]
    bench: Option<String>,
    /// JSON config file with dotted keys; flags override it.
    #[arg(long, value_name = "PATH")]
    config: Option<PathBuf>,
    /// Worker threads (default: all CPUs).
    #[arg(long, value_name = "N")]
    threads: Option<usize>,
    /// Set any config key, e.g. `--set retargeting.gamma=0.9`; repeatable.
    #[arg(long = "set", value_name = "KEY=VALUE")]
    set: Vec<String>,
}

fn path_value(p: &std::path::Path) -> Value {
    Value::String(p.to_string_lossy().into_owned())
}

fn build_map(args: &Args) -> Result<ConfigMap, CliError> {
    let mut map = match &args.config {
        Some(p) => load_config_file(p)?,
        None => ConfigMap::new(),
    };
    for s in &args.set {
        let (k, v) = parse_assignment(s)?;
        map.insert(k, v);
    }
    if !args.input.is_empty() {
        map.insert("input".into(), Value::Array(args.input.iter().map(|p| path_value(p)).collect()));
    }
    if !args.depth.is_empty() {
        map.insert("depth".into(), Value::Array(args.depth.iter().map(|p| path_value(p)).collect()));
    }
    let strings = [
        ("depth_kind", &args.depth_kind),
        ("depth_prior", &args.depth_prior),
        ("profile", &args.profile),
        ("resize", &args.resize),
        ("ablation", &args.ablation),
        ("trajectory", &args.trajectory),
    ];
    for (k, v) in strings {
        if let Some(v) = v {
            map.insert(k.into(), Value::String(v.clone()));
        }
    }
    if let Some(out) = &args.out {
        map.insert("out".into(), path_value(out));
    }
    if let Some(n) = args.threads {
        map.insert("threads".into(), Value::from(n));
    }
    if args.export_layers {
        map.insert("export_layers".into(), Value::Bool(true));
    }
    Ok(map)
}

fn bench(args: &Args, which: &str) -> Result<(), CliError> {
    let kind: BenchKind = which.parse()?;
    let report = run_bench(kind, args.threads)?;
    let text = serde_json::to_string_pretty(&report).expect("json");
    println!("{text}");
    if let Some(dir) = &args.out {
        std::fs::create_dir_all(dir).map_err(|e| CliError::Config(format!("{}: {e}", dir.display())))?;
        std::fs::write(report_path(dir, kind), text)
            .map_err(|e| CliError::Config(format!("{}: {e}", dir.display())))?;
    }
    Ok(())
}

fn real_main(args: Args) -> anyhow::Result<i32> {
    if let Some(which) = &args.bench {
        return Ok(match bench(&args, which) {
            Ok(()) => 0,
            Err(e) => {
                eprintln!("depthcue: {e}");
                e.exit_code()
            }
        });
    }
    let cfg = match build_map(&args).and_then(|m| PipelineConfig::from_map(&m)) {
        Ok(cfg) => cfg,
        Err(e) => {
            eprintln!("depthcue: {e}");
            return Ok(e.exit_code());
        }
    };
    let report = match run(&cfg) {
        Ok(r) => r,
        Err(e) => {
            eprintln!("depthcue: {e}");
            return Ok(e.exit_code());
        }
    };
    let report_file = cfg.out.join(depthcue_cli::pipeline::REPORT_FILE);
    for img in &report.images {
        match &img.error {
            None => log::info!("{} ok in {:.2}s", img.input.display(), img.total_s),
            Some(e) => eprintln!("depthcue: {}: {e}", img.input.display()),
        }
    }
    println!(
        "{} of {} images processed; report at {}",
        report.images.len() - report.failed,
        report.images.len(),
        report_file.display()
    );
    std::fs::metadata(&report_file).with_context(|| format!("missing {}", report_file.display()))?;
    Ok(report.exit_code())
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let args = Args::parse();
    match real_main(args) {
        Ok(code) => ExitCode::from(code as u8),
        Err(e) => {
            eprintln!("depthcue: {e:#}");
            ExitCode::from(1)
        }
    }
}
