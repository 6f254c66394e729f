//! Pipeline configuration.
//!
//! Configuration files are JSON objects with flat dotted keys
//! (`"retargeting.gamma": 0.9`). Nested objects are accepted and flattened
//! to the same keys. Command-line flags are merged on top as further keys,
//! so both sources go through one validator.

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};

use depthcue_core::decompose::DecompParams;
use depthcue_core::depth::{DepthKind, DepthPrior, ProfileKind};
use depthcue_core::io::PngDepth;
use depthcue_core::parallax::{HeadPose, ParallaxMode, ParallaxParams};
use depthcue_core::retarget::{Ablation, RetargetParams};
use serde_json::Value;

use crate::error::{CliError, Result};

pub type ConfigMap = BTreeMap<String, Value>;

pub const DEFAULT_RESIZE: (usize, usize) = (1920, 1080);

const IMAGE_EXTENSIONS: &[&str] = &["png", "ppm", "pgm", "pnm"];

#[derive(Clone, Debug, PartialEq)]
pub enum Trajectory {
    /// One autonomous sway cycle of `frames` poses.
    Sine { frames: usize },
    /// Explicit poses.
    Poses(Vec<HeadPose>),
}

#[derive(Clone, Debug, PartialEq)]
pub struct PipelineConfig {
    pub inputs: Vec<PathBuf>,
    /// Empty, or one depth file per input.
    pub depths: Vec<PathBuf>,
    pub depth_kind: DepthKind,
    /// Used for inputs without a depth file.
    pub depth_prior: DepthPrior,
    pub profile: ProfileKind,
    pub decomposition: DecompParams,
    pub retargeting: RetargetParams,
    pub parallax: ParallaxParams,
    pub resize: Option<(usize, usize)>,
    pub out: PathBuf,
    pub bit_depth: PngDepth,
    /// Worker threads; `None` uses the number of CPUs.
    pub threads: Option<usize>,
    pub export_layers: bool,
    pub trajectory: Option<Trajectory>,
    /// Run the five-panel ablation sweep instead of a single configuration.
    pub ablation_sweep: bool,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        Self {
            inputs: Vec::new(),
            depths: Vec::new(),
            depth_kind: DepthKind::Disparity,
            depth_prior: DepthPrior::VerticalGradient,
            profile: ProfileKind::Continuous,
            decomposition: DecompParams::default(),
            retargeting: RetargetParams::default(),
            parallax: ParallaxParams::default(),
            resize: Some(DEFAULT_RESIZE),
            out: PathBuf::from("out"),
            bit_depth: PngDepth::Eight,
            threads: None,
            export_layers: false,
            trajectory: None,
            ablation_sweep: false,
        }
    }
}

/// Reads a JSON config file into dotted keys.
pub fn load_config_file(path: &Path) -> Result<ConfigMap> {
    let text = fs::read_to_string(path)
        .map_err(|e| CliError::config(format!("cannot read {}: {e}", path.display())))?;
    let value: Value = serde_json::from_str(&text)
        .map_err(|e| CliError::config(format!("{}: {e}", path.display())))?;
    let mut map = ConfigMap::new();
    match value {
        Value::Object(_) => flatten_into("", value, &mut map),
        _ => return Err(CliError::config(format!("{}: top level must be an object", path.display()))),
    }
    // Relative paths in a config file are relative to the file.
    let base = path.parent().unwrap_or(Path::new(""));
    for key in ["input", "depth", "out"] {
        if let Some(v) = map.get_mut(key) {
            rebase_paths(v, base);
        }
    }
    if let Some(Value::String(t)) = map.get_mut("trajectory") {
        if let Some(p) = t.strip_prefix("file:") {
            *t = format!("file:{}", base.join(p).display());
        }
    }
    Ok(map)
}

fn flatten_into(prefix: &str, value: Value, map: &mut ConfigMap) {
    match value {
        Value::Object(obj) => {
            for (k, v) in obj {
                let key = if prefix.is_empty() { k } else { format!("{prefix}.{k}") };
                flatten_into(&key, v, map);
            }
        }
        other => {
            map.insert(prefix.to_string(), other);
        }
    }
}

fn rebase_paths(value: &mut Value, base: &Path) {
    match value {
        Value::String(s) => *s = base.join(&*s).to_string_lossy().into_owned(),
        Value::Array(items) => items.iter_mut().for_each(|v| rebase_paths(v, base)),
        _ => {}
    }
}

/// Parses `KEY=VALUE`; the value is read as JSON, falling back to a string.
pub fn parse_assignment(s: &str) -> Result<(String, Value)> {
    let (k, v) = s
        .split_once('=')
        .ok_or_else(|| CliError::config(format!("expected KEY=VALUE, got {s:?}")))?;
    let value = serde_json::from_str(v).unwrap_or_else(|_| Value::String(v.to_string()));
    Ok((k.trim().to_string(), value))
}

fn num(key: &str, v: &Value) -> Result<f64> {
    match v {
        Value::Number(n) => n.as_f64(),
        Value::String(s) => s.trim().parse().ok(),
        _ => None,
    }
    .filter(|x: &f64| x.is_finite())
    .ok_or_else(|| CliError::config(format!("{key}: expected a number, got {v}")))
}

fn count(key: &str, v: &Value) -> Result<usize> {
    let x = num(key, v)?;
    if x < 0.0 || x.fract() != 0.0 || x > u32::MAX as f64 {
        return Err(CliError::config(format!("{key}: expected a non-negative integer, got {v}")));
    }
    Ok(x as usize)
}

fn boolean(key: &str, v: &Value) -> Result<bool> {
    match v {
        Value::Bool(b) => Some(*b),
        Value::String(s) => parse_bool(s),
        Value::Number(n) if n.as_f64() == Some(0.0) => Some(false),
        Value::Number(n) if n.as_f64() == Some(1.0) => Some(true),
        _ => None,
    }
    .ok_or_else(|| CliError::config(format!("{key}: expected a boolean, got {v}")))
}

fn parse_bool(s: &str) -> Option<bool> {
    match s.trim().to_ascii_lowercase().as_str() {
        "1" | "true" | "on" | "yes" => Some(true),
        "0" | "false" | "off" | "no" => Some(false),
        _ => None,
    }
}

fn string<'a>(key: &str, v: &'a Value) -> Result<&'a str> {
    v.as_str()
        .ok_or_else(|| CliError::config(format!("{key}: expected a string, got {v}")))
}

fn paths(key: &str, v: &Value) -> Result<Vec<PathBuf>> {
    match v {
        Value::String(s) => Ok(vec![PathBuf::from(s)]),
        Value::Array(items) => items.iter().map(|i| string(key, i).map(PathBuf::from)).collect(),
        _ => Err(CliError::config(format!("{key}: expected a path or list of paths"))),
    }
}

fn kebab<T: serde::de::DeserializeOwned>(key: &str, v: &Value) -> Result<T> {
    let s = string(key, v)?.replace('_', "-");
    serde_json::from_value(Value::String(s.clone()))
        .map_err(|_| CliError::config(format!("{key}: unknown value {s:?}")))
}

/// `WxH`, or `none`/`off` to keep the input size.
pub fn parse_resize(s: &str) -> Result<Option<(usize, usize)>> {
    let s = s.trim();
    if matches!(s.to_ascii_lowercase().as_str(), "none" | "off" | "native") {
        return Ok(None);
    }
    let bad = || CliError::config(format!("resize: expected WxH or none, got {s:?}"));
    let (w, h) = s.split_once(['x', 'X']).ok_or_else(bad)?;
    let w: usize = w.trim().parse().map_err(|_| bad())?;
    let h: usize = h.trim().parse().map_err(|_| bad())?;
    if w == 0 || h == 0 {
        return Err(bad());
    }
    Ok(Some((w, h)))
}

/// The `--ablation` value: `sweep`, `none`, four booleans (`1,0,1,1`) in
/// toggle order, or the enabled toggles by letter (`a,b,d`).
pub fn parse_ablation(s: &str) -> Result<Option<Ablation>> {
    let s = s.trim().to_ascii_lowercase();
    if s == "sweep" {
        return Ok(None);
    }
    if s == "none" || s == "-" {
        return Ok(Some(Ablation::all(false)));
    }
    let tokens: Vec<&str> = s.split(',').map(str::trim).collect();
    if tokens.len() == 4 {
        if let Some(flags) = tokens.iter().map(|t| parse_bool(t)).collect::<Option<Vec<_>>>() {
            return Ok(Some(Ablation::from_array([flags[0], flags[1], flags[2], flags[3]])));
        }
    }
    let mut flags = [false; 4];
    for t in tokens {
        let i = match t {
            "a" => 0,
            "b" => 1,
            "c" => 2,
            "d" => 3,
            _ => {
                return Err(CliError::config(format!(
                    "ablation: expected sweep, none, four booleans or letters a-d, got {s:?}"
                )))
            }
        };
        flags[i] = true;
    }
    Ok(Some(Ablation::from_array(flags)))
}

/// `sin:N` or `file:PATH`. Trajectory files hold one `hx hy` pair per line
/// (whitespace or comma separated); `#` starts a comment.
pub fn parse_trajectory(s: &str) -> Result<Trajectory> {
    if let Some(n) = s.strip_prefix("sin:") {
        let frames: usize = n
            .trim()
            .parse()
            .ok()
            .filter(|&n| n > 0)
            .ok_or_else(|| CliError::config(format!("trajectory: bad frame count in {s:?}")))?;
        return Ok(Trajectory::Sine { frames });
    }
    if let Some(p) = s.strip_prefix("file:") {
        let text = fs::read_to_string(p)
            .map_err(|e| CliError::config(format!("trajectory: cannot read {p}: {e}")))?;
        let mut poses = Vec::new();
        for (lineno, line) in text.lines().enumerate() {
            let line = line.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let vals: Vec<f64> = line
                .split(|c: char| c == ',' || c.is_whitespace())
                .filter(|t| !t.is_empty())
                .map(|t| t.parse::<f64>())
                .collect::<Result<_, _>>()
                .map_err(|_| CliError::config(format!("trajectory {p}:{}: not numbers", lineno + 1)))?;
            match vals[..] {
                [hx, hy] if hx.is_finite() && hy.is_finite() => poses.push(HeadPose::new(hx, hy)),
                _ => {
                    return Err(CliError::config(format!(
                        "trajectory {p}:{}: expected two finite numbers",
                        lineno + 1
                    )))
                }
            }
        }
        return Ok(Trajectory::Poses(poses));
    }
    Err(CliError::config(format!("trajectory: expected sin:N or file:PATH, got {s:?}")))
}

fn expand_inputs(list: Vec<PathBuf>) -> Result<Vec<PathBuf>> {
    let mut out = Vec::new();
    for p in list {
        if p.is_dir() {
            let mut found: Vec<PathBuf> = fs::read_dir(&p)
                .map_err(|e| CliError::config(format!("cannot list {}: {e}", p.display())))?
                .filter_map(|e| e.ok().map(|e| e.path()))
                .filter(|f| {
                    f.extension()
                        .and_then(|e| e.to_str())
                        .is_some_and(|e| IMAGE_EXTENSIONS.contains(&e.to_ascii_lowercase().as_str()))
                })
                .collect();
            found.sort();
            out.extend(found);
        } else {
            out.push(p);
        }
    }
    Ok(out)
}

impl PipelineConfig {
    /// Builds and validates a configuration from dotted keys. Unknown keys
    /// are errors.
    pub fn from_map(map: &ConfigMap) -> Result<Self> {
        let mut cfg = PipelineConfig::default();
        let mut period: Option<usize> = None;
        let mut mode: Option<String> = None;
        let mut ablation: Option<Value> = None;

        for (key, v) in map {
            let k = key.as_str();
            match k {
                "input" => cfg.inputs = paths(k, v)?,
                "depth" => cfg.depths = paths(k, v)?,
                "depth_kind" => cfg.depth_kind = kebab(k, v)?,
                "depth_prior" => cfg.depth_prior = kebab(k, v)?,
                "profile" => cfg.profile = kebab(k, v)?,
                "resize" => {
                    cfg.resize = match v {
                        Value::Null => None,
                        Value::Array(wh) if wh.len() == 2 => {
                            Some((count(k, &wh[0])?, count(k, &wh[1])?))
                        }
                        _ => parse_resize(string(k, v)?)?,
                    };
                    if cfg.resize.is_some_and(|(w, h)| w == 0 || h == 0) {
                        return Err(CliError::config("resize: dimensions must be positive"));
                    }
                }
                "out" => cfg.out = PathBuf::from(string(k, v)?),
                "threads" => {
                    let n = count(k, v)?;
                    cfg.threads = (n > 0).then_some(n);
                }
                "export_layers" => cfg.export_layers = boolean(k, v)?,
                "trajectory" => {
                    cfg.trajectory = match v {
                        Value::Null => None,
                        _ => Some(parse_trajectory(string(k, v)?)?),
                    }
                }
                "ablation" => ablation = Some(v.clone()),
                "output.bit_depth" => {
                    cfg.bit_depth = match count(k, v)? {
                        8 => PngDepth::Eight,
                        16 => PngDepth::Sixteen,
                        other => return Err(CliError::config(format!("{k}: must be 8 or 16, got {other}"))),
                    }
                }
                "decomposition.albedo_radius" => cfg.decomposition.albedo_radius = count(k, v)?,
                "decomposition.albedo_eps" => cfg.decomposition.albedo_eps = num(k, v)?,
                "decomposition.shading_radius" => cfg.decomposition.shading_radius = count(k, v)?,
                "decomposition.shading_eps" => cfg.decomposition.shading_eps = num(k, v)?,
                "retargeting.gamma" => cfg.retargeting.gamma = num(k, v)?,
                "retargeting.trunc_lo" => cfg.retargeting.trunc_lo = num(k, v)?,
                "retargeting.trunc_hi" => cfg.retargeting.trunc_hi = num(k, v)?,
                "retargeting.detail_gain" => cfg.retargeting.detail_gain = num(k, v)?,
                "retargeting.alpha_shading" => cfg.retargeting.alpha_shading = num(k, v)?,
                "retargeting.beta_texture" => cfg.retargeting.beta_texture = num(k, v)?,
                "retargeting.albedo_contrast" => cfg.retargeting.albedo_contrast = num(k, v)?,
                "retargeting.albedo_pivot" => {
                    cfg.retargeting.albedo_pivot = match v {
                        Value::Null => None,
                        _ => Some(num(k, v)?),
                    }
                }
                "parallax.layer_count" => cfg.parallax.layer_count = count(k, v)?,
                "parallax.gain_px" => cfg.parallax.gain_px = num(k, v)?,
                "parallax.mode" => mode = Some(string(k, v)?.replace('_', "-")),
                "parallax.period" => period = Some(count(k, v)?),
                _ => return Err(CliError::config(format!("unknown key {key:?}"))),
            }
        }

        cfg.parallax.mode = match (mode.as_deref(), period) {
            (None | Some("head-coupled"), None) => ParallaxMode::HeadCoupled,
            (Some("head-coupled"), Some(_)) => {
                return Err(CliError::config("parallax.period only applies to autonomous mode"))
            }
            (None | Some("autonomous"), Some(period)) => ParallaxMode::Autonomous { period },
            (Some("autonomous"), None) => ParallaxMode::Autonomous { period: 32 },
            (Some(other), _) => return Err(CliError::config(format!("parallax.mode: unknown value {other:?}"))),
        };

        if let Some(v) = ablation {
            let s = match &v {
                Value::Array(items) => items
                    .iter()
                    .map(|i| match i {
                        Value::String(s) => s.clone(),
                        other => other.to_string(),
                    })
                    .collect::<Vec<_>>()
                    .join(","),
                other => string("ablation", other)?.to_string(),
            };
            match parse_ablation(&s)? {
                Some(a) => cfg.retargeting.ablation = a,
                None => cfg.ablation_sweep = true,
            }
        }

        cfg.inputs = expand_inputs(cfg.inputs)?;
        cfg.validate()?;
        Ok(cfg)
    }

    /// Checks parameter invariants and that referenced files exist.
    pub fn validate(&self) -> Result<()> {
        self.decomposition
            .validate()
            .map_err(|e| CliError::config(e.to_string()))?;
        self.retargeting
            .validate()
            .map_err(|e| CliError::config(e.to_string()))?;
        self.parallax
            .validate()
            .map_err(|e| CliError::config(e.to_string()))?;
        if self.inputs.is_empty() {
            return Err(CliError::config("no input images"));
        }
        if !self.depths.is_empty() && self.depths.len() != self.inputs.len() {
            return Err(CliError::config(format!(
                "{} depth files for {} inputs",
                self.depths.len(),
                self.inputs.len()
            )));
        }
        for p in self.inputs.iter().chain(&self.depths) {
            if !p.is_file() {
                return Err(CliError::config(format!("{} does not exist", p.display())));
            }
        }
        let mut names: Vec<String> = self.inputs.iter().map(|p| output_stem(p)).collect();
        names.sort();
        if let Some(dup) = names.windows(2).find(|w| w[0] == w[1]) {
            return Err(CliError::config(format!("two inputs share the output name {:?}", dup[0])));
        }
        Ok(())
    }

    /// The pose list to render, if any. An autonomous parallax mode without
    /// an explicit trajectory renders one cycle.
    pub fn poses(&self) -> Option<Vec<HeadPose>> {
        match (&self.trajectory, self.parallax.mode) {
            (Some(Trajectory::Sine { frames }), _) => {
                Some(depthcue_core::parallax::autonomous_poses(*frames, *frames))
            }
            (Some(Trajectory::Poses(p)), _) => Some(p.clone()),
            (None, ParallaxMode::Autonomous { period }) => {
                Some(depthcue_core::parallax::autonomous_poses(period, period))
            }
            (None, ParallaxMode::HeadCoupled) => None,
        }
    }
}

/// Per-image output directory name: the input file stem.
pub fn output_stem(path: &Path) -> String {
    path.file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_else(|| "image".to_string())
}
