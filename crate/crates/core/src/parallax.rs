//! Layered motion parallax.
//!
//! The enhanced image is cut into depth layers. Each layer is translated in
//! proportion to the head offset and to its nearness relative to a fixation
//! plane, then the layers are composited far to near. The far-most layer is
//! the fixation plane, so the background stays put and nearer layers move
//! faster.

use std::fs;
use std::path::Path;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::depth::DepthProfile;
use crate::error::{Error, Result};
use crate::image::ImageBuffer;
use crate::io::{load_rgba_png, save_rgba_png};

/// Iteration cap for background hole filling.
pub const HOLE_FILL_ITERATIONS: usize = 256;

pub const MANIFEST_FILE: &str = "manifest.json";

#[derive(Clone, Debug, PartialEq)]
pub struct Layer {
    /// Straight (non-premultiplied) linear RGB.
    pub color: ImageBuffer,
    pub alpha: ImageBuffer,
    /// Representative nearness of the layer.
    pub nearness: f64,
}

/// Depth layers ordered far to near.
#[derive(Clone, Debug, PartialEq)]
pub struct LayerStack {
    layers: Vec<Layer>,
    width: usize,
    height: usize,
    fixation_nearness: f64,
}

impl LayerStack {
    /// Validates ordering, sizes and coverage: layers strictly ascending in
    /// nearness and a fully opaque far-most layer.
    pub fn new(layers: Vec<Layer>, fixation_nearness: f64) -> Result<Self> {
        let first = layers
            .first()
            .ok_or_else(|| Error::Data("layer stack needs at least one layer".into()))?;
        let (width, height) = (first.color.width(), first.color.height());
        for (i, layer) in layers.iter().enumerate() {
            layer.color.expect_channels(3)?;
            layer.alpha.expect_channels(1)?;
            layer.color.expect_same_size(&layer.alpha)?;
            if layer.color.width() != width || layer.color.height() != height {
                return Err(Error::Shape(format!("layer {i} size differs from layer 0")));
            }
            if !(0.0..=1.0).contains(&layer.nearness) {
                return Err(Error::Data(format!("layer {i} nearness {}", layer.nearness)));
            }
            if layer.alpha.data().iter().any(|a| !(0.0..=1.0).contains(a)) {
                return Err(Error::Data(format!("layer {i} alpha outside [0, 1]")));
            }
        }
        if layers.windows(2).any(|w| w[0].nearness >= w[1].nearness) {
            return Err(Error::Data("layers must be strictly ascending in nearness".into()));
        }
        if first.alpha.data().iter().any(|&a| a != 1.0) {
            return Err(Error::Data("far-most layer must be fully opaque".into()));
        }
        if !(0.0..=1.0).contains(&fixation_nearness) {
            return Err(Error::Data(format!("fixation nearness {fixation_nearness}")));
        }
        Ok(Self {
            layers,
            width,
            height,
            fixation_nearness,
        })
    }

    pub fn layers(&self) -> &[Layer] {
        &self.layers
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn fixation_nearness(&self) -> f64 {
        self.fixation_nearness
    }

    /// Alpha-over composite of the unshifted layers.
    pub fn flatten(&self) -> ImageBuffer {
        let n = self.width * self.height;
        let mut out = vec![0.0; n * 3];
        for layer in &self.layers {
            let a = layer.alpha.data();
            for c in 0..3 {
                let src = layer.color.plane(c);
                let dst = &mut out[c * n..(c + 1) * n];
                for i in 0..n {
                    dst[i] = a[i] * src[i] + (1.0 - a[i]) * dst[i];
                }
            }
        }
        ImageBuffer::from_parts(self.width, self.height, 3, out)
    }
}

/// Normalized head offset, each component clamped to `[-1, 1]`.
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct HeadPose {
    hx: f64,
    hy: f64,
}

impl HeadPose {
    pub const CENTER: HeadPose = HeadPose { hx: 0.0, hy: 0.0 };

    /// Non-finite components become 0.
    pub fn new(hx: f64, hy: f64) -> Self {
        let sanitize = |v: f64| if v.is_finite() { v.clamp(-1.0, 1.0) } else { 0.0 };
        Self {
            hx: sanitize(hx),
            hy: sanitize(hy),
        }
    }

    pub fn hx(&self) -> f64 {
        self.hx
    }

    pub fn hy(&self) -> f64 {
        self.hy
    }

    pub fn scaled(&self, t: f64) -> Self {
        Self::new(self.hx * t, self.hy * t)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case", tag = "kind")]
pub enum ParallaxMode {
    /// Pose supplied externally (viewer or trajectory file).
    HeadCoupled,
    /// Sinusoidal sway with the given period in frames.
    Autonomous { period: usize },
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ParallaxParams {
    pub layer_count: usize,
    /// Displacement in pixels per unit head offset at unit relative nearness.
    pub gain_px: f64,
    pub mode: ParallaxMode,
}

impl Default for ParallaxParams {
    fn default() -> Self {
        Self {
            layer_count: 4,
            gain_px: 24.0,
            mode: ParallaxMode::HeadCoupled,
        }
    }
}

impl ParallaxParams {
    pub fn validate(&self) -> Result<()> {
        if self.layer_count < 1 {
            return Err(Error::Param("layer_count must be >= 1".into()));
        }
        if !(self.gain_px >= 0.0 && self.gain_px.is_finite()) {
            return Err(Error::Param(format!("gain_px must be >= 0, got {}", self.gain_px)));
        }
        if let ParallaxMode::Autonomous { period } = self.mode {
            if period == 0 {
                return Err(Error::Param("autonomous period must be >= 1".into()));
            }
        }
        Ok(())
    }
}

/// Screen displacement of a layer: linear in head offset and in nearness
/// relative to the fixation plane.
pub fn displacement(nearness: f64, pose: HeadPose, gain_px: f64, fixation: f64) -> (f64, f64) {
    let k = gain_px * (nearness - fixation);
    (k * pose.hx, k * pose.hy)
}

/// Cuts an image into depth layers.
///
/// Continuous profiles are quantized into `layer_count` equal-width nearness
/// bins; two-layer profiles give background and foreground. Empty bins are
/// dropped. The far-most layer is made opaque and hole-filled.
pub fn build_layers(rgb: &ImageBuffer, profile: &DepthProfile, params: &ParallaxParams) -> Result<LayerStack> {
    params.validate()?;
    rgb.expect_channels(3)?;
    if profile.width() != rgb.width() || profile.height() != rgb.height() {
        return Err(Error::Shape(format!(
            "depth profile {}x{} vs image {}x{}",
            profile.width(),
            profile.height(),
            rgb.width(),
            rgb.height()
        )));
    }
    let nearness = profile.nearness_plane();
    let (bin_of, bins): (Vec<usize>, usize) = match profile {
        DepthProfile::TwoLayer(p) => (p.mask().iter().map(|&fg| fg as usize).collect(), 2),
        DepthProfile::Continuous(_) => {
            let count = params.layer_count;
            (
                nearness
                    .iter()
                    .map(|&d| ((d * count as f64) as usize).min(count - 1))
                    .collect(),
                count,
            )
        }
    };

    let mut sums = vec![0.0; bins];
    let mut counts = vec![0usize; bins];
    for (&b, &d) in bin_of.iter().zip(&nearness) {
        sums[b] += d;
        counts[b] += 1;
    }
    let (w, h) = (rgb.width(), rgb.height());
    let occupied: Vec<usize> = (0..bins).filter(|&b| counts[b] > 0).collect();
    let far_bin = occupied[0];

    let mut layers = Vec::with_capacity(occupied.len());
    for &b in &occupied {
        let member: Vec<bool> = bin_of.iter().map(|&x| x == b).collect();
        let (color, alpha) = if b == far_bin {
            (fill_holes(rgb, &member), ImageBuffer::filled(w, h, 1, 1.0))
        } else {
            let alpha = member.iter().map(|&m| if m { 1.0 } else { 0.0 }).collect();
            (rgb.clone(), ImageBuffer::from_parts(w, h, 1, alpha))
        };
        let nearness = match profile {
            DepthProfile::TwoLayer(p) if b == 0 => p.bg_nearness(),
            DepthProfile::TwoLayer(p) => p.fg_nearness(),
            DepthProfile::Continuous(_) => sums[b] / counts[b] as f64,
        };
        layers.push(Layer {
            color,
            alpha,
            nearness,
        });
    }
    let fixation = layers[0].nearness;
    LayerStack::new(layers, fixation)
}

/// Extends the colors of `known` pixels into the rest of the image by
/// frontier diffusion: each pass assigns every unknown pixel adjacent to a
/// known one the mean of its known 4-neighbors. Pixels still unknown after
/// [`HOLE_FILL_ITERATIONS`] passes take the mean known color.
fn fill_holes(rgb: &ImageBuffer, known: &[bool]) -> ImageBuffer {
    let (w, h) = (rgb.width(), rgb.height());
    let n = w * h;
    let mut color: Vec<[f64; 3]> = (0..n)
        .map(|i| [rgb.plane(0)[i], rgb.plane(1)[i], rgb.plane(2)[i]])
        .collect();
    let mut known = known.to_vec();
    let neighbors = |i: usize| {
        let (x, y) = (i % w, i / w);
        [
            (y > 0).then(|| i - w),
            (x > 0).then(|| i - 1),
            (x + 1 < w).then(|| i + 1),
            (y + 1 < h).then(|| i + w),
        ]
    };

    let mut frontier: Vec<usize> = (0..n)
        .filter(|&i| !known[i] && neighbors(i).into_iter().flatten().any(|j| known[j]))
        .collect();
    let mut iterations = 0;
    while !frontier.is_empty() && iterations < HOLE_FILL_ITERATIONS {
        let values: Vec<[f64; 3]> = frontier
            .iter()
            .map(|&i| {
                let mut acc = [0.0; 3];
                let mut k = 0.0;
                for j in neighbors(i).into_iter().flatten().filter(|&j| known[j]) {
                    for c in 0..3 {
                        acc[c] += color[j][c];
                    }
                    k += 1.0;
                }
                acc.map(|v| v / k)
            })
            .collect();
        for (&i, v) in frontier.iter().zip(values) {
            color[i] = v;
            known[i] = true;
        }
        let mut next: Vec<usize> = frontier
            .iter()
            .flat_map(|&i| neighbors(i).into_iter().flatten())
            .filter(|&j| !known[j])
            .collect();
        next.sort_unstable();
        next.dedup();
        frontier = next;
        iterations += 1;
    }

    if known.iter().any(|k| !k) {
        let mut mean = [0.0; 3];
        let mut count = 0.0;
        for (i, px) in color.iter().enumerate() {
            if known[i] {
                for c in 0..3 {
                    mean[c] += px[c];
                }
                count += 1.0;
            }
        }
        let mean = mean.map(|v| v / count);
        for (i, px) in color.iter_mut().enumerate() {
            if !known[i] {
                *px = mean;
            }
        }
    }

    let mut data = vec![0.0; n * 3];
    for (i, px) in color.iter().enumerate() {
        for c in 0..3 {
            data[c * n + i] = px[c];
        }
    }
    ImageBuffer::from_parts(w, h, 3, data)
}

/// Bilinear taps for sampling at `s`: `(index, weight)` pairs, with indices
/// possibly outside `[0, len)`.
#[inline]
fn taps(s: f64) -> [(isize, f64); 2] {
    let i0 = s.floor();
    let f = s - i0;
    [(i0 as isize, 1.0 - f), (i0 as isize + 1, f)]
}

/// Renders the stack for one head pose.
///
/// Each layer is translated by its [`displacement`] with bilinear
/// resampling of premultiplied color, then composited far to near. The
/// far-most layer clamps at the border; other layers are transparent
/// outside the frame.
pub fn render_frame(stack: &LayerStack, pose: HeadPose, gain_px: f64) -> ImageBuffer {
    let (w, h) = (stack.width, stack.height);
    let n = w * h;
    let mut out = vec![[0.0f64; 3]; n];

    for (li, layer) in stack.layers.iter().enumerate() {
        let (dx, dy) = displacement(layer.nearness, pose, gain_px, stack.fixation_nearness);
        let clamp_edges = li == 0;
        let alpha = layer.alpha.data();
        let planes = [layer.color.plane(0), layer.color.plane(1), layer.color.plane(2)];
        out.par_chunks_mut(w).enumerate().for_each(|(y, row)| {
            let ys = taps(y as f64 - dy);
            for (x, dst) in row.iter_mut().enumerate() {
                let xs = taps(x as f64 - dx);
                let mut a_acc = 0.0;
                let mut c_acc = [0.0; 3];
                for &(sy, wy) in &ys {
                    if wy == 0.0 {
                        continue;
                    }
                    let sy = if clamp_edges {
                        sy.clamp(0, h as isize - 1)
                    } else if sy < 0 || sy >= h as isize {
                        continue;
                    } else {
                        sy
                    };
                    for &(sx, wx) in &xs {
                        if wx == 0.0 {
                            continue;
                        }
                        let sx = if clamp_edges {
                            sx.clamp(0, w as isize - 1)
                        } else if sx < 0 || sx >= w as isize {
                            continue;
                        } else {
                            sx
                        };
                        let i = sy as usize * w + sx as usize;
                        let wt = wx * wy;
                        let a = alpha[i] * wt;
                        a_acc += a;
                        for c in 0..3 {
                            c_acc[c] += a * planes[c][i];
                        }
                    }
                }
                for c in 0..3 {
                    dst[c] = c_acc[c] + (1.0 - a_acc) * dst[c];
                }
            }
        });
    }

    let mut data = vec![0.0; n * 3];
    for (i, px) in out.iter().enumerate() {
        for c in 0..3 {
            data[c * n + i] = px[c];
        }
    }
    ImageBuffer::from_parts(w, h, 3, data)
}

/// One frame per pose.
pub fn render_trajectory(stack: &LayerStack, poses: &[HeadPose], gain_px: f64) -> Vec<ImageBuffer> {
    poses
        .iter()
        .map(|&pose| render_frame(stack, pose, gain_px))
        .collect()
}

/// Horizontal sinusoidal sway: `hx = sin(2 pi (i mod period) / period)`.
pub fn autonomous_poses(period: usize, frames: usize) -> Vec<HeadPose> {
    let period = period.max(1);
    (0..frames)
        .map(|i| {
            let phase = (i % period) as f64 / period as f64;
            HeadPose::new((std::f64::consts::TAU * phase).sin(), 0.0)
        })
        .collect()
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ManifestLayer {
    pub file: String,
    pub nearness: f64,
}

/// The `manifest.json` written next to exported layer PNGs.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Manifest {
    pub width: usize,
    pub height: usize,
    pub fixation_nearness: f64,
    pub gain_px: f64,
    pub layers: Vec<ManifestLayer>,
}

/// Writes one straight-alpha RGBA PNG per layer plus `manifest.json`.
pub fn export_stack(stack: &LayerStack, gain_px: f64, dir: impl AsRef<Path>) -> Result<Manifest> {
    let dir = dir.as_ref();
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let mut entries = Vec::with_capacity(stack.layers.len());
    for (i, layer) in stack.layers.iter().enumerate() {
        let file = format!("layer_{i:02}.png");
        save_rgba_png(&layer.color, &layer.alpha, dir.join(&file))?;
        entries.push(ManifestLayer {
            file,
            nearness: layer.nearness,
        });
    }
    let manifest = Manifest {
        width: stack.width,
        height: stack.height,
        fixation_nearness: stack.fixation_nearness,
        gain_px,
        layers: entries,
    };
    let json = serde_json::to_string_pretty(&manifest)
        .map_err(|e| Error::format("manifest", e))?;
    let path = dir.join(MANIFEST_FILE);
    fs::write(&path, json).map_err(|e| Error::io(&path, e))?;
    Ok(manifest)
}

/// Reads a stack written by [`export_stack`].
pub fn import_stack(dir: impl AsRef<Path>) -> Result<(LayerStack, Manifest)> {
    let dir = dir.as_ref();
    let path = dir.join(MANIFEST_FILE);
    let text = fs::read_to_string(&path).map_err(|e| Error::io(&path, e))?;
    let manifest: Manifest =
        serde_json::from_str(&text).map_err(|e| Error::format("manifest", e))?;
    let mut layers = Vec::with_capacity(manifest.layers.len());
    for entry in &manifest.layers {
        let (color, alpha) = load_rgba_png(dir.join(&entry.file))?;
        if color.width() != manifest.width || color.height() != manifest.height {
            return Err(Error::Shape(format!(
                "{} is {}x{}, manifest says {}x{}",
                entry.file,
                color.width(),
                color.height(),
                manifest.width,
                manifest.height
            )));
        }
        layers.push(Layer {
            color,
            alpha,
            nearness: entry.nearness,
        });
    }
    let stack = LayerStack::new(layers, manifest.fixation_nearness)?;
    Ok((stack, manifest))
}
