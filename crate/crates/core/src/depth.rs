//! Depth analysis: ingest or estimate a per-pixel nearness map and derive
//! the two-layer or continuous depth profile that gates the depth-weighted
//! operators.

use std::collections::VecDeque;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::image::ImageBuffer;
use crate::io::{decode_pfm, decode_png, read_bytes, sniff, Container};
use crate::resample::resize_bilinear;

/// Number of histogram bins used for the foreground/background split.
pub const OTSU_BINS: usize = 256;

/// Per-pixel nearness in `[0, 1]`; 1 is nearest to the viewer.
#[derive(Clone, Debug, PartialEq)]
pub struct DepthMap {
    width: usize,
    height: usize,
    nearness: Vec<f64>,
}

impl DepthMap {
    pub fn new(width: usize, height: usize, nearness: Vec<f64>) -> Result<Self> {
        if width == 0 || height == 0 || nearness.len() != width * height {
            return Err(Error::Shape(format!(
                "{} nearness samples for {width}x{height}",
                nearness.len()
            )));
        }
        if let Some(i) = nearness.iter().position(|v| !(0.0..=1.0).contains(v)) {
            return Err(Error::Data(format!(
                "nearness {} at index {i} outside [0, 1]",
                nearness[i]
            )));
        }
        Ok(Self {
            width,
            height,
            nearness,
        })
    }

    /// # Panics
    /// If a dimension is zero or `f` leaves `[0, 1]`.
    pub fn from_fn(width: usize, height: usize, f: impl Fn(usize, usize) -> f64) -> Self {
        let data = (0..height)
            .flat_map(|y| (0..width).map(move |x| (x, y)))
            .map(|(x, y)| f(x, y))
            .collect();
        Self::new(width, height, data).expect("invalid generated depth map")
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn nearness(&self) -> &[f64] {
        &self.nearness
    }

    pub fn get(&self, x: usize, y: usize) -> f64 {
        self.nearness[y * self.width + x]
    }

    pub fn to_image(&self) -> ImageBuffer {
        ImageBuffer::from_parts(self.width, self.height, 1, self.nearness.clone())
    }
}

/// How raw depth-file values relate to distance.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum DepthKind {
    /// Larger values are nearer.
    Disparity,
    /// Larger values are farther (metric depth).
    Depth,
}

/// Built-in depth estimators used when no depth file is supplied.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum DepthPrior {
    /// Ground-plane prior: the bottom of the frame is nearest.
    #[default]
    VerticalGradient,
}

/// Binary foreground/background split with per-side representative nearness.
#[derive(Clone, Debug, PartialEq)]
pub struct TwoLayerProfile {
    width: usize,
    height: usize,
    mask: Vec<bool>,
    fg_nearness: f64,
    bg_nearness: f64,
    threshold: f64,
}

impl TwoLayerProfile {
    pub fn new(
        width: usize,
        height: usize,
        mask: Vec<bool>,
        fg_nearness: f64,
        bg_nearness: f64,
    ) -> Result<Self> {
        if width == 0 || height == 0 || mask.len() != width * height {
            return Err(Error::Shape(format!(
                "{} mask samples for {width}x{height}",
                mask.len()
            )));
        }
        let in_range = |v: f64| (0.0..=1.0).contains(&v);
        if !(in_range(fg_nearness) && in_range(bg_nearness) && fg_nearness > bg_nearness) {
            return Err(Error::Data(format!(
                "foreground nearness {fg_nearness} must exceed background {bg_nearness}"
            )));
        }
        Ok(Self {
            width,
            height,
            mask,
            fg_nearness,
            bg_nearness,
            threshold: f64::NAN,
        })
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    /// `true` marks foreground pixels.
    pub fn mask(&self) -> &[bool] {
        &self.mask
    }

    pub fn fg_nearness(&self) -> f64 {
        self.fg_nearness
    }

    pub fn bg_nearness(&self) -> f64 {
        self.bg_nearness
    }

    /// Nearness threshold the mask was cut at, or NaN for hand-built masks.
    pub fn threshold(&self) -> f64 {
        self.threshold
    }
}

/// The depth information that drives retargeting and parallax.
#[derive(Clone, Debug, PartialEq)]
pub enum DepthProfile {
    TwoLayer(TwoLayerProfile),
    Continuous(DepthMap),
}

impl DepthProfile {
    pub fn width(&self) -> usize {
        match self {
            DepthProfile::TwoLayer(p) => p.width,
            DepthProfile::Continuous(m) => m.width,
        }
    }

    pub fn height(&self) -> usize {
        match self {
            DepthProfile::TwoLayer(p) => p.height,
            DepthProfile::Continuous(m) => m.height,
        }
    }

    /// Effective nearness per pixel. Two-layer profiles give each side its
    /// representative nearness.
    pub fn nearness_plane(&self) -> Vec<f64> {
        match self {
            DepthProfile::TwoLayer(p) => p
                .mask
                .iter()
                .map(|&fg| if fg { p.fg_nearness } else { p.bg_nearness })
                .collect(),
            DepthProfile::Continuous(m) => m.nearness.clone(),
        }
    }

    /// Foreground membership: the two-layer mask, or nearness >= 0.5.
    pub fn foreground(&self) -> Vec<bool> {
        match self {
            DepthProfile::TwoLayer(p) => p.mask.clone(),
            DepthProfile::Continuous(m) => m.nearness.iter().map(|&d| d >= 0.5).collect(),
        }
    }
}

/// Kind of profile to derive from a depth map.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ProfileKind {
    TwoLayer,
    #[default]
    Continuous,
}

/// Reads raw samples (first channel) from a PFM or PNG depth file.
fn read_depth_samples(path: &Path) -> Result<(usize, usize, Vec<f64>)> {
    let bytes = read_bytes(path)?;
    match sniff(&bytes)? {
        Container::Pfm => {
            let pfm = decode_pfm(&bytes)?;
            let samples = pfm
                .data
                .chunks_exact(pfm.channels)
                .map(|px| px[0] as f64)
                .collect();
            Ok((pfm.width, pfm.height, samples))
        }
        Container::Png => {
            let raster = decode_png(&bytes)?;
            let scale = raster.max_code as f64;
            let samples = raster
                .samples
                .chunks_exact(raster.channels)
                .map(|px| (px[0] * scale).round())
                .collect();
            Ok((raster.width, raster.height, samples))
        }
        Container::Pnm => Err(Error::format(
            "PNM",
            "depth maps must be PFM or PNG",
        )),
    }
}

/// Loads a disparity or depth file and normalizes it to nearness.
pub fn depth_from_file(path: impl AsRef<Path>, kind: DepthKind) -> Result<DepthMap> {
    let (w, h, raw) = read_depth_samples(path.as_ref())?;
    depth_from_raw(w, h, &raw, kind)
}

/// Normalizes raw disparity or depth samples to nearness.
///
/// Non-finite and non-positive samples are invalid and take the value of the
/// nearest valid sample (4-neighborhood breadth-first, row-major seeding).
/// Depth is inverted before the min-max map. A constant map becomes 0.5.
pub fn depth_from_raw(width: usize, height: usize, raw: &[f64], kind: DepthKind) -> Result<DepthMap> {
    if width == 0 || height == 0 || raw.len() != width * height {
        return Err(Error::Shape(format!(
            "{} samples for {width}x{height}",
            raw.len()
        )));
    }
    let values: Vec<Option<f64>> = raw
        .iter()
        .map(|&v| {
            (v.is_finite() && v > 0.0).then(|| match kind {
                DepthKind::Disparity => v,
                DepthKind::Depth => 1.0 / v,
            })
        })
        .collect();
    let filled = fill_invalid(width, height, &values)?;

    let (lo, hi) = filled
        .iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &v| {
            (lo.min(v), hi.max(v))
        });
    let nearness = if hi > lo {
        filled
            .iter()
            .map(|&v| ((v - lo) / (hi - lo)).clamp(0.0, 1.0))
            .collect()
    } else {
        vec![0.5; filled.len()]
    };
    DepthMap::new(width, height, nearness)
}

fn fill_invalid(width: usize, height: usize, values: &[Option<f64>]) -> Result<Vec<f64>> {
    let mut out: Vec<Option<f64>> = values.to_vec();
    let mut queue: VecDeque<usize> = (0..values.len()).filter(|&i| values[i].is_some()).collect();
    if queue.is_empty() {
        return Err(Error::Data("depth map has no valid samples".into()));
    }
    while let Some(i) = queue.pop_front() {
        let (x, y) = (i % width, i / width);
        let v = out[i];
        let neighbors = [
            (y > 0).then(|| i - width),
            (x > 0).then(|| i - 1),
            (x + 1 < width).then(|| i + 1),
            (y + 1 < height).then(|| i + width),
        ];
        for j in neighbors.into_iter().flatten() {
            if out[j].is_none() {
                out[j] = v;
                queue.push_back(j);
            }
        }
    }
    Ok(out.into_iter().map(|v| v.expect("filled")).collect())
}

/// Built-in nearness estimate from a fixed scene prior.
pub fn depth_from_prior(width: usize, height: usize, prior: DepthPrior) -> Result<DepthMap> {
    if width == 0 || height == 0 {
        return Err(Error::Param(format!("prior size {width}x{height}")));
    }
    match prior {
        DepthPrior::VerticalGradient => {
            let denom = (height - 1) as f64;
            Ok(DepthMap::from_fn(width, height, |_, y| {
                if height > 1 {
                    y as f64 / denom
                } else {
                    0.0
                }
            }))
        }
    }
}

/// Histogram bin of a nearness value.
pub fn nearness_bin(d: f64) -> usize {
    ((d * OTSU_BINS as f64) as usize).min(OTSU_BINS - 1)
}

/// Otsu's method over a 256-bin nearness histogram.
///
/// Returns the last background bin `t` maximizing the between-class
/// variance; the earliest `t` wins ties. `None` when every value falls in a
/// single bin.
pub fn otsu_bin(nearness: &[f64]) -> Option<usize> {
    let mut hist = [0u64; OTSU_BINS];
    for &d in nearness {
        hist[nearness_bin(d)] += 1;
    }
    let total = nearness.len() as f64;
    let sum_total: f64 = hist
        .iter()
        .enumerate()
        .map(|(i, &h)| i as f64 * h as f64)
        .sum();

    let mut best: Option<(usize, f64)> = None;
    let mut w_b = 0.0;
    let mut sum_b = 0.0;
    for (t, &h) in hist.iter().enumerate() {
        w_b += h as f64;
        sum_b += t as f64 * h as f64;
        if w_b == 0.0 {
            continue;
        }
        let w_f = total - w_b;
        if w_f == 0.0 {
            break;
        }
        let m_b = sum_b / w_b;
        let m_f = (sum_total - sum_b) / w_f;
        let between = w_b * w_f * (m_b - m_f) * (m_b - m_f);
        if best.is_none_or(|(_, v)| between > v) {
            best = Some((t, between));
        }
    }
    best.map(|(t, _)| t)
}

/// Splits a nearness map into foreground and background with Otsu's method.
pub fn two_layer_from_map(map: &DepthMap) -> Result<TwoLayerProfile> {
    let t = otsu_bin(&map.nearness)
        .ok_or_else(|| Error::Data("no depth separation".into()))?;
    let threshold = (t + 1) as f64 / OTSU_BINS as f64;
    let mask: Vec<bool> = map.nearness.iter().map(|&d| d >= threshold).collect();

    let (mut fg_sum, mut fg_n, mut bg_sum, mut bg_n) = (0.0, 0usize, 0.0, 0usize);
    for (&d, &fg) in map.nearness.iter().zip(&mask) {
        if fg {
            fg_sum += d;
            fg_n += 1;
        } else {
            bg_sum += d;
            bg_n += 1;
        }
    }
    let mut profile = TwoLayerProfile::new(
        map.width,
        map.height,
        mask,
        fg_sum / fg_n as f64,
        bg_sum / bg_n as f64,
    )?;
    profile.threshold = threshold;
    Ok(profile)
}

/// Builds the requested profile kind from a nearness map.
pub fn profile_from_map(map: DepthMap, kind: ProfileKind) -> Result<DepthProfile> {
    match kind {
        ProfileKind::Continuous => Ok(DepthProfile::Continuous(map)),
        ProfileKind::TwoLayer => two_layer_from_map(&map).map(DepthProfile::TwoLayer),
    }
}

/// Bilinear resampling of a nearness map.
pub fn resample_depth(map: &DepthMap, width: usize, height: usize) -> Result<DepthMap> {
    let img = resize_bilinear(&map.to_image(), width, height)?;
    DepthMap::new(
        width,
        height,
        img.into_data().into_iter().map(|v| v.clamp(0.0, 1.0)).collect(),
    )
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    #[test]
    fn disparity_min_max() {
        let m = depth_from_raw(3, 1, &[10.0, 20.0, 30.0], DepthKind::Disparity).unwrap();
        assert_eq!(m.nearness(), &[0.0, 0.5, 1.0]);
    }

    #[test]
    fn depth_is_inverted_then_normalized() {
        let m = depth_from_raw(3, 1, &[1.0, 2.0, 3.0], DepthKind::Depth).unwrap();
        // 1/z = {1, 1/2, 1/3}; min-max gives (1/2 - 1/3) / (1 - 1/3) = 1/4.
        assert_abs_diff_eq!(m.nearness()[0], 1.0, epsilon = 1e-12);
        assert_abs_diff_eq!(m.nearness()[1], 0.25, epsilon = 1e-4);
        assert_abs_diff_eq!(m.nearness()[2], 0.0, epsilon = 1e-12);
    }

    #[test]
    fn constant_map_is_half() {
        let m = depth_from_raw(2, 2, &[4.0; 4], DepthKind::Disparity).unwrap();
        assert!(m.nearness().iter().all(|&v| v == 0.5));
    }

    #[test]
    fn all_invalid_is_data_error() {
        let raw = [f64::INFINITY, 0.0, f64::NAN, -1.0];
        assert!(matches!(
            depth_from_raw(2, 2, &raw, DepthKind::Disparity),
            Err(Error::Data(_))
        ));
    }

    #[test]
    fn invalid_samples_take_nearest_valid() {
        // Row-major seeding: at equal distance the earlier source wins.
        let raw = [
            10.0, f64::INFINITY, 30.0,
            0.0, 0.0, 0.0,
            20.0, 0.0, 40.0,
        ];
        let m = depth_from_raw(3, 3, &raw, DepthKind::Disparity).unwrap();
        let expect = [10.0, 10.0, 30.0, 10.0, 10.0, 30.0, 20.0, 20.0, 40.0];
        for (got, want) in m.nearness().iter().zip(expect) {
            assert_abs_diff_eq!(*got, (want - 10.0) / 30.0, epsilon = 1e-12);
        }
    }

    #[test]
    fn orientation_for_disparity() {
        let raw = [5.0, 80.0, 12.0, 3.0];
        let m = depth_from_raw(2, 2, &raw, DepthKind::Disparity).unwrap();
        assert_eq!(m.nearness()[1], 1.0);
        assert_eq!(m.nearness()[3], 0.0);
    }

    #[test]
    fn vertical_gradient_prior() {
        let m = depth_from_prior(2, 2, DepthPrior::VerticalGradient).unwrap();
        assert_eq!(m.nearness(), &[0.0, 0.0, 1.0, 1.0]);
        let m = depth_from_prior(1, 3, DepthPrior::VerticalGradient).unwrap();
        assert_eq!(m.nearness(), &[0.0, 0.5, 1.0]);
        let m = depth_from_prior(1, 1, DepthPrior::VerticalGradient).unwrap();
        assert_eq!(m.nearness(), &[0.0]);
        assert!(depth_from_prior(0, 4, DepthPrior::VerticalGradient).is_err());
    }

    #[test]
    fn bimodal_split_is_exact() {
        let map = DepthMap::from_fn(8, 4, |x, _| if x < 4 { 0.1 } else { 0.9 });
        let p = two_layer_from_map(&map).unwrap();
        for (i, &fg) in p.mask().iter().enumerate() {
            assert_eq!(fg, i % 8 >= 4);
        }
        assert_abs_diff_eq!(p.fg_nearness(), 0.9, epsilon = 1e-12);
        assert_abs_diff_eq!(p.bg_nearness(), 0.1, epsilon = 1e-12);
    }

    #[test]
    fn constant_map_has_no_separation() {
        let map = DepthMap::from_fn(4, 4, |_, _| 0.5);
        let err = two_layer_from_map(&map).unwrap_err();
        assert!(err.to_string().contains("no depth separation"));
    }

    #[test]
    fn resample_examples() {
        let map = DepthMap::new(2, 1, vec![0.0, 1.0]).unwrap();
        assert_eq!(resample_depth(&map, 3, 1).unwrap().nearness(), &[0.0, 0.5, 1.0]);
        assert_eq!(resample_depth(&map, 2, 1).unwrap(), map);
        let c = DepthMap::from_fn(5, 3, |_, _| 0.37);
        assert!(resample_depth(&c, 11, 7).unwrap().nearness().iter().all(|&v| v == 0.37));
    }

    #[test]
    fn two_layer_rejects_inverted_sides() {
        assert!(TwoLayerProfile::new(1, 1, vec![true], 0.2, 0.8).is_err());
    }

    #[test]
    fn depth_file_formats() {
        let dir = tempfile::tempdir().unwrap();
        let pfm = dir.path().join("d.pfm");
        crate::io::write_pfm(
            &crate::io::PfmImage {
                width: 3,
                height: 1,
                channels: 1,
                data: vec![10.0, f32::INFINITY, 30.0],
            },
            &pfm,
        )
        .unwrap();
        let m = depth_from_file(&pfm, DepthKind::Disparity).unwrap();
        assert_eq!(m.nearness(), &[0.0, 0.0, 1.0]);

        let png_path = dir.path().join("d.png");
        let depth = ImageBuffer::new(3, 1, 1, vec![1000.0 / 65535.0, 2000.0 / 65535.0, 4000.0 / 65535.0])
            .unwrap();
        crate::io::save_image(&depth, &png_path, crate::io::PngDepth::Sixteen).unwrap();
        let m = depth_from_file(&png_path, DepthKind::Depth).unwrap();
        // 1/z = {1, 1/2, 1/4} (up to a common factor): {1, 1/3, 0}.
        assert_abs_diff_eq!(m.nearness()[1], 1.0 / 3.0, epsilon = 1e-9);
    }
}
