//! Planar floating-point rasters and the color/luminance conversions shared
//! by every stage of the pipeline.
//!
//! All samples are linear light. Values nominally live in `[0, 1]`, but
//! shading planes may exceed 1 and detail planes are signed.

use crate::error::{Error, Result};

/// Division guard for luminance and albedo denominators.
pub const EPS_DIV: f64 = 1e-4;

/// Upper bound for per-channel chroma ratios.
pub const R_MAX: f64 = 16.0;

/// BT.709 luminance weights for linear R, G, B.
pub const LUMA_WEIGHTS: [f64; 3] = [0.2126, 0.7152, 0.0722];

/// A planar, row-major raster of `f64` samples with 1 or 3 channels.
///
/// Plane `c` occupies `data[c * w * h .. (c + 1) * w * h]`. Every sample is
/// finite; constructors reject anything else.
#[derive(Clone, Debug, PartialEq)]
pub struct ImageBuffer {
    width: usize,
    height: usize,
    channels: usize,
    data: Vec<f64>,
}

impl ImageBuffer {
    pub fn new(width: usize, height: usize, channels: usize, data: Vec<f64>) -> Result<Self> {
        if width == 0 || height == 0 {
            return Err(Error::Shape(format!("empty raster {width}x{height}")));
        }
        if channels != 1 && channels != 3 {
            return Err(Error::Shape(format!("{channels} channels; expected 1 or 3")));
        }
        if data.len() != width * height * channels {
            return Err(Error::Shape(format!(
                "{} samples for {width}x{height}x{channels}",
                data.len()
            )));
        }
        if let Some(i) = data.iter().position(|v| !v.is_finite()) {
            return Err(Error::Data(format!("non-finite sample at index {i}")));
        }
        Ok(Self {
            width,
            height,
            channels,
            data,
        })
    }

    /// Builds a buffer from data already known to be well formed.
    pub(crate) fn from_parts(width: usize, height: usize, channels: usize, data: Vec<f64>) -> Self {
        debug_assert!(width > 0 && height > 0);
        debug_assert_eq!(data.len(), width * height * channels);
        debug_assert!(data.iter().all(|v| v.is_finite()));
        Self {
            width,
            height,
            channels,
            data,
        }
    }

    /// A buffer with every sample set to `value`.
    ///
    /// # Panics
    /// If a dimension is zero, `channels` is not 1 or 3, or `value` is not finite.
    pub fn filled(width: usize, height: usize, channels: usize, value: f64) -> Self {
        Self::new(width, height, channels, vec![value; width * height * channels])
            .expect("invalid fill parameters")
    }

    /// A single-channel buffer evaluated per pixel.
    ///
    /// # Panics
    /// If a dimension is zero or `f` returns a non-finite value.
    pub fn from_fn(width: usize, height: usize, f: impl Fn(usize, usize) -> f64) -> Self {
        let mut data = Vec::with_capacity(width * height);
        for y in 0..height {
            for x in 0..width {
                data.push(f(x, y));
            }
        }
        Self::new(width, height, 1, data).expect("invalid generated plane")
    }

    /// A three-channel buffer evaluated per pixel.
    ///
    /// # Panics
    /// If a dimension is zero or `f` returns a non-finite value.
    pub fn from_fn_rgb(width: usize, height: usize, f: impl Fn(usize, usize) -> [f64; 3]) -> Self {
        let n = width * height;
        let mut data = vec![0.0; n * 3];
        for y in 0..height {
            for x in 0..width {
                let px = f(x, y);
                for (c, v) in px.into_iter().enumerate() {
                    data[c * n + y * width + x] = v;
                }
            }
        }
        Self::new(width, height, 3, data).expect("invalid generated image")
    }

    /// Stacks single-channel planes of equal size into one buffer.
    pub fn from_planes(planes: &[&ImageBuffer]) -> Result<Self> {
        let first = planes
            .first()
            .ok_or_else(|| Error::Shape("no planes".into()))?;
        let mut data = Vec::with_capacity(first.pixel_count() * planes.len());
        for p in planes {
            p.expect_channels(1)?;
            first.expect_same_size(p)?;
            data.extend_from_slice(&p.data);
        }
        Self::new(first.width, first.height, planes.len(), data)
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn channels(&self) -> usize {
        self.channels
    }

    pub fn pixel_count(&self) -> usize {
        self.width * self.height
    }

    /// All samples, plane after plane.
    pub fn data(&self) -> &[f64] {
        &self.data
    }

    pub fn into_data(self) -> Vec<f64> {
        self.data
    }

    pub fn plane(&self, c: usize) -> &[f64] {
        let n = self.pixel_count();
        &self.data[c * n..(c + 1) * n]
    }

    /// Extracts channel `c` as its own single-channel buffer.
    pub fn channel(&self, c: usize) -> ImageBuffer {
        Self::from_parts(self.width, self.height, 1, self.plane(c).to_vec())
    }

    pub fn get(&self, x: usize, y: usize, c: usize) -> f64 {
        self.data[c * self.pixel_count() + y * self.width + x]
    }

    /// Applies `f` to every sample. `f` must map finite values to finite values.
    pub(crate) fn map(&self, f: impl Fn(f64) -> f64) -> ImageBuffer {
        Self::from_parts(
            self.width,
            self.height,
            self.channels,
            self.data.iter().map(|&v| f(v)).collect(),
        )
    }

    /// Copy of this buffer with every sample clamped to `[lo, hi]`.
    pub fn clamped(&self, lo: f64, hi: f64) -> ImageBuffer {
        self.map(|v| v.clamp(lo, hi))
    }

    pub fn min_max(&self) -> (f64, f64) {
        self.data
            .iter()
            .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &v| {
                (lo.min(v), hi.max(v))
            })
    }

    pub fn same_size(&self, other: &ImageBuffer) -> bool {
        self.width == other.width && self.height == other.height
    }

    pub fn expect_same_size(&self, other: &ImageBuffer) -> Result<()> {
        if self.same_size(other) {
            Ok(())
        } else {
            Err(Error::Shape(format!(
                "{}x{} vs {}x{}",
                self.width, self.height, other.width, other.height
            )))
        }
    }

    pub fn expect_channels(&self, channels: usize) -> Result<()> {
        if self.channels == channels {
            Ok(())
        } else {
            Err(Error::Shape(format!(
                "{} channels; expected {channels}",
                self.channels
            )))
        }
    }
}

/// Per-pixel channel-to-luminance ratios used to carry color through
/// luminance-only processing.
#[derive(Clone, Debug, PartialEq)]
pub struct ChromaRatios {
    width: usize,
    height: usize,
    ratios: [Vec<f64>; 3],
}

impl ChromaRatios {
    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn plane(&self, c: usize) -> &[f64] {
        &self.ratios[c]
    }

    /// Ratios at pixel `i` (row-major index).
    pub fn at(&self, i: usize) -> [f64; 3] {
        [self.ratios[0][i], self.ratios[1][i], self.ratios[2][i]]
    }

    /// Rebuilds color from a luminance plane: `c = ratio * y`, clamped to `[0, 1]`.
    pub fn colorize(&self, y: &ImageBuffer) -> Result<ImageBuffer> {
        y.expect_channels(1)?;
        if y.width() != self.width || y.height() != self.height {
            return Err(Error::Shape(format!(
                "chroma {}x{} vs luminance {}x{}",
                self.width,
                self.height,
                y.width(),
                y.height()
            )));
        }
        let mut data = Vec::with_capacity(y.pixel_count() * 3);
        for ratio in &self.ratios {
            data.extend(
                ratio
                    .iter()
                    .zip(y.data())
                    .map(|(r, l)| (r * l).clamp(0.0, 1.0)),
            );
        }
        Ok(ImageBuffer::from_parts(self.width, self.height, 3, data))
    }
}

/// sRGB electro-optical transfer function (encoded to linear).
pub fn srgb_to_linear(v: f64) -> f64 {
    if v <= 0.04045 {
        v / 12.92
    } else {
        ((v + 0.055) / 1.055).powf(2.4)
    }
}

/// Inverse of [`srgb_to_linear`].
pub fn linear_to_srgb(v: f64) -> f64 {
    if v <= 0.0031308 {
        v * 12.92
    } else {
        1.055 * v.powf(1.0 / 2.4) - 0.055
    }
}

/// BT.709 luminance without clamping.
pub fn luminance_unclamped(img: &ImageBuffer) -> Result<ImageBuffer> {
    img.expect_channels(3)?;
    let (r, g, b) = (img.plane(0), img.plane(1), img.plane(2));
    let data = (0..img.pixel_count())
        .map(|i| LUMA_WEIGHTS[0] * r[i] + LUMA_WEIGHTS[1] * g[i] + LUMA_WEIGHTS[2] * b[i])
        .collect();
    Ok(ImageBuffer::from_parts(img.width(), img.height(), 1, data))
}

/// BT.709 luminance of a linear RGB buffer, clamped to `[0, 1]`.
pub fn luminance_of(img: &ImageBuffer) -> Result<ImageBuffer> {
    Ok(luminance_unclamped(img)?.clamped(0.0, 1.0))
}

/// Channel-to-luminance ratios of `img` relative to `y`.
///
/// Pixels darker than [`EPS_DIV`] get neutral `(1, 1, 1)` ratios.
pub fn chroma_of(img: &ImageBuffer, y: &ImageBuffer) -> Result<ChromaRatios> {
    img.expect_channels(3)?;
    y.expect_channels(1)?;
    img.expect_same_size(y)?;
    let luma = y.data();
    let ratios = [0, 1, 2].map(|c| {
        img.plane(c)
            .iter()
            .zip(luma)
            .map(|(&v, &l)| {
                if l < EPS_DIV {
                    1.0
                } else {
                    (v / l).clamp(0.0, R_MAX)
                }
            })
            .collect::<Vec<_>>()
    });
    Ok(ChromaRatios {
        width: img.width(),
        height: img.height(),
        ratios,
    })
}
