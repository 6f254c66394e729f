//! Gray-guide guided filter.
//!
//! For every window `k` of half-width `r` the filter fits a local linear model
//! `q = a_k * guide + b_k` with
//!
//! ```text
//! a_k = cov_k(guide, input) / (var_k(guide) + eps)
//! b_k = mean_k(input) - a_k * mean_k(guide)
//! ```
//!
//! and the output at pixel `i` averages the models of every window that
//! contains `i`. Windows are clipped at the image border; statistics cover
//! only the pixels inside the image.
//!
//! [`guided_filter_reference`] evaluates that definition window by window in
//! `O(n r^2)`. [`guided_filter_fast`] computes the same quantities with
//! clipped box means in `O(n)` and is the one the pipeline uses.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::image::ImageBuffer;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct GuidedFilterParams {
    /// Window half-width in pixels.
    pub radius: usize,
    /// Regularization added to the guide variance.
    pub epsilon: f64,
}

impl GuidedFilterParams {
    pub fn new(radius: usize, epsilon: f64) -> Result<Self> {
        let p = Self { radius, epsilon };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<()> {
        if self.radius < 1 {
            return Err(Error::Param("guided filter radius must be >= 1".into()));
        }
        if !(self.epsilon > 0.0 && self.epsilon.is_finite()) {
            return Err(Error::Param(format!(
                "guided filter epsilon must be > 0, got {}",
                self.epsilon
            )));
        }
        Ok(())
    }
}

fn check_planes(guide: &ImageBuffer, input: &ImageBuffer) -> Result<()> {
    guide.expect_channels(1)?;
    input.expect_channels(1)?;
    guide.expect_same_size(input)
}

#[inline]
fn window(center: usize, radius: usize, len: usize) -> (usize, usize) {
    (center.saturating_sub(radius), (center + radius).min(len - 1))
}

#[inline]
fn slope(cov: f64, var: f64, eps: f64) -> f64 {
    let denom = var + eps;
    if denom > 0.0 {
        cov / denom
    } else {
        0.0
    }
}

/// Mean of `src` over the clipped `(2r+1)^2` window around every pixel.
pub(crate) fn box_mean(src: &[f64], width: usize, height: usize, radius: usize) -> Vec<f64> {
    debug_assert_eq!(src.len(), width * height);

    // Horizontal window sums, one row at a time.
    let mut rows = vec![0.0; width * height];
    rows.par_chunks_mut(width)
        .zip(src.par_chunks(width))
        .for_each(|(dst, row)| {
            let mut prefix = Vec::with_capacity(width + 1);
            prefix.push(0.0);
            let mut acc = 0.0;
            for &v in row {
                acc += v;
                prefix.push(acc);
            }
            for (x, d) in dst.iter_mut().enumerate() {
                let (x0, x1) = window(x, radius, width);
                *d = prefix[x1 + 1] - prefix[x0];
            }
        });

    // Column prefix sums over the row sums.
    let mut prefix = vec![0.0; width * (height + 1)];
    for y in 0..height {
        let (done, rest) = prefix.split_at_mut((y + 1) * width);
        let prev = &done[y * width..];
        let next = &mut rest[..width];
        let cur = &rows[y * width..(y + 1) * width];
        for x in 0..width {
            next[x] = prev[x] + cur[x];
        }
    }

    let mut out = vec![0.0; width * height];
    out.par_chunks_mut(width).enumerate().for_each(|(y, dst)| {
        let (y0, y1) = window(y, radius, height);
        let top = &prefix[y0 * width..(y0 + 1) * width];
        let bottom = &prefix[(y1 + 1) * width..(y1 + 2) * width];
        let rows_in = (y1 - y0 + 1) as f64;
        for (x, d) in dst.iter_mut().enumerate() {
            let (x0, x1) = window(x, radius, width);
            let count = rows_in * (x1 - x0 + 1) as f64;
            *d = (bottom[x] - top[x]) / count;
        }
    });
    out
}

/// A guided filter with the guide statistics precomputed, for filtering
/// several inputs against one guide.
#[derive(Debug)]
pub struct GuidedFilter<'a> {
    guide: &'a ImageBuffer,
    params: GuidedFilterParams,
    mean_guide: Vec<f64>,
    var_guide: Vec<f64>,
}

impl<'a> GuidedFilter<'a> {
    /// Epsilon may be zero here (useful for exactness checks); a window with
    /// zero variance and zero epsilon falls back to `a = 0`.
    pub fn new(guide: &'a ImageBuffer, params: GuidedFilterParams) -> Result<Self> {
        guide.expect_channels(1)?;
        if params.radius < 1 || !(params.epsilon >= 0.0 && params.epsilon.is_finite()) {
            return Err(Error::Param(format!("{params:?}")));
        }
        let (w, h, r) = (guide.width(), guide.height(), params.radius);
        let g = guide.data();
        let mean_guide = box_mean(g, w, h, r);
        let sq: Vec<f64> = g.iter().map(|v| v * v).collect();
        let mean_sq = box_mean(&sq, w, h, r);
        let var_guide = mean_sq
            .iter()
            .zip(&mean_guide)
            .map(|(s, m)| s - m * m)
            .collect();
        Ok(Self {
            guide,
            params,
            mean_guide,
            var_guide,
        })
    }

    pub fn filter(&self, input: &ImageBuffer) -> Result<ImageBuffer> {
        check_planes(self.guide, input)?;
        let (w, h, r) = (input.width(), input.height(), self.params.radius);
        let g = self.guide.data();
        let p = input.data();

        let mean_p = box_mean(p, w, h, r);
        let gp: Vec<f64> = g.iter().zip(p).map(|(a, b)| a * b).collect();
        let mean_gp = box_mean(&gp, w, h, r);

        let n = w * h;
        let mut a = vec![0.0; n];
        let mut b = vec![0.0; n];
        for i in 0..n {
            let cov = mean_gp[i] - self.mean_guide[i] * mean_p[i];
            a[i] = slope(cov, self.var_guide[i], self.params.epsilon);
            b[i] = mean_p[i] - a[i] * self.mean_guide[i];
        }
        let mean_a = box_mean(&a, w, h, r);
        let mean_b = box_mean(&b, w, h, r);
        let out = (0..n).map(|i| mean_a[i] * g[i] + mean_b[i]).collect();
        Ok(ImageBuffer::from_parts(w, h, 1, out))
    }
}

/// Guided filter via clipped box means. Matches [`guided_filter_reference`]
/// to within floating-point rounding.
pub fn guided_filter_fast(
    guide: &ImageBuffer,
    input: &ImageBuffer,
    params: GuidedFilterParams,
) -> Result<ImageBuffer> {
    check_planes(guide, input)?;
    GuidedFilter::new(guide, params)?.filter(input)
}

/// Direct per-window evaluation of the guided filter. Slow; used as the
/// oracle for [`guided_filter_fast`].
pub fn guided_filter_reference(
    guide: &ImageBuffer,
    input: &ImageBuffer,
    params: GuidedFilterParams,
) -> Result<ImageBuffer> {
    check_planes(guide, input)?;
    if params.radius < 1 || !(params.epsilon >= 0.0 && params.epsilon.is_finite()) {
        return Err(Error::Param(format!("{params:?}")));
    }
    let (w, h, r) = (guide.width(), guide.height(), params.radius);
    let g = guide.data();
    let p = input.data();

    let mut a = vec![0.0; w * h];
    let mut b = vec![0.0; w * h];
    for ky in 0..h {
        for kx in 0..w {
            let (x0, x1) = window(kx, r, w);
            let (y0, y1) = window(ky, r, h);
            let idx = || (y0..=y1).flat_map(move |y| (x0..=x1).map(move |x| y * w + x));
            let count = ((x1 - x0 + 1) * (y1 - y0 + 1)) as f64;
            let mg = idx().map(|i| g[i]).sum::<f64>() / count;
            let mp = idx().map(|i| p[i]).sum::<f64>() / count;
            let var = idx().map(|i| (g[i] - mg).powi(2)).sum::<f64>() / count;
            let cov = idx().map(|i| (g[i] - mg) * (p[i] - mp)).sum::<f64>() / count;
            let k = ky * w + kx;
            a[k] = slope(cov, var, params.epsilon);
            b[k] = mp - a[k] * mg;
        }
    }

    let mut out = vec![0.0; w * h];
    for y in 0..h {
        for x in 0..w {
            let (x0, x1) = window(x, r, w);
            let (y0, y1) = window(y, r, h);
            let mut acc = 0.0;
            for ky in y0..=y1 {
                for kx in x0..=x1 {
                    let k = ky * w + kx;
                    acc += a[k] * g[y * w + x] + b[k];
                }
            }
            out[y * w + x] = acc / ((x1 - x0 + 1) * (y1 - y0 + 1)) as f64;
        }
    }
    Ok(ImageBuffer::from_parts(w, h, 1, out))
}
