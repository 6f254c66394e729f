//! Image statistics used by the run reports, the ablation harness and tests.

use crate::error::Result;
use crate::guided::box_mean;
use crate::image::ImageBuffer;

/// Window half-width of the high-pass used by [`detail_variance`].
pub const DETAIL_RADIUS: usize = 2;

pub fn mse(a: &ImageBuffer, b: &ImageBuffer) -> Result<f64> {
    a.expect_same_size(b)?;
    a.expect_channels(b.channels())?;
    let sum: f64 = a
        .data()
        .iter()
        .zip(b.data())
        .map(|(x, y)| (x - y) * (x - y))
        .sum();
    Ok(sum / a.data().len() as f64)
}

/// PSNR in dB for a peak value of 1. Identical inputs give infinity.
pub fn psnr(a: &ImageBuffer, b: &ImageBuffer) -> Result<f64> {
    let m = mse(a, b)?;
    Ok(if m == 0.0 {
        f64::INFINITY
    } else {
        -10.0 * m.log10()
    })
}

fn mean_var<'a>(values: impl Iterator<Item = &'a f64> + Clone) -> (f64, f64) {
    let (sum, n) = values.clone().fold((0.0, 0usize), |(s, n), v| (s + v, n + 1));
    if n == 0 {
        return (0.0, 0.0);
    }
    let mean = sum / n as f64;
    let var = values.map(|v| (v - mean) * (v - mean)).sum::<f64>() / n as f64;
    (mean, var)
}

/// Standard deviation of a single-channel plane.
pub fn rms_contrast(plane: &ImageBuffer) -> f64 {
    mean_var(plane.data().iter()).1.sqrt()
}

/// Variance of the high-pass residual `y - box_mean(y)` over the pixels
/// selected by `region`.
pub fn detail_variance(plane: &ImageBuffer, region: &[bool]) -> f64 {
    let (w, h) = (plane.width(), plane.height());
    let smooth = box_mean(plane.data(), w, h, DETAIL_RADIUS);
    let residual: Vec<f64> = plane
        .data()
        .iter()
        .zip(&smooth)
        .zip(region)
        .filter(|(_, &keep)| keep)
        .map(|((v, s), _)| v - s)
        .collect();
    mean_var(residual.iter()).1
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn psnr_of_identical_is_infinite() {
        let a = ImageBuffer::filled(3, 3, 3, 0.4);
        assert_eq!(psnr(&a, &a).unwrap(), f64::INFINITY);
    }

    #[test]
    fn psnr_known_value() {
        let a = ImageBuffer::filled(2, 2, 1, 0.5);
        let b = ImageBuffer::filled(2, 2, 1, 0.6);
        assert!((psnr(&a, &b).unwrap() - 20.0).abs() < 1e-9);
    }

    #[test]
    fn rms_contrast_of_two_levels() {
        let a = ImageBuffer::new(2, 1, 1, vec![0.2, 0.6]).unwrap();
        assert!((rms_contrast(&a) - 0.2).abs() < 1e-12);
    }

    #[test]
    fn detail_variance_ignores_smooth_ramps_in_interior() {
        let ramp = ImageBuffer::from_fn(16, 16, |x, _| x as f64 / 16.0);
        let interior: Vec<bool> = (0..256)
            .map(|i| (2..14).contains(&(i % 16)) && (2..14).contains(&(i / 16)))
            .collect();
        assert!(detail_variance(&ramp, &interior) < 1e-20);
        let checker = ImageBuffer::from_fn(16, 16, |x, y| ((x + y) % 2) as f64);
        assert!(detail_variance(&checker, &interior) > 0.1);
    }
}
