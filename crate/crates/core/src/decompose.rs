//! Albedo/shading decomposition of the luminance channel.
//!
//! Luminance is modeled as `I_y = A_y * (S_B + S_D)`: a guided-filtered
//! albedo, a smooth base shading layer and a signed detail shading layer.

use serde::{Deserialize, Serialize};

use crate::error::Result;
use crate::guided::{guided_filter_fast, GuidedFilter, GuidedFilterParams};
use crate::image::{chroma_of, luminance_of, ChromaRatios, ImageBuffer, EPS_DIV};

/// Upper bound on the shading plane.
pub const S_MAX: f64 = 4.0;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct DecompParams {
    pub albedo_radius: usize,
    pub albedo_eps: f64,
    pub shading_radius: usize,
    pub shading_eps: f64,
}

impl Default for DecompParams {
    fn default() -> Self {
        Self {
            albedo_radius: 16,
            albedo_eps: 0.02 * 0.02,
            shading_radius: 8,
            shading_eps: 0.1 * 0.1,
        }
    }
}

impl DecompParams {
    pub fn albedo_filter(&self) -> Result<GuidedFilterParams> {
        GuidedFilterParams::new(self.albedo_radius, self.albedo_eps)
    }

    pub fn shading_filter(&self) -> Result<GuidedFilterParams> {
        GuidedFilterParams::new(self.shading_radius, self.shading_eps)
    }

    pub fn validate(&self) -> Result<()> {
        self.albedo_filter()?;
        self.shading_filter()?;
        Ok(())
    }
}

/// Output of [`decompose`].
#[derive(Clone, Debug)]
pub struct Decomposition {
    /// Albedo luminance, in `[EPS_DIV, 1]`.
    pub albedo: ImageBuffer,
    /// Base shading, `>= 0`.
    pub base: ImageBuffer,
    /// Detail shading, signed.
    pub detail: ImageBuffer,
    /// Color-to-luminance ratios of the input image, used to rebuild color.
    pub chroma: ChromaRatios,
    /// Luminance of the input image.
    pub luminance: ImageBuffer,
}

impl Decomposition {
    /// `S_B + S_D`.
    pub fn shading(&self) -> ImageBuffer {
        let data = self
            .base
            .data()
            .iter()
            .zip(self.detail.data())
            .map(|(b, d)| b + d)
            .collect();
        ImageBuffer::from_parts(self.base.width(), self.base.height(), 1, data)
    }
}

/// Filters each RGB channel against the image's own luminance and returns
/// the albedo luminance with the albedo's chroma ratios.
pub fn extract_albedo(rgb: &ImageBuffer, params: &DecompParams) -> Result<(ImageBuffer, ChromaRatios)> {
    let guide = luminance_of(rgb)?;
    let filter = GuidedFilter::new(&guide, params.albedo_filter()?)?;
    let filtered = [0, 1, 2]
        .map(|c| filter.filter(&rgb.channel(c)))
        .into_iter()
        .collect::<Result<Vec<_>>>()?;
    let albedo_rgb = ImageBuffer::from_planes(&[&filtered[0], &filtered[1], &filtered[2]])?;
    let albedo = luminance_of(&albedo_rgb)?.clamped(EPS_DIV, 1.0);
    let chroma = chroma_of(&albedo_rgb, &albedo)?;
    Ok((albedo, chroma))
}

/// `S = I_y / A_y`, clamped to `[0, S_MAX]`.
pub fn derive_shading(luminance: &ImageBuffer, albedo: &ImageBuffer) -> Result<ImageBuffer> {
    luminance.expect_channels(1)?;
    albedo.expect_channels(1)?;
    luminance.expect_same_size(albedo)?;
    let data = luminance
        .data()
        .iter()
        .zip(albedo.data())
        .map(|(&i, &a)| (i / a.max(EPS_DIV)).clamp(0.0, S_MAX))
        .collect();
    Ok(ImageBuffer::from_parts(luminance.width(), luminance.height(), 1, data))
}

/// Self-guided filtering gives the base layer; the residual is the detail.
pub fn split_shading(shading: &ImageBuffer, params: &DecompParams) -> Result<(ImageBuffer, ImageBuffer)> {
    let base = guided_filter_fast(shading, shading, params.shading_filter()?)?;
    let detail = shading
        .data()
        .iter()
        .zip(base.data())
        .map(|(s, b)| s - b)
        .collect();
    let detail = ImageBuffer::from_parts(shading.width(), shading.height(), 1, detail);
    Ok((base, detail))
}

pub fn decompose(rgb: &ImageBuffer, params: &DecompParams) -> Result<Decomposition> {
    params.validate()?;
    let luminance = luminance_of(rgb)?;
    let chroma = chroma_of(rgb, &luminance)?;
    let (albedo, _) = extract_albedo(rgb, params)?;
    let shading = derive_shading(&luminance, &albedo)?;
    let (base, detail) = split_shading(&shading, params)?;
    Ok(Decomposition {
        albedo,
        base,
        detail,
        chroma,
        luminance,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::guided::guided_filter_reference;

    #[test]
    fn uniform_gray() {
        let img = ImageBuffer::filled(9, 7, 3, 0.5);
        let d = decompose(&img, &DecompParams::default()).unwrap();
        for &a in d.albedo.data() {
            assert!((a - 0.5).abs() < 1e-9);
        }
        for &b in d.base.data() {
            assert!((b - 1.0).abs() < 1e-9);
        }
        for &s in d.detail.data() {
            assert!(s.abs() < 1e-9);
        }
    }

    #[test]
    fn black_image_albedo_hits_floor() {
        let img = ImageBuffer::filled(5, 5, 3, 0.0);
        let (a, _) = extract_albedo(&img, &DecompParams::default()).unwrap();
        assert!(a.data().iter().all(|&v| v == EPS_DIV));
        let s = derive_shading(&luminance_of(&img).unwrap(), &a).unwrap();
        assert!(s.data().iter().all(|&v| v == 0.0));
    }

    #[test]
    fn shading_division_cases() {
        let i = ImageBuffer::new(3, 1, 1, vec![0.3, 0.25, 1.0]).unwrap();
        let a = ImageBuffer::new(3, 1, 1, vec![0.3, 0.5, EPS_DIV]).unwrap();
        let s = derive_shading(&i, &a).unwrap();
        assert!((s.data()[0] - 1.0).abs() < 1e-15);
        assert_eq!(s.data()[1], 0.5);
        assert_eq!(s.data()[2], S_MAX);
    }

    #[test]
    fn step_edge_albedo_matches_reference_filter() {
        let img = ImageBuffer::from_fn_rgb(16, 16, |x, _| {
            if x < 8 {
                [0.2, 0.2, 0.2]
            } else {
                [0.8, 0.8, 0.8]
            }
        });
        let params = DecompParams {
            albedo_radius: 4,
            albedo_eps: 0.04,
            ..DecompParams::default()
        };
        let (a, chroma) = extract_albedo(&img, &params).unwrap();
        let guide = luminance_of(&img).unwrap();
        let gp = GuidedFilterParams::new(4, 0.04).unwrap();
        let per_channel: Vec<ImageBuffer> = (0..3)
            .map(|c| guided_filter_reference(&guide, &img.channel(c), gp).unwrap())
            .collect();
        for i in 0..a.pixel_count() {
            let expect = (0.2126 * per_channel[0].data()[i]
                + 0.7152 * per_channel[1].data()[i]
                + 0.0722 * per_channel[2].data()[i])
                .clamp(EPS_DIV, 1.0);
            assert!((a.data()[i] - expect).abs() <= 1e-6);
            for r in chroma.at(i) {
                assert!((r - 1.0).abs() <= 1e-6);
            }
        }
    }

    #[test]
    fn impulse_split_matches_reference() {
        let s = ImageBuffer::from_fn(8, 8, |x, y| if (x, y) == (3, 4) { 2.0 } else { 1.0 });
        let params = DecompParams {
            shading_radius: 2,
            shading_eps: 0.01,
            ..DecompParams::default()
        };
        let (base, detail) = split_shading(&s, &params).unwrap();
        let oracle = guided_filter_reference(&s, &s, GuidedFilterParams::new(2, 0.01).unwrap()).unwrap();
        for i in 0..64 {
            assert!((base.data()[i] - oracle.data()[i]).abs() <= 1e-6);
            assert!((base.data()[i] + detail.data()[i] - s.data()[i]).abs() <= 1e-9);
        }
    }

    #[test]
    fn constant_shading_has_no_detail() {
        let s = ImageBuffer::filled(6, 6, 1, 1.7);
        let (b, d) = split_shading(&s, &DecompParams::default()).unwrap();
        assert!(b.data().iter().all(|&v| (v - 1.7).abs() < 1e-12));
        assert!(d.data().iter().all(|&v| v.abs() < 1e-12));
    }

    #[test]
    fn single_pixel_image() {
        let img = ImageBuffer::from_fn_rgb(1, 1, |_, _| [0.9, 0.4, 0.1]);
        let d = decompose(&img, &DecompParams::default()).unwrap();
        let recon = d.albedo.data()[0] * d.shading().data()[0];
        assert!((recon - d.luminance.data()[0]).abs() < 1e-12);
    }

    #[test]
    fn invalid_params_rejected() {
        let img = ImageBuffer::filled(4, 4, 3, 0.5);
        let p = DecompParams {
            shading_radius: 0,
            ..DecompParams::default()
        };
        assert!(decompose(&img, &p).is_err());
    }
}
