//! Shading and contrast retargeting.
//!
//! The decomposition layers are adjusted independently and recombined:
//!
//! 1. base shading: truncated power curve,
//! 2. detail shading: linear gain,
//! 3. shading/texture contrast: depth-weighted emphasis of both layers,
//! 4. albedo: linear contrast stretch about a pivot,
//! 5. recomposition `I'_y = A' * (S_B'' + S_D'')` with the original chroma.
//!
//! Each step has an ablation toggle; a disabled step is the exact identity.

use serde::{Deserialize, Serialize};

use crate::decompose::{decompose, DecompParams, Decomposition, S_MAX};
use crate::depth::DepthProfile;
use crate::error::{Error, Result};
use crate::image::{ChromaRatios, ImageBuffer, EPS_DIV};

/// Enable switches for the four retargeting sub-operators, in pipeline order.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Ablation {
    pub base_shading: bool,
    pub detail_shading: bool,
    pub shading_contrast: bool,
    pub albedo_contrast_on: bool,
}

impl Default for Ablation {
    fn default() -> Self {
        Self::all(true)
    }
}

impl Ablation {
    pub const fn all(on: bool) -> Self {
        Self {
            base_shading: on,
            detail_shading: on,
            shading_contrast: on,
            albedo_contrast_on: on,
        }
    }

    /// The first `n` toggles enabled, the rest disabled.
    pub const fn cumulative(n: usize) -> Self {
        Self {
            base_shading: n >= 1,
            detail_shading: n >= 2,
            shading_contrast: n >= 3,
            albedo_contrast_on: n >= 4,
        }
    }

    pub fn as_array(&self) -> [bool; 4] {
        [
            self.base_shading,
            self.detail_shading,
            self.shading_contrast,
            self.albedo_contrast_on,
        ]
    }

    pub fn from_array(a: [bool; 4]) -> Self {
        Self {
            base_shading: a[0],
            detail_shading: a[1],
            shading_contrast: a[2],
            albedo_contrast_on: a[3],
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct RetargetParams {
    /// Exponent of the base-shading power curve.
    pub gamma: f64,
    pub trunc_lo: f64,
    pub trunc_hi: f64,
    /// Linear gain applied to detail shading.
    pub detail_gain: f64,
    /// Depth-weight gain for base-shading contrast, in `[0, 1)`.
    pub alpha_shading: f64,
    /// Depth-weight gain for detail (texture) contrast, in `[0, 1)`.
    pub beta_texture: f64,
    /// Albedo contrast multiplier about the pivot.
    pub albedo_contrast: f64,
    /// Albedo pivot; `None` uses the image's mean albedo.
    pub albedo_pivot: Option<f64>,
    pub ablation: Ablation,
}

impl Default for RetargetParams {
    fn default() -> Self {
        Self {
            gamma: 0.8,
            trunc_lo: 0.05,
            trunc_hi: 2.0,
            detail_gain: 1.8,
            alpha_shading: 0.3,
            beta_texture: 0.4,
            albedo_contrast: 1.25,
            albedo_pivot: None,
            ablation: Ablation::default(),
        }
    }
}

impl RetargetParams {
    /// Parameters under which every operator is the identity while all
    /// toggles stay enabled.
    pub fn identity() -> Self {
        Self {
            gamma: 1.0,
            trunc_lo: 0.0,
            trunc_hi: S_MAX,
            detail_gain: 1.0,
            alpha_shading: 0.0,
            beta_texture: 0.0,
            albedo_contrast: 1.0,
            albedo_pivot: None,
            ablation: Ablation::all(true),
        }
    }

    pub fn validate(&self) -> Result<()> {
        let finite = [
            self.gamma,
            self.trunc_lo,
            self.trunc_hi,
            self.detail_gain,
            self.alpha_shading,
            self.beta_texture,
            self.albedo_contrast,
        ]
        .iter()
        .all(|v| v.is_finite());
        if !finite {
            return Err(Error::Param("retarget parameters must be finite".into()));
        }
        if self.gamma <= 0.0 {
            return Err(Error::Param(format!("gamma must be > 0, got {}", self.gamma)));
        }
        if !(0.0 <= self.trunc_lo && self.trunc_lo < self.trunc_hi && self.trunc_hi <= S_MAX) {
            return Err(Error::Param(format!(
                "truncation bounds must satisfy 0 <= lo < hi <= {S_MAX}, got ({}, {})",
                self.trunc_lo, self.trunc_hi
            )));
        }
        if self.detail_gain < 0.0 {
            return Err(Error::Param("detail_gain must be >= 0".into()));
        }
        for (name, g) in [
            ("alpha_shading", self.alpha_shading),
            ("beta_texture", self.beta_texture),
        ] {
            if !(0.0..1.0).contains(&g) {
                return Err(Error::Param(format!("{name} must be in [0, 1), got {g}")));
            }
        }
        if self.albedo_contrast <= 0.0 {
            return Err(Error::Param("albedo_contrast must be > 0".into()));
        }
        if let Some(p) = self.albedo_pivot {
            if !(p > 0.0 && p < 1.0) {
                return Err(Error::Param(format!("albedo_pivot must be in (0, 1), got {p}")));
            }
        }
        Ok(())
    }
}

/// Truncated power curve `s' = hi * (clamp(s, lo, hi) / hi)^gamma`.
pub fn retarget_base(base: &ImageBuffer, params: &RetargetParams) -> ImageBuffer {
    if !params.ablation.base_shading {
        return base.clone();
    }
    let (lo, hi, gamma) = (params.trunc_lo, params.trunc_hi, params.gamma);
    base.map(|s| {
        let s = s.clamp(lo, hi);
        if gamma == 1.0 {
            s
        } else {
            hi * (s / hi).powf(gamma)
        }
    })
}

/// Linear detail gain.
pub fn boost_detail(detail: &ImageBuffer, params: &RetargetParams) -> ImageBuffer {
    if !params.ablation.detail_shading {
        return detail.clone();
    }
    let gain = params.detail_gain;
    detail.map(|s| gain * s)
}

/// Per-pixel weight `1 + gain * (2d - 1)`: above 1 for near pixels, below 1
/// for far ones, exactly 1 at mid depth.
pub fn depth_weight(profile: &DepthProfile, gain: f64) -> ImageBuffer {
    let data = profile
        .nearness_plane()
        .into_iter()
        .map(|d| 1.0 + gain * (2.0 * d - 1.0))
        .collect();
    ImageBuffer::from_parts(profile.width(), profile.height(), 1, data)
}

fn expect_profile_size(profile: &DepthProfile, img: &ImageBuffer) -> Result<()> {
    if profile.width() == img.width() && profile.height() == img.height() {
        Ok(())
    } else {
        Err(Error::Shape(format!(
            "depth profile {}x{} vs image {}x{}",
            profile.width(),
            profile.height(),
            img.width(),
            img.height()
        )))
    }
}

/// Depth-weighted shading and texture contrast.
///
/// Base shading deviates from the neutral value 1 by `W_alpha` times its
/// input deviation; detail shading is scaled by `W_beta`.
pub fn apply_shading_contrast(
    base: &ImageBuffer,
    detail: &ImageBuffer,
    profile: &DepthProfile,
    params: &RetargetParams,
) -> Result<(ImageBuffer, ImageBuffer)> {
    base.expect_same_size(detail)?;
    expect_profile_size(profile, base)?;
    if !params.ablation.shading_contrast {
        return Ok((base.clone(), detail.clone()));
    }
    let w_alpha = depth_weight(profile, params.alpha_shading);
    let w_beta = depth_weight(profile, params.beta_texture);
    let (w, h) = (base.width(), base.height());
    let new_base = base
        .data()
        .iter()
        .zip(w_alpha.data())
        .map(|(&s, &wa)| if wa == 1.0 { s } else { 1.0 + wa * (s - 1.0) })
        .collect();
    let new_detail = detail
        .data()
        .iter()
        .zip(w_beta.data())
        .map(|(s, wb)| wb * s)
        .collect();
    Ok((
        ImageBuffer::from_parts(w, h, 1, new_base),
        ImageBuffer::from_parts(w, h, 1, new_detail),
    ))
}

fn mean(img: &ImageBuffer) -> f64 {
    img.data().iter().sum::<f64>() / img.pixel_count() as f64
}

/// Albedo pivot in effect for `albedo`: the configured value or the mean.
pub fn albedo_pivot(albedo: &ImageBuffer, params: &RetargetParams) -> f64 {
    params.albedo_pivot.unwrap_or_else(|| mean(albedo))
}

/// Contrast stretch about the pivot, before clamping.
pub fn stretch_albedo_unclamped(albedo: &ImageBuffer, params: &RetargetParams) -> ImageBuffer {
    let p = albedo_pivot(albedo, params);
    let c = params.albedo_contrast;
    albedo.map(|a| p + c * (a - p))
}

/// Global albedo contrast: `clamp(p + c * (A - p), EPS_DIV, 1)`.
pub fn tone_map_albedo(albedo: &ImageBuffer, params: &RetargetParams) -> ImageBuffer {
    if !params.ablation.albedo_contrast_on || params.albedo_contrast == 1.0 {
        return albedo.clone();
    }
    stretch_albedo_unclamped(albedo, params).clamped(EPS_DIV, 1.0)
}

/// Recombines retargeted layers into a color image.
pub fn recompose(
    albedo: &ImageBuffer,
    base: &ImageBuffer,
    detail: &ImageBuffer,
    chroma: &ChromaRatios,
) -> Result<ImageBuffer> {
    for plane in [albedo, base, detail] {
        plane.expect_channels(1)?;
    }
    albedo.expect_same_size(base)?;
    albedo.expect_same_size(detail)?;
    let luminance: Vec<f64> = (0..albedo.pixel_count())
        .map(|i| (albedo.data()[i] * (base.data()[i] + detail.data()[i])).clamp(0.0, 1.0))
        .collect();
    chroma.colorize(&ImageBuffer::from_parts(
        albedo.width(),
        albedo.height(),
        1,
        luminance,
    ))
}

/// Retargets an existing decomposition. Split out from [`enhance`] so callers
/// can time or reuse the decomposition stage.
pub fn retarget(decomp: &Decomposition, profile: &DepthProfile, params: &RetargetParams) -> Result<ImageBuffer> {
    params.validate()?;
    expect_profile_size(profile, &decomp.albedo)?;
    let base = retarget_base(&decomp.base, params);
    let detail = boost_detail(&decomp.detail, params);
    let (base, detail) = apply_shading_contrast(&base, &detail, profile, params)?;
    let albedo = tone_map_albedo(&decomp.albedo, params);
    recompose(&albedo, &base, &detail, &decomp.chroma)
}

/// Full shading/contrast retargeting of a linear RGB image.
pub fn enhance(
    rgb: &ImageBuffer,
    profile: &DepthProfile,
    decomp_params: &DecompParams,
    params: &RetargetParams,
) -> Result<ImageBuffer> {
    params.validate()?;
    expect_profile_size(profile, rgb)?;
    let decomp = decompose(rgb, decomp_params)?;
    retarget(&decomp, profile, params)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::depth::{DepthMap, TwoLayerProfile};
    use approx::assert_abs_diff_eq;
    use proptest::prelude::*;

    fn plane(values: &[f64]) -> ImageBuffer {
        ImageBuffer::new(values.len(), 1, 1, values.to_vec()).unwrap()
    }

    fn continuous(values: &[f64]) -> DepthProfile {
        DepthProfile::Continuous(DepthMap::new(values.len(), 1, values.to_vec()).unwrap())
    }

    #[test]
    fn base_curve_examples() {
        let p = RetargetParams {
            gamma: 1.0,
            trunc_lo: 0.0,
            trunc_hi: S_MAX,
            ..RetargetParams::default()
        };
        let s = plane(&[0.0, 0.3, 1.0, 3.9]);
        assert_eq!(retarget_base(&s, &p), s);

        let p = RetargetParams {
            gamma: 0.5,
            trunc_hi: 2.0,
            ..RetargetParams::default()
        };
        assert_abs_diff_eq!(retarget_base(&plane(&[0.5]), &p).data()[0], 1.0, epsilon = 1e-12);

        let p = RetargetParams {
            gamma: 1.0,
            trunc_hi: 2.0,
            ..RetargetParams::default()
        };
        assert_eq!(retarget_base(&plane(&[3.0]), &p).data()[0], 2.0);
    }

    #[test]
    fn detail_examples() {
        let p = RetargetParams {
            detail_gain: 1.0,
            ..RetargetParams::default()
        };
        let d = plane(&[-0.3, 0.0, 0.2]);
        assert_eq!(boost_detail(&d, &p), d);
        let p = RetargetParams {
            detail_gain: 2.0,
            ..RetargetParams::default()
        };
        assert_eq!(boost_detail(&plane(&[-0.1]), &p).data()[0], -0.2);
        assert!(boost_detail(&plane(&[0.0; 5]), &p).data().iter().all(|&v| v == 0.0));
    }

    #[test]
    fn depth_weight_examples() {
        let prof = continuous(&[0.0, 0.5, 1.0, 0.25]);
        assert!(depth_weight(&prof, 0.0).data().iter().all(|&w| w == 1.0));
        let w = depth_weight(&prof, 0.3);
        assert_eq!(w.data()[0], 0.7);
        assert_eq!(w.data()[1], 1.0);
        assert_eq!(w.data()[2], 1.3);
    }

    #[test]
    fn two_layer_weights_use_side_means() {
        let prof = DepthProfile::TwoLayer(
            TwoLayerProfile::new(2, 1, vec![false, true], 0.8, 0.1).unwrap(),
        );
        let w = depth_weight(&prof, 0.5);
        assert_abs_diff_eq!(w.data()[0], 1.0 + 0.5 * (0.2 - 1.0), epsilon = 1e-15);
        assert_abs_diff_eq!(w.data()[1], 1.0 + 0.5 * (1.6 - 1.0), epsilon = 1e-15);
    }

    #[test]
    fn shading_contrast_examples() {
        let prof = continuous(&[1.0, 0.0, 0.5]);
        let base = plane(&[1.5, 1.5, 1.5]);
        let detail = plane(&[0.1, 0.1, 0.1]);
        let none = RetargetParams {
            alpha_shading: 0.0,
            beta_texture: 0.0,
            ..RetargetParams::default()
        };
        let (b, d) = apply_shading_contrast(&base, &detail, &prof, &none).unwrap();
        assert_eq!((b, d), (base.clone(), detail.clone()));

        let p = RetargetParams {
            alpha_shading: 0.3,
            beta_texture: 0.4,
            ..RetargetParams::default()
        };
        let (b, d) = apply_shading_contrast(&base, &detail, &prof, &p).unwrap();
        assert_abs_diff_eq!(b.data()[0], 1.65, epsilon = 1e-12);
        assert_abs_diff_eq!(b.data()[1], 1.35, epsilon = 1e-12);
        assert_eq!(b.data()[2], 1.5);
        assert_abs_diff_eq!(d.data()[0], 0.14, epsilon = 1e-12);
        assert_eq!(d.data()[2], 0.1);

        let neutral = plane(&[1.0, 1.0, 1.0]);
        let (b, _) = apply_shading_contrast(&neutral, &detail, &prof, &p).unwrap();
        assert!(b.data().iter().all(|&v| v == 1.0));
    }

    #[test]
    fn shading_contrast_size_mismatch() {
        let prof = continuous(&[1.0, 0.0]);
        let base = plane(&[1.0, 1.0, 1.0]);
        assert!(matches!(
            apply_shading_contrast(&base, &base, &prof, &RetargetParams::default()),
            Err(Error::Shape(_))
        ));
    }

    #[test]
    fn albedo_tone_map_examples() {
        let a = plane(&[0.1, 0.9, 0.5]);
        let p = RetargetParams {
            albedo_contrast: 1.0,
            ..RetargetParams::default()
        };
        assert_eq!(tone_map_albedo(&a, &p), a);

        let p = RetargetParams {
            albedo_pivot: Some(0.5),
            albedo_contrast: 1.25,
            ..RetargetParams::default()
        };
        assert_eq!(tone_map_albedo(&plane(&[0.9]), &p).data()[0], 1.0);

        let flat = plane(&[0.5, 0.5]);
        assert_eq!(tone_map_albedo(&flat, &p), flat);
    }

    #[test]
    fn recompose_examples() {
        let gray = ImageBuffer::filled(1, 1, 3, 0.5);
        let chroma = crate::image::chroma_of(&gray, &crate::image::luminance_of(&gray).unwrap()).unwrap();
        let out = recompose(&plane(&[0.5]), &plane(&[1.0]), &plane(&[0.0]), &chroma).unwrap();
        for c in 0..3 {
            assert_abs_diff_eq!(out.plane(c)[0], 0.5, epsilon = 1e-12);
        }
        let out = recompose(&plane(&[0.5]), &plane(&[0.2]), &plane(&[-0.5]), &chroma).unwrap();
        assert!(out.data().iter().all(|&v| v == 0.0));
    }

    #[test]
    fn disabled_toggles_are_identity() {
        let p = RetargetParams {
            ablation: Ablation::all(false),
            ..RetargetParams::default()
        };
        let s = plane(&[0.01, 0.7, 3.5]);
        assert_eq!(retarget_base(&s, &p), s);
        assert_eq!(boost_detail(&s, &p), s);
        assert_eq!(tone_map_albedo(&s.clamped(EPS_DIV, 1.0), &p), s.clamped(EPS_DIV, 1.0));
        let prof = continuous(&[1.0, 0.0, 0.3]);
        let (b, d) = apply_shading_contrast(&s, &s, &prof, &p).unwrap();
        assert_eq!((b, d), (s.clone(), s));
    }

    #[test]
    fn validation() {
        assert!(RetargetParams::default().validate().is_ok());
        assert!(RetargetParams::identity().validate().is_ok());
        let bad = [
            RetargetParams { gamma: 0.0, ..Default::default() },
            RetargetParams { trunc_lo: 2.0, trunc_hi: 1.0, ..Default::default() },
            RetargetParams { alpha_shading: 1.0, ..Default::default() },
            RetargetParams { beta_texture: -0.1, ..Default::default() },
            RetargetParams { albedo_contrast: 0.0, ..Default::default() },
            RetargetParams { albedo_pivot: Some(1.0), ..Default::default() },
            RetargetParams { detail_gain: f64::NAN, ..Default::default() },
        ];
        for p in bad {
            assert!(p.validate().is_err(), "{p:?}");
        }
    }

    fn variance(v: &[f64]) -> f64 {
        let m = v.iter().sum::<f64>() / v.len() as f64;
        v.iter().map(|x| (x - m).powi(2)).sum::<f64>() / v.len() as f64
    }

    proptest! {
        #[test]
        fn base_curve_is_monotone(
            gamma in 0.05f64..5.0,
            lo in 0.0f64..1.0,
            span in 0.01f64..3.0,
            mut xs in prop::collection::vec(0.0f64..S_MAX, 2..40),
        ) {
            let hi = (lo + span).min(S_MAX);
            let p = RetargetParams { gamma, trunc_lo: lo, trunc_hi: hi, ..Default::default() };
            xs.sort_by(f64::total_cmp);
            let out = retarget_base(&plane(&xs), &p);
            for w in out.data().windows(2) {
                prop_assert!(w[0] <= w[1]);
            }
        }

        #[test]
        fn detail_variance_scales_by_gain_squared(
            gain in 0.0f64..4.0,
            xs in prop::collection::vec(-1.0f64..1.0, 2..50),
        ) {
            let p = RetargetParams { detail_gain: gain, ..Default::default() };
            let out = boost_detail(&plane(&xs), &p);
            let expect = gain * gain * variance(&xs);
            prop_assert!((variance(out.data()) - expect).abs() <= 1e-12 * (1.0 + expect));
        }

        #[test]
        fn albedo_stretch_scales_rms_contrast(
            c in 0.1f64..3.0,
            xs in prop::collection::vec(EPS_DIV..1.0, 2..50),
        ) {
            let p = RetargetParams { albedo_contrast: c, ..Default::default() };
            let a = plane(&xs);
            let out = stretch_albedo_unclamped(&a, &p);
            let (s_in, s_out) = (variance(a.data()).sqrt(), variance(out.data()).sqrt());
            prop_assert!((s_out - c * s_in).abs() <= 1e-12);
        }

        #[test]
        fn mid_depth_is_neutral(
            alpha in 0.0f64..0.99,
            beta in 0.0f64..0.99,
            b in 0.0f64..S_MAX,
            d in -1.0f64..1.0,
        ) {
            let p = RetargetParams { alpha_shading: alpha, beta_texture: beta, ..Default::default() };
            let prof = continuous(&[0.5]);
            let (nb, nd) = apply_shading_contrast(&plane(&[b]), &plane(&[d]), &prof, &p).unwrap();
            prop_assert_eq!(nb.data()[0], b);
            prop_assert_eq!(nd.data()[0], d);
        }
    }
}
