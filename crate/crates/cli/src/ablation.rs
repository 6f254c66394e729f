//! Cumulative toggle sweep: original, then base shading, detail shading,
//! shading contrast and albedo contrast enabled one after another.

use depthcue_core::decompose::Decomposition;
use depthcue_core::depth::DepthProfile;
use depthcue_core::image::{luminance_of, ImageBuffer};
use depthcue_core::metrics::{detail_variance, psnr, rms_contrast};
use depthcue_core::retarget::{retarget, Ablation, RetargetParams};
use serde::Serialize;

use crate::error::Result;
use crate::font::{draw_text, text_size};
use crate::pipeline::finite;

pub const PANEL_COUNT: usize = 5;
pub const PANEL_LABELS: [&str; PANEL_COUNT] = ["-", "a", "a+b", "a+b+c", "a+b+c+d"];

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct PanelMetrics {
    pub label: String,
    /// base shading, detail shading, shading contrast, albedo contrast.
    pub toggles: [bool; 4],
    /// Against the input; `None` when identical.
    pub psnr_db: Option<f64>,
    pub rms_contrast: f64,
    pub fg_detail_variance: f64,
    pub bg_detail_variance: f64,
}

#[derive(Clone, Debug)]
pub struct AblationResult {
    pub panels: Vec<ImageBuffer>,
    pub metrics: Vec<PanelMetrics>,
}

/// Renders the five cumulative configurations from one decomposition.
/// `params` supplies the operator settings; its own toggles are ignored.
pub fn ablation_panels(
    rgb: &ImageBuffer,
    decomp: &Decomposition,
    profile: &DepthProfile,
    params: &RetargetParams,
) -> Result<AblationResult> {
    let fg = profile.foreground();
    let bg: Vec<bool> = fg.iter().map(|f| !f).collect();
    let mut panels = Vec::with_capacity(PANEL_COUNT);
    let mut metrics = Vec::with_capacity(PANEL_COUNT);
    for (n, label) in PANEL_LABELS.iter().enumerate() {
        let p = RetargetParams {
            ablation: Ablation::cumulative(n),
            ..*params
        };
        let img = retarget(decomp, profile, &p)?;
        let y = luminance_of(&img)?;
        metrics.push(PanelMetrics {
            label: label.to_string(),
            toggles: p.ablation.as_array(),
            psnr_db: finite(psnr(rgb, &img)?),
            rms_contrast: rms_contrast(&y),
            fg_detail_variance: detail_variance(&y, &fg),
            bg_detail_variance: detail_variance(&y, &bg),
        });
        panels.push(img);
    }
    Ok(AblationResult { panels, metrics })
}

/// Places panels left to right under a label strip.
pub fn compose_panel(panels: &[ImageBuffer], labels: &[&str]) -> Result<ImageBuffer> {
    let first = &panels[0];
    let (pw, ph) = (first.width(), first.height());
    for p in panels {
        first.expect_same_size(p)?;
        p.expect_channels(3)?;
    }
    let scale = (ph / 90).clamp(1, 12);
    let gap = 2 * scale;
    let strip = 7 * scale + 2 * gap;
    let n = panels.len();
    let (w, h) = (n * pw + (n - 1) * gap, ph + strip);

    let mut planes = vec![vec![0.02; w * h]; 3];
    for (k, panel) in panels.iter().enumerate() {
        let x0 = k * (pw + gap);
        for (c, plane) in planes.iter_mut().enumerate() {
            let src = panel.plane(c);
            for y in 0..ph {
                let dst = (y + strip) * w + x0;
                plane[dst..dst + pw].copy_from_slice(&src[y * pw..(y + 1) * pw]);
            }
        }
        if let Some(label) = labels.get(k) {
            let (tw, _) = text_size(label, scale);
            let tx = x0 + pw.saturating_sub(tw) / 2;
            draw_text(label, scale, |x, y| {
                let (x, y) = (tx + x, gap + y);
                if x < x0 + pw && y < strip {
                    for plane in planes.iter_mut() {
                        plane[y * w + x] = 1.0;
                    }
                }
            });
        }
    }
    let data = planes.concat();
    Ok(ImageBuffer::new(w, h, 3, data)?)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn panel_layout() {
        let a = ImageBuffer::filled(90, 90, 3, 0.5);
        let out = compose_panel(&vec![a; 5], &PANEL_LABELS).unwrap();
        assert_eq!(out.width(), 5 * 90 + 4 * 2);
        assert_eq!(out.height(), 90 + 11);
        // Panel body is copied verbatim below the strip.
        assert_eq!(out.get(0, 11, 0), 0.5);
        assert_eq!(out.get(90, 50, 0), 0.02);
        // Some label pixels are lit.
        assert!((0..11).any(|y| (0..out.width()).any(|x| out.get(x, y, 1) == 1.0)));
    }
}
