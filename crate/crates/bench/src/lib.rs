//! Shared workloads for the criterion benches.

use depthcue_core::depth::DepthProfile;
use depthcue_core::image::{luminance_of, ImageBuffer};
use depthcue_core::synth::bimodal_card;

pub const FULL_HD: (usize, usize) = (1920, 1080);

/// A textured card in front of a background, with its continuous profile.
pub fn card(width: usize, height: usize) -> (ImageBuffer, DepthProfile) {
    let scene = bimodal_card(width, height, 7);
    (scene.rgb, DepthProfile::Continuous(scene.nearness))
}

/// Gray guide and source planes for guided-filter runs.
pub fn planes(width: usize, height: usize) -> (ImageBuffer, ImageBuffer) {
    let (rgb, _) = card(width, height);
    let guide = luminance_of(&rgb).expect("rgb input");
    let src = rgb.channel(0);
    (guide, src)
}
