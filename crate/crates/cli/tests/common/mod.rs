#![allow(dead_code)]

use std::path::{Path, PathBuf};

use depthcue_core::io::{save_image, write_pfm, PfmImage, PngDepth};
use depthcue_core::synth::Scene;

/// Writes a scene as a 16-bit PNG plus a disparity PFM and returns both
/// paths. Disparity is `1 + 99 * nearness`.
pub fn write_scene(scene: &Scene, dir: &Path) -> (PathBuf, PathBuf) {
    let png = dir.join(format!("{}.png", scene.name));
    let pfm = dir.join(format!("{}.pfm", scene.name));
    save_image(&scene.rgb, &png, PngDepth::Sixteen).unwrap();
    let nearness = scene.nearness.nearness();
    write_pfm(
        &PfmImage {
            width: scene.nearness.width(),
            height: scene.nearness.height(),
            channels: 1,
            data: nearness.iter().map(|&v| (1.0 + 99.0 * v) as f32).collect(),
        },
        &pfm,
    )
    .unwrap();
    (png, pfm)
}

/// Writes a constant-disparity PFM.
pub fn write_flat_depth(path: &Path, width: usize, height: usize) {
    write_pfm(
        &PfmImage {
            width,
            height,
            channels: 1,
            data: vec![7.0; width * height],
        },
        path,
    )
    .unwrap();
}
