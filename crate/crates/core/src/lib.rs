//! Monocular depth-cue enhancement.
//!
//! The pipeline has three stages:
//!
//! * **depth analysis** ([`depth`]): a nearness map from a disparity/depth
//!   file or a built-in prior, reduced to a two-layer or continuous profile;
//! * **shading/contrast retargeting** ([`decompose`], [`retarget`]): the
//!   luminance is split into albedo, base shading and detail shading, each
//!   layer is retargeted with depth-dependent gains, and the result is
//!   recombined with the original chroma;
//! * **motion parallax** ([`parallax`]): the enhanced image is cut into
//!   depth layers that shift with the viewer's head offset.
//!
//! ```no_run
//! use depthcue_core::prelude::*;
//!
//! let rgb = load_image("scene.png")?;
//! let map = depth_from_file("disp.pfm", DepthKind::Disparity)?;
//! let map = resample_depth(&map, rgb.width(), rgb.height())?;
//! let profile = DepthProfile::Continuous(map);
//! let out = enhance(&rgb, &profile, &DecompParams::default(), &RetargetParams::default())?;
//! save_image(&out, "enhanced.png", PngDepth::Eight)?;
//! # Ok::<(), depthcue_core::Error>(())
//! ```

pub mod decompose;
pub mod depth;
pub mod error;
pub mod guided;
pub mod image;
pub mod io;
pub mod metrics;
pub mod parallax;
pub mod resample;
pub mod retarget;
pub mod synth;

pub use error::{Error, Result};

pub mod prelude {
    pub use crate::decompose::{decompose, DecompParams, Decomposition, S_MAX};
    pub use crate::depth::{
        depth_from_file, depth_from_prior, resample_depth, two_layer_from_map, DepthKind, DepthMap,
        DepthPrior, DepthProfile, ProfileKind, TwoLayerProfile,
    };
    pub use crate::error::{Error, Result};
    pub use crate::guided::{guided_filter_fast, guided_filter_reference, GuidedFilterParams};
    pub use crate::image::{luminance_of, ChromaRatios, ImageBuffer, EPS_DIV, R_MAX};
    pub use crate::io::{load_image, save_image, PngDepth};
    pub use crate::parallax::{
        build_layers, export_stack, import_stack, render_frame, HeadPose, LayerStack, ParallaxMode,
        ParallaxParams,
    };
    pub use crate::retarget::{enhance, Ablation, RetargetParams};
}
