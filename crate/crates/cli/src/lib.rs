//! Batch driver for depthcue: configuration, the per-image pipeline with a
//! JSON run report, the five-panel ablation sweep and benchmark runs.

pub mod ablation;
pub mod bench;
pub mod config;
pub mod error;
mod font;
pub mod pipeline;

pub use config::PipelineConfig;
pub use error::{CliError, Result};
pub use pipeline::{run, run_ablation, RunReport};
