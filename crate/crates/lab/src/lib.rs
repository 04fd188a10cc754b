//! Batch front end for the rigidity laboratory: family configurations, the
//! normalization pipeline, and the identity, sweep and report commands.

pub mod config;
pub mod pipeline;
pub mod suites;

pub use config::{FamilyConfig, Mode, PreWarp};
pub use pipeline::{normalize, run_pipeline, run_pipeline_with, NormalizedSurface, PipelineOptions, PipelineRun};
