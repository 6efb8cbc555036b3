//! Experiment runner for `dynoprior`: configuration, pipelines, SVG plots and manifests.
//!
//! The binary is a thin layer over [`experiments::run`]; the acceptance suite calls the
//! per-experiment `execute` functions directly.

pub mod config;
pub mod experiments;
pub mod manifest;
pub mod plot;

pub use config::{ExperimentConfig, ExperimentKind};
pub use experiments::{run, RunError};
pub use manifest::RunManifest;
pub use plot::{render_plot, Plot, PlotStyle, Series};
