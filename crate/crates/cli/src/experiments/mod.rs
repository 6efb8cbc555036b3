//! The runnable experiments. Each module exposes `execute`, which computes an outcome
//! without touching the filesystem, and `write`, which emits its artifacts.

pub mod embed;
pub mod forecast;
pub mod modes;
pub mod puc;
pub mod sindy;
pub mod sweep;

use std::fmt;
use std::io;
use std::path::Path;
use std::time::Instant;

use dynoprior_core::coordnet::LossHistory;
use dynoprior_core::csv;

use crate::config::{ExperimentConfig, ExperimentKind};
use crate::manifest::{Outputs, RunManifest, MANIFEST_NAME};
use crate::plot::PlotError;

#[derive(Debug)]
pub enum RunError {
    Core(dynoprior_core::Error),
    Io(io::Error),
    Plot(PlotError),
    Config(String),
}

impl fmt::Display for RunError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            RunError::Core(e) => write!(f, "{e}"),
            RunError::Io(e) => write!(f, "i/o error: {e}"),
            RunError::Plot(e) => write!(f, "{e}"),
            RunError::Config(e) => write!(f, "configuration error: {e}"),
        }
    }
}

impl std::error::Error for RunError {}

impl From<dynoprior_core::Error> for RunError {
    fn from(e: dynoprior_core::Error) -> Self {
        RunError::Core(e)
    }
}

impl From<io::Error> for RunError {
    fn from(e: io::Error) -> Self {
        RunError::Io(e)
    }
}

impl From<PlotError> for RunError {
    fn from(e: PlotError) -> Self {
        RunError::Plot(e)
    }
}

pub type RunResult<T> = Result<T, RunError>;

/// Integration step no larger than `max_step` that divides `dt` exactly.
pub(crate) fn integration_step(dt: f64, max_step: f64) -> f64 {
    dt / (dt / max_step - 1e-9).ceil().max(1.0)
}

/// File name carrying the run seed, e.g. `coefficients.s3.csv`.
pub(crate) fn artifact(stem: &str, seed: u64, ext: &str) -> String {
    format!("{stem}.s{seed}.{ext}")
}

pub(crate) fn loss_csv(hist: &LossHistory) -> String {
    csv::table(
        &["iteration", "loss"],
        hist.iterations.iter().zip(&hist.losses).map(|(i, l)| vec![i.to_string(), csv::real(*l)]),
    )
}

fn dispatch(config: &ExperimentConfig, out: &mut Outputs) -> RunResult<serde_json::Value> {
    match config.experiment {
        ExperimentKind::Sindy => sindy::write(config, &sindy::execute(config)?, out),
        ExperimentKind::Modes => modes::write(config, &modes::execute(config)?, out),
        ExperimentKind::Embed => embed::write(config, &embed::execute(config)?, out),
        ExperimentKind::Forecast => forecast::write(config, &forecast::execute(config)?, out),
        ExperimentKind::Sweep => sweep::write(config, &sweep::execute(config)?, out),
        ExperimentKind::Puc => puc::write(config, &puc::execute(config)?, out),
    }
}

/// Runs the configured experiment into `config.output_dir` and writes the manifest.
///
/// Experiment failures are recorded in the returned manifest (artifacts written before
/// the failure are kept); only a failure to create the directory or write the manifest
/// is returned as `Err`.
pub fn run(config: &ExperimentConfig) -> io::Result<RunManifest> {
    let start = Instant::now();
    let mut out = Outputs::create(&config.output_dir)?;
    out.write(&artifact("config", config.seed, "toml"), config.to_toml())?;
    let (results, error) = match dispatch(config, &mut out) {
        Ok(v) => (v, None),
        Err(e) => (serde_json::Value::Null, Some(e.to_string())),
    };
    let manifest = RunManifest {
        tool: env!("CARGO_PKG_NAME").to_string(),
        tool_version: env!("CARGO_PKG_VERSION").to_string(),
        config: config.clone(),
        status: if error.is_none() { "ok".into() } else { "error".into() },
        error,
        duration_seconds: start.elapsed().as_secs_f64(),
        results,
        files: out.into_files(),
    };
    std::fs::write(Path::new(&config.output_dir).join(MANIFEST_NAME), manifest.to_json())?;
    Ok(manifest)
}
