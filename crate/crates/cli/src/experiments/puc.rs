//! Partition-of-unity residuals of shifted activation generators.

use dynoprior_core::basis_analysis::{partition_residual, PartitionResidual};
use dynoprior_core::coordnet::Activation;
use serde_json::json;

use super::{artifact, RunResult};
use crate::config::ExperimentConfig;
use crate::manifest::Outputs;
use crate::plot::{render_plot, Plot, PlotStyle, Series};

pub fn execute(config: &ExperimentConfig) -> RunResult<PartitionResidual> {
    let p = &config.puc;
    let kind = p.activation.kind();
    let omega = if p.omega > 0.0 { p.omega } else { kind.default_omega() };
    Ok(partition_residual(Activation::new(kind, omega), p.k, p.grid)?)
}

pub fn write(config: &ExperimentConfig, o: &PartitionResidual, out: &mut Outputs) -> RunResult<serde_json::Value> {
    let seed = config.seed;
    out.write(&artifact("residual", seed, "csv"), o.to_csv())?;
    let plot = Plot::new(
        format!("{} partition residual, K = {}", o.activation.kind.name(), o.truncation_k),
        "x",
        "|sum - 1|",
        PlotStyle::Line,
    )
    .series(Series::new("residual", o.grid.clone(), o.residuals.clone()))
    .log_y();
    out.write(&artifact("residual", seed, "svg"), render_plot(&plot)?)?;
    Ok(json!({
        "activation": o.activation.kind.name(),
        "omega": o.activation.omega,
        "k": o.truncation_k,
        "max_residual": o.max_residual(),
        "max_normalized_residual": o.max_normalized_residual(),
    }))
}
