//! Bandwidth sweeps of Lipschitz estimates and penultimate stable ranks.

use dynoprior_core::basis_analysis::{omega_sweep, spearman, SweepResult};
use dynoprior_core::{Error, Matrix};
use serde_json::json;

use super::{artifact, RunResult};
use crate::config::ExperimentConfig;
use crate::manifest::Outputs;
use crate::plot::{render_plot, Plot, PlotStyle, Series};

#[derive(Clone, Debug)]
pub struct SweepOutcome {
    pub result: SweepResult,
    /// Rank correlation of the per-ω medians with ω.
    pub lipschitz_trend: f64,
    pub stable_rank_trend: f64,
}

pub fn execute(config: &ExperimentConfig) -> RunResult<SweepOutcome> {
    let p = &config.sweep;
    if p.points < 2 {
        return Err(Error::InvalidArgument("need at least two evaluation points".into()).into());
    }
    let mut widths = vec![1];
    widths.extend(std::iter::repeat_n(p.width, p.hidden_layers));
    widths.push(1);
    let samples = Matrix::from_fn(1, p.points, |_, j| -1.0 + 2.0 * j as f64 / (p.points - 1) as f64);
    let seeds: Vec<u64> = (0..p.seeds as u64).map(|s| config.seed + s).collect();
    let result = omega_sweep(&widths, p.activation.kind(), &p.omegas, &samples, &seeds)?;
    Ok(SweepOutcome {
        lipschitz_trend: spearman(&p.omegas, &result.lipschitz_estimates),
        stable_rank_trend: spearman(&p.omegas, &result.stable_ranks),
        result,
    })
}

pub fn write(config: &ExperimentConfig, o: &SweepOutcome, out: &mut Outputs) -> RunResult<serde_json::Value> {
    let seed = config.seed;
    out.write(&artifact("sweep", seed, "csv"), o.result.to_csv())?;
    let act = config.sweep.activation;
    let lip = Plot::new(format!("{act} median Lipschitz estimate"), "omega", "lipschitz", PlotStyle::Line)
        .series(Series::new("median", o.result.omegas.clone(), o.result.lipschitz_estimates.clone()))
        .log_y();
    out.write(&artifact("lipschitz", seed, "svg"), render_plot(&lip)?)?;
    let rank = Plot::new(format!("{act} median stable rank"), "omega", "stable rank", PlotStyle::Line)
        .series(Series::new("median", o.result.omegas.clone(), o.result.stable_ranks.clone()));
    out.write(&artifact("stable_rank", seed, "svg"), render_plot(&rank)?)?;
    Ok(json!({
        "activation": act.name(),
        "omegas": o.result.omegas,
        "median_lipschitz": o.result.lipschitz_estimates,
        "median_stable_rank": o.result.stable_ranks,
        "lipschitz_spearman": o.lipschitz_trend,
        "stable_rank_spearman": o.stable_rank_trend,
    }))
}
