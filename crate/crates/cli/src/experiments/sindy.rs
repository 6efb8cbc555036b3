//! Sparse equation discovery from sampled trajectories.

use dynoprior_core::coordnet::{fit_time_series, Activation, Batch, LossHistory, TrainConfig};
use dynoprior_core::sindy::{
    self, coefficient_error, derivative_finite_difference, derivative_network, derivative_spectral,
    max_relative_coefficient_error, rms_error, true_coefficients, SindyModel,
};
use dynoprior_core::systems::{attractor_trajectory, catalog, sample, CatalogOptions, SampleSet, Spacing};
use dynoprior_core::{csv, DerivativeEstimate, Matrix};
use serde_json::json;

use super::{artifact, integration_step, loss_csv, RunResult};
use crate::config::{DerivChoice, ExperimentConfig};
use crate::manifest::Outputs;
use crate::plot::{render_plot, Plot, PlotStyle, Series};

#[derive(Clone, Debug)]
pub struct SindyOutcome {
    pub samples: SampleSet,
    pub derivative: DerivativeEstimate,
    /// Right-hand side evaluated on the noise-free states at the sample times.
    pub true_derivative: Matrix,
    pub model: SindyModel,
    /// Known coefficients for catalog systems that have a polynomial form.
    pub truth: Option<Matrix>,
    pub loss: Option<LossHistory>,
}

impl SindyOutcome {
    pub fn derivative_rms(&self) -> f64 {
        rms_error(&self.derivative.ydot, &self.true_derivative)
    }

    pub fn coefficient_error(&self) -> Option<f64> {
        self.truth.as_ref().map(|t| coefficient_error(&self.model.gamma, t))
    }

    pub fn max_relative_error(&self) -> Option<f64> {
        self.truth.as_ref().map(|t| max_relative_coefficient_error(&self.model.gamma, t))
    }

    pub fn support_matches(&self) -> Option<bool> {
        self.truth.as_ref().map(|t| self.model.support() == sindy::support_of(t))
    }
}

pub fn execute(config: &ExperimentConfig) -> RunResult<SindyOutcome> {
    let p = &config.sindy;
    let spec = catalog(&config.system)?;
    let traj = attractor_trajectory(&spec, p.burn_in, p.duration, integration_step(p.dt, 0.01))?;
    let observed: Vec<usize> = (0..spec.dim).collect();
    let samples = sample(&traj, &observed, Spacing::Uniform { dt: p.dt }, p.noise, config.seed)?;
    let clean = sample(&traj, &observed, Spacing::Uniform { dt: p.dt }, 0.0, config.seed)?;
    let rates = clean
        .values
        .column_iter()
        .map(|col| spec.derivative(&col.iter().copied().collect::<Vec<f64>>()))
        .collect::<Result<Vec<_>, _>>()?;
    let true_derivative = Matrix::from_fn(spec.dim, clean.len(), |i, j| rates[j][i]);
    let (derivative, loss) = match p.deriv {
        DerivChoice::FiniteDifference => (derivative_finite_difference(&samples)?, None),
        DerivChoice::Spectral => (derivative_spectral(&samples)?, None),
        DerivChoice::Network => {
            let cfg = TrainConfig {
                iterations: p.net.iterations,
                learning_rate: p.net.learning_rate,
                batch: if p.net.batch == 0 { Batch::Full } else { Batch::Size(p.net.batch) },
                seed: config.seed,
                ..TrainConfig::default()
            };
            let (net, hist) = fit_time_series(
                &samples.times,
                &samples.values,
                &p.net.hidden(),
                Activation::sinc(p.net.omega),
                config.seed,
                &cfg,
            )?;
            (derivative_network(&net, &samples.times)?, Some(hist))
        }
    };
    let model = sindy::fit(&samples, &derivative, p.dmax, p.threshold, p.ridge)?;
    let truth = true_coefficients(&config.system, &spec.params, CatalogOptions::default(), p.dmax).ok();
    Ok(SindyOutcome { samples, derivative, true_derivative, model, truth, loss })
}

pub fn write(config: &ExperimentConfig, o: &SindyOutcome, out: &mut Outputs) -> RunResult<serde_json::Value> {
    let seed = config.seed;
    out.write(&artifact("samples", seed, "csv"), csv::sample_set(&o.samples))?;
    out.write(&artifact("derivative", seed, "csv"), csv::time_series(&o.derivative.times, &o.derivative.ydot, "dx"))?;
    out.write(&artifact("coefficients", seed, "csv"), o.model.to_csv())?;
    let mut report = o.model.equations().join("\n");
    report.push('\n');
    out.write(&artifact("equations", seed, "txt"), report)?;
    if let Some(hist) = &o.loss {
        out.write(&artifact("loss", seed, "csv"), loss_csv(hist))?;
    }
    let row = |m: &Matrix| m.row(0).iter().copied().collect::<Vec<f64>>();
    let plot = Plot::new(
        format!("{} dx0/dt ({}, noise {})", config.system, config.sindy.deriv, config.sindy.noise),
        "t",
        "dx0/dt",
        PlotStyle::Line,
    )
    .series(Series::new("true", o.samples.times.clone(), row(&o.true_derivative)))
    .series(Series::new("estimate", o.samples.times.clone(), row(&o.derivative.ydot)));
    out.write(&artifact("derivative", seed, "svg"), render_plot(&plot)?)?;
    Ok(json!({
        "equations": o.model.equations(),
        "derivative_rms": o.derivative_rms(),
        "coefficient_error": o.coefficient_error(),
        "max_relative_coefficient_error": o.max_relative_error(),
        "support_matches": o.support_matches(),
        "best_training_loss": o.loss.as_ref().map(|h| h.best_loss),
    }))
}
