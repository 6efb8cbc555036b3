//! Mode counting from one observed component.

use dynoprior_core::coordnet::{fit_time_series, Activation, Batch, LossHistory, TrainConfig};
use dynoprior_core::delay_embed::{hankel_for_window, neural_modes, time_delay_modes, HankelSource};
use dynoprior_core::systems::{attractor_trajectory, catalog, sample, Spacing};
use dynoprior_core::{csv, Error, Matrix, ModeSpectrum};
use serde_json::json;

use super::{artifact, integration_step, loss_csv, RunResult};
use crate::config::{ExperimentConfig, ModesMethod};
use crate::manifest::Outputs;
use crate::plot::{render_plot, Plot, PlotStyle, Series};

#[derive(Clone, Debug)]
pub struct ModesOutcome {
    pub times: Vec<f64>,
    pub series: Vec<f64>,
    pub spectrum: ModeSpectrum,
    /// Hankel shape for time-delay runs.
    pub hankel_shape: Option<(usize, usize)>,
    pub loss: Option<LossHistory>,
}

pub fn execute(config: &ExperimentConfig) -> RunResult<ModesOutcome> {
    let p = &config.modes;
    let spec = catalog(&config.system)?;
    if p.observe >= spec.dim {
        return Err(
            Error::InvalidArgument(format!("component {} out of range for {}", p.observe, config.system)).into()
        );
    }
    let duration = p.samples as f64 * p.dt;
    let traj = attractor_trajectory(&spec, p.burn_in, duration, integration_step(p.dt, 0.01))?;
    let s = sample(&traj, &[p.observe], Spacing::Uniform { dt: p.dt }, 0.0, config.seed)?;
    let series = s.component(0);
    match p.method {
        ModesMethod::TimeDelay => {
            let h = hankel_for_window(&series, p.dt, p.window, HankelSource::RawSamples)?;
            let spectrum = time_delay_modes(&h, p.ratio)?;
            Ok(ModesOutcome { times: s.times, series, spectrum, hankel_shape: Some(h.data.shape()), loss: None })
        }
        ModesMethod::Neural => {
            let cfg = TrainConfig {
                iterations: p.net.iterations,
                learning_rate: p.net.learning_rate,
                batch: if p.net.batch == 0 { Batch::Full } else { Batch::Size(p.net.batch) },
                seed: config.seed,
                ..TrainConfig::default()
            };
            let values = Matrix::from_row_slice(1, series.len(), &series);
            let (net, hist) =
                fit_time_series(&s.times, &values, &p.net.hidden(), Activation::sinc(p.net.omega), config.seed, &cfg)?;
            let spectrum = neural_modes(&net, &s.times, &series, p.ratio, p.gate)?;
            Ok(ModesOutcome { times: s.times, series, spectrum, hankel_shape: None, loss: Some(hist) })
        }
    }
}

pub fn write(config: &ExperimentConfig, o: &ModesOutcome, out: &mut Outputs) -> RunResult<serde_json::Value> {
    let seed = config.seed;
    let values = Matrix::from_row_slice(1, o.series.len(), &o.series);
    out.write(&artifact("observable", seed, "csv"), csv::time_series(&o.times, &values, "x"))?;
    out.write(&artifact("spectrum", seed, "csv"), o.spectrum.to_csv())?;
    if let Some(hist) = &o.loss {
        out.write(&artifact("loss", seed, "csv"), loss_csv(hist))?;
    }
    let idx: Vec<f64> = (1..=o.spectrum.singular_values.len()).map(|i| i as f64).collect();
    let plot = Plot::new(
        format!("{} singular values ({})", config.system, config.modes.method),
        "index",
        "sigma / sigma_1",
        PlotStyle::Scatter,
    )
    .series(Series::new("spectrum", idx.clone(), o.spectrum.ratios()))
    .series(Series::new("threshold", vec![idx[0], *idx.last().unwrap()], vec![o.spectrum.dominance_ratio; 2]))
    .log_y();
    out.write(&artifact("spectrum", seed, "svg"), render_plot(&plot)?)?;
    Ok(json!({
        "method": config.modes.method.name(),
        "dominant_count": o.spectrum.dominant_count,
        "dominance_ratio": o.spectrum.dominance_ratio,
        "hankel_shape": o.hankel_shape,
        "leading_ratios": o.spectrum.ratios().into_iter().take(20).collect::<Vec<_>>(),
        "best_training_loss": o.loss.as_ref().map(|h| h.best_loss),
    }))
}
