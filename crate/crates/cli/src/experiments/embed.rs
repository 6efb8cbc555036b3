//! Delay-embedding reconstruction from a noisy, random or sparse observable, either
//! directly from the samples or from a network surrogate.

use dynoprior_core::coordnet::{fit_time_series, Activation, Batch, LossHistory, TrainConfig};
use dynoprior_core::delay_embed::{
    closed_curve_gap, hankel_for_window, procrustes_correlation, surrogate_resample, takens_reconstruct, HankelSource,
    RAW_WINDOW, SURROGATE_WINDOW,
};
use dynoprior_core::systems::{attractor_trajectory, catalog, sample, Spacing};
use dynoprior_core::{EmbeddingResult, Error, Matrix};
use serde_json::json;

use super::{artifact, integration_step, loss_csv, RunResult};
use crate::config::{ExperimentConfig, Pipeline, SpacingChoice};
use crate::manifest::Outputs;
use crate::plot::{render_plot, Plot, PlotStyle, Series};

#[derive(Clone, Debug)]
pub struct EmbedOutcome {
    /// Embedding of the clean observable on the base grid.
    pub reference: EmbeddingResult,
    pub reference_times: Vec<f64>,
    pub embedding: EmbeddingResult,
    pub embedding_times: Vec<f64>,
    /// Hankel window `n·τ` used for `embedding`.
    pub window: f64,
    /// Aligned correlation with the reference; `None` when the point sets differ in size.
    pub correlation: Option<f64>,
    pub gap: f64,
    pub reference_gap: f64,
    /// RMS of the surrogate against the clean observable on the base grid.
    pub surrogate_rms: Option<f64>,
    pub warning: Option<String>,
    pub loss: Option<LossHistory>,
}

fn window_starts(times: &[f64], count: usize) -> Vec<f64> {
    times.iter().take(count).copied().collect()
}

pub fn execute(config: &ExperimentConfig) -> RunResult<EmbedOutcome> {
    let p = &config.embed;
    let spec = catalog(&config.system)?;
    if p.observe >= spec.dim {
        return Err(
            Error::InvalidArgument(format!("component {} out of range for {}", p.observe, config.system)).into()
        );
    }
    if p.samples < 2 {
        return Err(Error::InvalidArgument("need at least two samples".into()).into());
    }
    let k = if p.k == 0 { spec.dim } else { p.k };
    let dt = p.duration / p.samples as f64;
    let traj = attractor_trajectory(&spec, p.burn_in, p.duration, integration_step(dt, 0.01))?;
    let clean = sample(&traj, &[p.observe], Spacing::Uniform { dt }, 0.0, config.seed)?;
    let reference_h = hankel_for_window(&clean.component(0), dt, RAW_WINDOW, HankelSource::RawSamples)?;
    let reference = takens_reconstruct(&reference_h, k)?;
    let reference_times = window_starts(&clean.times, reference.coords.ncols());

    let (spacing, raw_tau) = match p.spacing {
        SpacingChoice::Uniform => (Spacing::Uniform { dt }, dt),
        SpacingChoice::Sparse => (Spacing::Uniform { dt: 2.0 * dt }, 2.0 * dt),
        SpacingChoice::Random => (Spacing::Random { count: p.samples }, dt),
    };
    let observed = sample(&traj, &[p.observe], spacing, p.noise, config.seed)?;

    let (series, tau, window, times, surrogate_rms, warning, loss) = match p.pipeline {
        // Random times are used in order as if uniform, which is all a Hankel matrix allows.
        Pipeline::Raw => (observed.component(0), raw_tau, RAW_WINDOW, observed.times.clone(), None, None, None),
        Pipeline::Surrogate => {
            let cfg = TrainConfig {
                iterations: p.net.iterations,
                learning_rate: p.net.learning_rate,
                batch: if p.net.batch == 0 { Batch::Full } else { Batch::Size(p.net.batch) },
                seed: config.seed,
                ..TrainConfig::default()
            };
            let (net, hist) = fit_time_series(
                &observed.times,
                &observed.values,
                &p.net.hidden(),
                Activation::sinc(p.net.omega),
                config.seed,
                &cfg,
            )?;
            let last = *clean.times.last().expect("nonempty sample");
            let sur = surrogate_resample(&net, clean.times[0], last, dt)?;
            let y = sur.component(0);
            let truth = clean.component(0);
            let n = y.len().min(truth.len());
            let rms = (y.iter().zip(&truth).map(|(a, b)| (a - b).powi(2)).sum::<f64>() / n as f64).sqrt();
            // Sparse data gets the wider surrogate window; otherwise keep the reference
            // geometry so the two embeddings are directly comparable.
            let window = if p.spacing == SpacingChoice::Sparse { SURROGATE_WINDOW } else { RAW_WINDOW };
            (y, dt, window, sur.times.clone(), Some(rms), sur.warning, Some(hist))
        }
    };
    let source = if p.pipeline == Pipeline::Raw { HankelSource::RawSamples } else { HankelSource::NetworkSurrogate };
    let h = hankel_for_window(&series, tau, window, source)?;
    let embedding = takens_reconstruct(&h, k)?;
    let embedding_times = window_starts(&times, embedding.coords.ncols());
    let correlation = if embedding.coords.shape() == reference.coords.shape() {
        Some(procrustes_correlation(&reference.coords, &embedding.coords)?)
    } else {
        None
    };
    Ok(EmbedOutcome {
        gap: closed_curve_gap(&embedding.coords),
        reference_gap: closed_curve_gap(&reference.coords),
        reference,
        reference_times,
        embedding,
        embedding_times,
        window,
        correlation,
        surrogate_rms,
        warning,
        loss,
    })
}

fn scatter(e: &EmbeddingResult, name: &str) -> Series {
    let row = |r: usize| e.coords.row(r).iter().copied().collect::<Vec<f64>>();
    let y = if e.k > 1 { row(1) } else { vec![0.0; e.coords.ncols()] };
    Series::new(name, row(0), y)
}

pub fn write(config: &ExperimentConfig, o: &EmbedOutcome, out: &mut Outputs) -> RunResult<serde_json::Value> {
    let seed = config.seed;
    out.write(&artifact("embedding", seed, "csv"), o.embedding.to_csv(&o.embedding_times))?;
    out.write(&artifact("reference_embedding", seed, "csv"), o.reference.to_csv(&o.reference_times))?;
    let sv = Matrix::from_row_slice(1, o.embedding.singular_values.len(), &o.embedding.singular_values);
    let idx: Vec<f64> = (1..=sv.ncols()).map(|i| i as f64).collect();
    out.write(&artifact("singular_values", seed, "csv"), dynoprior_core::csv::time_series(&idx, &sv, "sigma"))?;
    if let Some(hist) = &o.loss {
        out.write(&artifact("loss", seed, "csv"), loss_csv(hist))?;
    }
    let p = &config.embed;
    let plot = Plot::new(
        format!("{} delay embedding ({}, {}, noise {})", config.system, p.pipeline, p.spacing, p.noise),
        "e1",
        "e2",
        PlotStyle::Scatter,
    )
    .series(scatter(&o.reference, "clean raw"))
    .series(scatter(&o.embedding, p.pipeline.name()));
    out.write(&artifact("embedding", seed, "svg"), render_plot(&plot)?)?;
    Ok(json!({
        "pipeline": p.pipeline.name(),
        "spacing": p.spacing.name(),
        "window": o.window,
        "procrustes_correlation": o.correlation,
        "closed_curve_gap": o.gap,
        "reference_gap": o.reference_gap,
        "surrogate_rms": o.surrogate_rms,
        "warning": o.warning,
    }))
}
