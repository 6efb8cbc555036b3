//! Next-state forecasting with a state-to-state network and a DMD baseline.

use dynoprior_core::coordnet::{Activation, Batch, LossHistory, TrainConfig};
use dynoprior_core::forecast::{
    build_pairs, comparison_csv, fit_dmd, multi_step_rms, rollout, train_forecaster, InitBox, Rollout, StepModel,
};
use dynoprior_core::systems::catalog;
use dynoprior_core::{csv, rng, DmdModel, Network};
use rand::Rng as _;
use serde_json::json;

use super::{artifact, loss_csv, RunResult};
use crate::config::{ExperimentConfig, ForecastModel, StartChoice};
use crate::manifest::Outputs;
use crate::plot::{render_plot, Plot, PlotStyle, Series};

/// How far the far start lies from the box centre, in units of the box half-widths.
pub const FAR_START_RADII: f64 = 3.0;
/// Rollouts are judged against the training box scaled by this factor.
pub const BOX_FACTOR: f64 = 1.5;

#[derive(Clone, Debug)]
pub struct ModelRun {
    pub rollout: Rollout,
    /// RMS after `1..=horizon` recursive steps on held-out trajectories.
    pub multi_step_rms: Vec<f64>,
    /// Every rollout state lies in the scaled training box.
    pub stays_inside: bool,
    /// First rollout step inside the scaled training box.
    pub first_inside: Option<usize>,
    /// No divergence and every state's max norm within `BOX_FACTOR` times the largest
    /// training-state magnitude.
    pub bounded: bool,
}

#[derive(Clone, Debug)]
pub struct ForecastOutcome {
    pub pair_count: usize,
    pub skipped: Vec<usize>,
    pub train_pairs: usize,
    pub test_pairs: usize,
    pub train_box: InitBox,
    pub x0: Vec<f64>,
    pub network: Option<(Network, LossHistory, ModelRun)>,
    pub dmd: Option<(DmdModel, ModelRun)>,
}

fn start_point(choice: StartChoice, b: &InitBox, seed: u64) -> Vec<f64> {
    let mut r = rng::stream(seed, 11);
    match choice {
        StartChoice::InBounds => {
            b.lo.iter().zip(&b.hi).map(|(&l, &h)| if h > l { r.random_range(l..h) } else { l }).collect()
        }
        StartChoice::Far => {
            let c = b.center();
            (0..b.dim())
                .map(|i| {
                    let sign = if r.random::<bool>() { 1.0 } else { -1.0 };
                    c[i] + sign * FAR_START_RADII * 0.5 * (b.hi[i] - b.lo[i])
                })
                .collect()
        }
    }
}

fn judge(
    model: &dyn StepModel,
    x0: &[f64],
    steps: usize,
    dt: f64,
    test: &dynoprior_core::SnapshotPairs,
    horizon: usize,
    train_box: &InitBox,
) -> RunResult<ModelRun> {
    let rollout = rollout(model, x0, steps, dt)?;
    let scaled = train_box.scaled(BOX_FACTOR);
    let limit = BOX_FACTOR * train_box.lo.iter().chain(&train_box.hi).fold(0.0f64, |m, v| m.max(v.abs()));
    let bounded = rollout.diverged_at.is_none() && rollout.trajectory.states.iter().all(|x| x.abs() <= limit);
    let inside: Vec<bool> = rollout
        .trajectory
        .states
        .column_iter()
        .map(|c| scaled.contains(&c.iter().copied().collect::<Vec<f64>>()))
        .collect();
    Ok(ModelRun {
        stays_inside: rollout.diverged_at.is_none() && inside.iter().all(|&b| b),
        first_inside: inside.iter().position(|&b| b),
        bounded,
        multi_step_rms: multi_step_rms(model, test, horizon),
        rollout,
    })
}

pub fn execute(config: &ExperimentConfig) -> RunResult<ForecastOutcome> {
    let p = &config.forecast;
    let spec = catalog(&config.system)?;
    let init_box = InitBox::from_reference(&spec, 20.0, 200.0, p.dt, 0.1)?;
    let pairs = build_pairs(&spec, p.ntraj, p.nsnap, p.dt, &init_box, config.seed, p.substeps)?;
    let (train, test) = pairs.split_holdout(p.holdout);
    let train_box = InitBox::of_columns(&train.x1);
    let x0 = start_point(p.x0, &train_box, config.seed);

    let network = if p.model != ForecastModel::Dmd {
        let cfg = TrainConfig {
            iterations: p.net.iterations,
            learning_rate: p.net.learning_rate,
            batch: if p.net.batch == 0 { Batch::Full } else { Batch::Size(p.net.batch) },
            seed: config.seed,
            ..TrainConfig::default()
        };
        let (net, hist) = train_forecaster(&train, &p.net.hidden(), Activation::sinc(p.net.omega), config.seed, &cfg)?;
        let run = judge(&net, &x0, p.steps, p.dt, &test, p.horizon, &train_box)?;
        Some((net, hist, run))
    } else {
        None
    };
    let dmd = if p.model != ForecastModel::Net {
        let rank = if p.rank == 0 { spec.dim } else { p.rank };
        let model = fit_dmd(&train, rank)?;
        let run = judge(&model, &x0, p.steps, p.dt, &test, p.horizon, &train_box)?;
        Some((model, run))
    } else {
        None
    };
    Ok(ForecastOutcome {
        pair_count: pairs.len(),
        skipped: pairs.skipped.clone(),
        train_pairs: train.len(),
        test_pairs: test.len(),
        train_box,
        x0,
        network,
        dmd,
    })
}

fn run_summary(run: &ModelRun) -> serde_json::Value {
    json!({
        "one_step_rms": run.multi_step_rms.first(),
        "horizon_rms": run.multi_step_rms.last(),
        "mean_multi_step_rms": run.multi_step_rms.iter().sum::<f64>() / run.multi_step_rms.len() as f64,
        "diverged_at": run.rollout.diverged_at,
        "stays_inside_box": run.stays_inside,
        "first_step_inside_box": run.first_inside,
        "bounded": run.bounded,
    })
}

pub fn write(config: &ExperimentConfig, o: &ForecastOutcome, out: &mut Outputs) -> RunResult<serde_json::Value> {
    let seed = config.seed;
    let mut plot = Plot::new(
        format!("{} rollout from {} start (x0 vs x1)", config.system, config.forecast.x0),
        "x0",
        "x1",
        PlotStyle::Line,
    );
    let comps = if o.x0.len() > 1 { [0, 1] } else { [0, 0] };
    let mut add = |name: &str, r: &Rollout| {
        let xy = dynoprior_core::forecast::project(&r.trajectory, &comps);
        plot.series.push(Series::new(name, xy.row(0).iter().copied().collect(), xy.row(1).iter().copied().collect()));
    };
    if let Some((net, hist, run)) = &o.network {
        out.write(&artifact("rollout_network", seed, "csv"), csv::trajectory(&run.rollout.trajectory))?;
        out.write(&artifact("loss", seed, "csv"), loss_csv(hist))?;
        out.write(&artifact("forecaster", seed, "bin"), dynoprior_core::coordnet::save(net))?;
        add("network", &run.rollout);
    }
    if let Some((_, run)) = &o.dmd {
        out.write(&artifact("rollout_dmd", seed, "csv"), csv::trajectory(&run.rollout.trajectory))?;
        add("dmd", &run.rollout);
    }
    if let (Some((_, _, n)), Some((_, d))) = (&o.network, &o.dmd) {
        out.write(&artifact("comparison", seed, "csv"), comparison_csv(&n.multi_step_rms, &d.multi_step_rms))?;
    }
    out.write(&artifact("rollout", seed, "svg"), render_plot(&plot)?)?;
    Ok(json!({
        "pairs": o.pair_count,
        "skipped_trajectories": o.skipped,
        "train_pairs": o.train_pairs,
        "test_pairs": o.test_pairs,
        "x0": o.x0,
        "network": o.network.as_ref().map(|(_, h, r)| {
            let mut v = run_summary(r);
            v["best_training_loss"] = json!(h.best_loss);
            v
        }),
        "dmd": o.dmd.as_ref().map(|(m, r)| {
            let mut v = run_summary(r);
            v["rank_used"] = json!(m.rank_used);
            v["warning"] = json!(m.warning);
            v
        }),
    }))
}
