//! Next-state prediction from snapshot pairs: state-to-state networks, exact DMD and
//! recursive rollouts.

use rand::Rng as _;
use rayon::prelude::*;

use crate::coordnet::{train, Activation, LossHistory, Network, TrainConfig};
use crate::linalg::sorted_svd;
use crate::systems::{attractor_trajectory, integrate_with_substeps, SystemSpec, Trajectory};
use crate::{csv, rng, Error, Matrix, Result};

/// Axis-aligned box of initial conditions.
#[derive(Clone, Debug, PartialEq)]
pub struct InitBox {
    pub lo: Vec<f64>,
    pub hi: Vec<f64>,
}

impl InitBox {
    pub fn dim(&self) -> usize {
        self.lo.len()
    }

    pub fn center(&self) -> Vec<f64> {
        self.lo.iter().zip(&self.hi).map(|(a, b)| 0.5 * (a + b)).collect()
    }

    /// The box scaled by `factor` about its centre.
    pub fn scaled(&self, factor: f64) -> InitBox {
        let c = self.center();
        let half = |i: usize| 0.5 * (self.hi[i] - self.lo[i]) * factor;
        InitBox {
            lo: (0..self.dim()).map(|i| c[i] - half(i)).collect(),
            hi: (0..self.dim()).map(|i| c[i] + half(i)).collect(),
        }
    }

    pub fn contains(&self, x: &[f64]) -> bool {
        x.iter().enumerate().all(|(i, &v)| v >= self.lo[i] && v <= self.hi[i])
    }

    /// Per-component bounds of the columns of `states`.
    pub fn of_columns(states: &Matrix) -> InitBox {
        let mut lo = vec![f64::INFINITY; states.nrows()];
        let mut hi = vec![f64::NEG_INFINITY; states.nrows()];
        for col in states.column_iter() {
            for (i, &v) in col.iter().enumerate() {
                lo[i] = lo[i].min(v);
                hi[i] = hi[i].max(v);
            }
        }
        InitBox { lo, hi }
    }

    /// Bounds of a long reference trajectory widened by `margin` of each side's span.
    pub fn from_reference(spec: &SystemSpec, burn_in: f64, duration: f64, dt: f64, margin: f64) -> Result<InitBox> {
        let traj = attractor_trajectory(spec, burn_in, duration, dt)?;
        let b = InitBox::of_columns(&traj.states);
        let lo = b.lo.iter().zip(&b.hi).map(|(l, h)| l - margin * (h - l)).collect();
        let hi = b.lo.iter().zip(&b.hi).map(|(l, h)| h + margin * (h - l)).collect();
        Ok(InitBox { lo, hi })
    }

    fn draw(&self, r: &mut rng::Rng) -> Vec<f64> {
        self.lo.iter().zip(&self.hi).map(|(&l, &h)| if h > l { r.random_range(l..h) } else { l }).collect()
    }
}

/// Consecutive-state pairs `x2[:, j] = Φ_dt(x1[:, j])`.
#[derive(Clone, Debug, PartialEq)]
pub struct SnapshotPairs {
    pub x1: Matrix,
    pub x2: Matrix,
    pub dt: f64,
    pub trajectory_ids: Vec<usize>,
    /// Trajectories dropped because integration diverged.
    pub skipped: Vec<usize>,
}

impl SnapshotPairs {
    pub fn len(&self) -> usize {
        self.x1.ncols()
    }

    pub fn is_empty(&self) -> bool {
        self.x1.ncols() == 0
    }

    pub fn dim(&self) -> usize {
        self.x1.nrows()
    }

    /// Pairs whose trajectory id satisfies `keep`.
    pub fn filter(&self, keep: impl Fn(usize) -> bool) -> SnapshotPairs {
        let cols: Vec<usize> = (0..self.len()).filter(|&j| keep(self.trajectory_ids[j])).collect();
        SnapshotPairs {
            x1: self.x1.select_columns(&cols),
            x2: self.x2.select_columns(&cols),
            dt: self.dt,
            trajectory_ids: cols.iter().map(|&j| self.trajectory_ids[j]).collect(),
            skipped: self.skipped.clone(),
        }
    }

    pub fn trajectory_list(&self) -> Vec<usize> {
        let mut ids = self.trajectory_ids.clone();
        ids.dedup();
        ids
    }

    /// Holds out the last `ceil(fraction · n)` trajectories (at least one when there are
    /// two or more), so no trajectory contributes to both sides.
    pub fn split_holdout(&self, fraction: f64) -> (SnapshotPairs, SnapshotPairs) {
        let ids = self.trajectory_list();
        let mut held = ((ids.len() as f64) * fraction).ceil() as usize;
        if ids.len() >= 2 {
            held = held.clamp(1, ids.len() - 1);
        } else {
            held = 0;
        }
        let cut: Vec<usize> = ids[ids.len() - held..].to_vec();
        (self.filter(|id| !cut.contains(&id)), self.filter(|id| cut.contains(&id)))
    }

    /// States of one trajectory in time order (its `x1` columns plus the final `x2`).
    pub fn sequence(&self, id: usize) -> Matrix {
        let cols: Vec<usize> = (0..self.len()).filter(|&j| self.trajectory_ids[j] == id).collect();
        let mut seq = Matrix::zeros(self.dim(), cols.len() + 1);
        for (k, &j) in cols.iter().enumerate() {
            seq.set_column(k, &self.x1.column(j));
        }
        if let Some(&last) = cols.last() {
            seq.set_column(cols.len(), &self.x2.column(last));
        }
        seq
    }
}

/// Integrates `n_traj` trajectories of `n_snapshots` states from uniform random starts in
/// `init_box` and stacks their consecutive pairs. Trajectory `i` draws its start from
/// stream `i` of `seed`. Diverging trajectories are skipped and listed.
pub fn build_pairs(
    spec: &SystemSpec,
    n_traj: usize,
    n_snapshots: usize,
    dt: f64,
    init_box: &InitBox,
    seed: u64,
    substeps: usize,
) -> Result<SnapshotPairs> {
    if n_traj == 0 {
        return Err(Error::InvalidArgument("need at least one trajectory".into()));
    }
    if n_snapshots < 2 {
        return Err(Error::ZeroPairs(format!("{n_snapshots} snapshot(s) per trajectory form no consecutive pair")));
    }
    if init_box.dim() != spec.dim {
        return Err(Error::InvalidArgument("initial box dimension differs from the system".into()));
    }
    let runs: Vec<Result<Trajectory>> = (0..n_traj)
        .into_par_iter()
        .map(|i| {
            let x0 = init_box.draw(&mut rng::stream(seed, i as u64));
            integrate_with_substeps(spec, &x0, 0.0, (n_snapshots - 1) as f64 * dt, dt, substeps)
        })
        .collect();
    let mut skipped = Vec::new();
    let mut kept = Vec::new();
    for (i, run) in runs.into_iter().enumerate() {
        match run {
            Ok(t) if t.len() == n_snapshots => kept.push((i, t)),
            Ok(_) => skipped.push(i),
            Err(Error::Divergence { .. }) => skipped.push(i),
            Err(e) => return Err(e),
        }
    }
    if kept.is_empty() {
        return Err(Error::ZeroPairs(format!("all {n_traj} trajectories diverged")));
    }
    let per = n_snapshots - 1;
    let m = kept.len() * per;
    let mut x1 = Matrix::zeros(spec.dim, m);
    let mut x2 = Matrix::zeros(spec.dim, m);
    let mut trajectory_ids = Vec::with_capacity(m);
    for (k, (id, t)) in kept.iter().enumerate() {
        x1.columns_mut(k * per, per).copy_from(&t.states.columns(0, per));
        x2.columns_mut(k * per, per).copy_from(&t.states.columns(1, per));
        trajectory_ids.extend(std::iter::repeat_n(*id, per));
    }
    Ok(SnapshotPairs { x1, x2, dt, trajectory_ids, skipped })
}

/// State-to-next-state network of widths `[D, hidden..., D]`, with inputs normalised
/// per dimension from the range of `X1` onto `[-1, 1]`.
pub fn train_forecaster(
    pairs: &SnapshotPairs,
    hidden: &[usize],
    activation: Activation,
    init_seed: u64,
    cfg: &TrainConfig,
) -> Result<(Network, LossHistory)> {
    if pairs.is_empty() {
        return Err(Error::ZeroPairs("no training pairs".into()));
    }
    let d = pairs.dim();
    let mut widths = vec![d];
    widths.extend_from_slice(hidden);
    widths.push(d);
    let b = InitBox::of_columns(&pairs.x1);
    let net = Network::init(&widths, activation, init_seed)?.with_input_range(&b.lo, &b.hi);
    train(&net, &pairs.x1, &pairs.x2, cfg)
}

/// Linear one-step model `x_{t+1} = A x_t`.
#[derive(Clone, Debug, PartialEq)]
pub struct DmdModel {
    pub a_matrix: Matrix,
    pub rank_used: usize,
    /// Set when `X1` was numerically rank-deficient below the requested rank.
    pub warning: Option<String>,
}

/// Exact DMD: `A = X2 V Σ⁻¹ Uᵀ` from the rank-`rank` truncated SVD `X1 = U Σ Vᵀ`.
pub fn fit_dmd(pairs: &SnapshotPairs, rank: usize) -> Result<DmdModel> {
    let d = pairs.dim();
    if rank == 0 || rank > d {
        return Err(Error::InvalidArgument(format!("rank {rank} not in 1..={d}")));
    }
    if pairs.len() < d {
        return Err(Error::InvalidArgument(format!("need at least {d} pairs, got {}", pairs.len())));
    }
    let svd = sorted_svd(&pairs.x1);
    let s = &svd.singular_values;
    let tol = s[0] * f64::EPSILON * pairs.len().max(d) as f64;
    let numerical = s.iter().filter(|&&v| v > tol).count();
    let r = rank.min(numerical).max(1);
    let warning = (r < rank).then(|| format!("X1 has numerical rank {numerical}; truncated to {r} instead of {rank}"));
    let u = svd.u.columns(0, r);
    let vt = svd.v_t.rows(0, r);
    let mut xv = &pairs.x2 * vt.transpose();
    for k in 0..r {
        xv.column_mut(k).scale_mut(1.0 / s[k]);
    }
    Ok(DmdModel { a_matrix: xv * u.transpose(), rank_used: r, warning })
}

/// Anything that advances a state by one step.
pub trait StepModel {
    fn dim(&self) -> usize;
    fn step(&self, x: &[f64]) -> Vec<f64>;

    /// Applies the model to every column.
    fn step_batch(&self, states: &Matrix) -> Matrix {
        let mut out = Matrix::zeros(states.nrows(), states.ncols());
        for (j, col) in states.column_iter().enumerate() {
            let x: Vec<f64> = col.iter().copied().collect();
            out.set_column(j, &nalgebra::DVector::from_vec(self.step(&x)));
        }
        out
    }
}

impl StepModel for Network {
    fn dim(&self) -> usize {
        self.input_dim()
    }

    fn step(&self, x: &[f64]) -> Vec<f64> {
        self.forward(x)
    }

    fn step_batch(&self, states: &Matrix) -> Matrix {
        self.forward_batch(states)
    }
}

impl StepModel for DmdModel {
    fn dim(&self) -> usize {
        self.a_matrix.nrows()
    }

    fn step(&self, x: &[f64]) -> Vec<f64> {
        (&self.a_matrix * nalgebra::DVector::from_column_slice(x)).iter().copied().collect()
    }

    fn step_batch(&self, states: &Matrix) -> Matrix {
        &self.a_matrix * states
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Rollout {
    /// Times `k · dt`; truncated at the last finite state on divergence.
    pub trajectory: Trajectory,
    /// First step that produced a non-finite state.
    pub diverged_at: Option<usize>,
}

/// Applies `model` `steps` times starting from `x0`.
pub fn rollout(model: &dyn StepModel, x0: &[f64], steps: usize, dt: f64) -> Result<Rollout> {
    if steps == 0 {
        return Err(Error::InvalidArgument("rollout needs at least one step".into()));
    }
    if x0.len() != model.dim() {
        return Err(Error::InvalidArgument("initial state has the wrong dimension".into()));
    }
    let d = x0.len();
    let mut data = x0.to_vec();
    let mut x = x0.to_vec();
    let mut diverged_at = None;
    for k in 1..=steps {
        let next = model.step(&x);
        if next.iter().any(|v| !v.is_finite()) {
            diverged_at = Some(k);
            break;
        }
        data.extend_from_slice(&next);
        x = next;
    }
    let n = data.len() / d;
    Ok(Rollout {
        trajectory: Trajectory { times: (0..n).map(|k| k as f64 * dt).collect(), states: Matrix::from_vec(d, n, data) },
        diverged_at,
    })
}

/// RMS error after `1..=horizon` recursive steps, averaged over start points taken every
/// `horizon` states along each trajectory in `pairs`.
pub fn multi_step_rms(model: &dyn StepModel, pairs: &SnapshotPairs, horizon: usize) -> Vec<f64> {
    let mut starts = Vec::new();
    let mut targets: Vec<Vec<Vec<f64>>> = vec![Vec::new(); horizon];
    for id in pairs.trajectory_list() {
        let seq = pairs.sequence(id);
        let mut s = 0;
        while s + horizon < seq.ncols() {
            starts.push(seq.column(s).iter().copied().collect::<Vec<f64>>());
            for h in 0..horizon {
                targets[h].push(seq.column(s + h + 1).iter().copied().collect());
            }
            s += horizon;
        }
    }
    if starts.is_empty() {
        return vec![f64::NAN; horizon];
    }
    let d = pairs.dim();
    let mut state = Matrix::from_fn(d, starts.len(), |i, j| starts[j][i]);
    let mut out = Vec::with_capacity(horizon);
    for target in targets.iter() {
        state = model.step_batch(&state);
        let mut acc = 0.0;
        for (j, t) in target.iter().enumerate() {
            for i in 0..d {
                acc += (state[(i, j)] - t[i]).powi(2);
            }
        }
        out.push((acc / (d * starts.len()) as f64).sqrt());
    }
    out
}

/// `step,rms_network,rms_dmd`
pub fn comparison_csv(rms_network: &[f64], rms_dmd: &[f64]) -> String {
    csv::table(
        &["step", "rms_network", "rms_dmd"],
        rms_network
            .iter()
            .zip(rms_dmd)
            .enumerate()
            .map(|(k, (a, b))| vec![(k + 1).to_string(), csv::real(*a), csv::real(*b)]),
    )
}

/// Components `comps` of a trajectory, for plotting; the input is untouched.
pub fn project(traj: &Trajectory, comps: &[usize]) -> Matrix {
    traj.states.select_rows(comps)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::systems::{catalog, Params};

    fn linear_spec() -> SystemSpec {
        SystemSpec::new("linear", 2, Params::new(), vec![1.0, 0.0], |x, _, out| {
            out[0] = -0.1 * x[0] + 1.0 * x[1];
            out[1] = -x[0] - 0.1 * x[1];
            Ok(())
        })
    }

    fn unit_box(d: usize) -> InitBox {
        InitBox { lo: vec![-1.0; d], hi: vec![1.0; d] }
    }

    #[test]
    fn pair_counts() {
        let spec = catalog("lorenz3").unwrap();
        let b = InitBox { lo: vec![-15.0, -20.0, 5.0], hi: vec![15.0, 20.0, 40.0] };
        let p = build_pairs(&spec, 20, 800, 0.01, &b, 1, 1).unwrap();
        assert_eq!(p.len(), 20 * 799);
        assert!(p.skipped.is_empty());
        assert!(matches!(build_pairs(&spec, 3, 1, 0.01, &b, 1, 1), Err(Error::ZeroPairs(_))));
        assert_eq!(p.sequence(4).ncols(), 800);
        assert_eq!(p.x1.column(1), p.x2.column(0));
    }

    #[test]
    fn pairs_do_not_depend_on_thread_count() {
        let spec = linear_spec();
        let a = build_pairs(&spec, 6, 10, 0.1, &unit_box(2), 3, 1).unwrap();
        let pool = rayon::ThreadPoolBuilder::new().num_threads(1).build().unwrap();
        let b = pool.install(|| build_pairs(&spec, 6, 10, 0.1, &unit_box(2), 3, 1).unwrap());
        assert_eq!(a, b);
    }

    #[test]
    fn diverging_trajectories_are_skipped() {
        let spec = SystemSpec::new("blow", 1, Params::new(), vec![0.0], |x, _, out| {
            out[0] = x[0] * x[0];
            Ok(())
        });
        let b = InitBox { lo: vec![-1.0], hi: vec![3.0] };
        let p = build_pairs(&spec, 30, 200, 0.05, &b, 0, 1).unwrap();
        assert!(!p.skipped.is_empty());
        assert_eq!(p.len(), (30 - p.skipped.len()) * 199);
    }

    #[test]
    fn dmd_recovers_a_linear_map() {
        let a0 = Matrix::from_row_slice(3, 3, &[0.9, 0.1, 0.0, -0.2, 0.95, 0.05, 0.0, 0.1, 0.8]);
        let x1 = Matrix::from_fn(3, 50, |i, j| ((i + 1) as f64 * j as f64 * 0.37 + i as f64).sin());
        let x2 = &a0 * &x1;
        let pairs = SnapshotPairs { x1, x2, dt: 1.0, trajectory_ids: (0..50).collect(), skipped: vec![] };
        let m = fit_dmd(&pairs, 3).unwrap();
        assert!((&m.a_matrix - &a0).norm() < 1e-8);
        assert!(m.warning.is_none());
        // Least-squares optimality against perturbations.
        let base = (&pairs.x2 - &m.a_matrix * &pairs.x1).norm();
        let mut r = rng::seeded(2);
        for _ in 0..20 {
            let b = &m.a_matrix + Matrix::from_fn(3, 3, |_, _| r.random_range(-1e-3..1e-3));
            assert!(base <= (&pairs.x2 - b * &pairs.x1).norm());
        }
    }

    #[test]
    fn identity_dynamics_and_rank_deficiency() {
        let x1 = Matrix::from_fn(2, 10, |i, j| (i + j) as f64);
        let pairs = SnapshotPairs { x1: x1.clone(), x2: x1, dt: 1.0, trajectory_ids: vec![0; 10], skipped: vec![] };
        let m = fit_dmd(&pairs, 2).unwrap();
        assert!((&m.a_matrix - Matrix::identity(2, 2)).norm() < 1e-10);
        let r = rollout(&m, &[1.0, 2.0], 5, 0.1).unwrap();
        assert!(r.trajectory.states.column_iter().all(|c| (c[0] - 1.0).abs() < 1e-10 && (c[1] - 2.0).abs() < 1e-10));

        let flat = Matrix::from_fn(2, 10, |i, j| if i == 0 { j as f64 } else { 2.0 * j as f64 });
        let deficient =
            SnapshotPairs { x1: flat.clone(), x2: flat, dt: 1.0, trajectory_ids: vec![0; 10], skipped: vec![] };
        let m = fit_dmd(&deficient, 2).unwrap();
        assert_eq!(m.rank_used, 1);
        assert!(m.warning.is_some());
    }

    #[test]
    fn rollout_flags_divergence() {
        let m = DmdModel { a_matrix: Matrix::from_element(1, 1, 1e200), rank_used: 1, warning: None };
        let r = rollout(&m, &[1.0], 10, 1.0).unwrap();
        assert_eq!(r.diverged_at, Some(2));
        assert_eq!(r.trajectory.len(), 2);
        let again = rollout(&m, &[1.0], 10, 1.0).unwrap();
        assert_eq!(r, again);
    }

    #[test]
    fn holdout_keeps_trajectories_whole() {
        let p = build_pairs(&linear_spec(), 10, 5, 0.1, &unit_box(2), 0, 1).unwrap();
        let (train, test) = p.split_holdout(0.1);
        assert_eq!(test.trajectory_list(), vec![9]);
        assert_eq!(train.len() + test.len(), p.len());
        assert!(train.trajectory_ids.iter().all(|&i| i != 9));
    }

    #[test]
    fn forecaster_learns_constant_dynamics() {
        let still = SystemSpec::new("still", 2, Params::new(), vec![0.0, 0.0], |_, _, out| {
            out.fill(0.0);
            Ok(())
        });
        let p = build_pairs(&still, 200, 2, 0.1, &unit_box(2), 5, 1).unwrap();
        let (train_p, test_p) = p.split_holdout(0.1);
        let cfg =
            TrainConfig { iterations: 1500, learning_rate: 1e-3, standardize_targets: false, ..Default::default() };
        let (net, hist) = train_forecaster(&train_p, &[32, 32], Activation::sinc(2.0), 0, &cfg).unwrap();
        assert!(hist.best_loss < 1e-2 * hist.initial_loss);
        let rms = multi_step_rms(&net, &test_p, 1)[0];
        assert!(rms < 0.05, "{rms}");
    }

    #[test]
    fn projection_is_a_view() {
        let spec = catalog("lorenz3").unwrap();
        let traj = crate::systems::integrate(&spec, &spec.initial_state, 0.0, 1.0, 0.01).unwrap();
        let before = traj.clone();
        let p = project(&traj, &[2, 0]);
        assert_eq!(p.row(0), traj.states.row(2));
        assert_eq!(traj, before);
    }
}
