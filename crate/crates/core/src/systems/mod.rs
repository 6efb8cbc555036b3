//! Dynamical systems, fixed-step integration and the measurement model.

mod catalog;
mod sampling;

use std::collections::BTreeMap;
use std::fmt;
use std::sync::Arc;

pub use catalog::{catalog, catalog_with, CatalogOptions, SYSTEM_NAMES};
pub use sampling::{sample, SampleSet, Spacing};

use crate::{Error, Matrix, Result};

/// Named real parameters of a system.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct Params(BTreeMap<String, f64>);

impl Params {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn with(mut self, name: &str, value: f64) -> Self {
        self.0.insert(name.to_string(), value);
        self
    }

    pub fn set(&mut self, name: &str, value: f64) {
        self.0.insert(name.to_string(), value);
    }

    pub fn get(&self, name: &str) -> Option<f64> {
        self.0.get(name).copied()
    }

    pub fn remove(&mut self, name: &str) -> Option<f64> {
        self.0.remove(name)
    }

    pub fn iter(&self) -> impl Iterator<Item = (&str, f64)> {
        self.0.iter().map(|(k, v)| (k.as_str(), *v))
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }
}

/// Right-hand side `f(x, α)`; writes `dim` derivatives into the output slice.
pub type RhsFn = dyn Fn(&[f64], &Params, &mut [f64]) -> Result<()> + Send + Sync;

/// A named ODE `dx/dt = f(x, α)`.
#[derive(Clone)]
pub struct SystemSpec {
    pub name: String,
    pub dim: usize,
    pub params: Params,
    /// Default starting point used by the experiments.
    pub initial_state: Vec<f64>,
    rhs: Arc<RhsFn>,
}

impl fmt::Debug for SystemSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("SystemSpec")
            .field("name", &self.name)
            .field("dim", &self.dim)
            .field("params", &self.params)
            .field("initial_state", &self.initial_state)
            .finish_non_exhaustive()
    }
}

impl SystemSpec {
    pub fn new<F>(name: &str, dim: usize, params: Params, initial_state: Vec<f64>, rhs: F) -> Self
    where
        F: Fn(&[f64], &Params, &mut [f64]) -> Result<()> + Send + Sync + 'static,
    {
        assert!(dim > 0, "dimension must be positive");
        assert_eq!(initial_state.len(), dim, "initial state has wrong length");
        Self { name: name.to_string(), dim, params, initial_state, rhs: Arc::new(rhs) }
    }

    pub fn with_param(mut self, name: &str, value: f64) -> Self {
        self.params.set(name, value);
        self
    }

    /// Evaluates the right-hand side into `out`.
    pub fn eval(&self, x: &[f64], out: &mut [f64]) -> Result<()> {
        if x.len() != self.dim || out.len() != self.dim {
            return Err(Error::InvalidArgument(format!(
                "{}: state and output must have length {}",
                self.name, self.dim
            )));
        }
        (self.rhs)(x, &self.params, out)
    }

    pub fn derivative(&self, x: &[f64]) -> Result<Vec<f64>> {
        let mut out = vec![0.0; self.dim];
        self.eval(x, &mut out)?;
        Ok(out)
    }

    /// Reads a parameter, failing if it is not set.
    pub fn require(params: &Params, system: &str, name: &str) -> Result<f64> {
        params.get(name).ok_or_else(|| Error::MissingParameter { system: system.to_string(), name: name.to_string() })
    }
}

/// States sampled on a strictly increasing time grid; `states` is `dim × len`.
#[derive(Clone, Debug, PartialEq)]
pub struct Trajectory {
    pub times: Vec<f64>,
    pub states: Matrix,
}

impl Trajectory {
    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.states.nrows()
    }

    pub fn state(&self, k: usize) -> Vec<f64> {
        self.states.column(k).iter().copied().collect()
    }

    pub fn last_state(&self) -> Vec<f64> {
        self.state(self.len() - 1)
    }

    /// Drops every sample before `t` and shifts times so the first kept sample is at 0.
    pub fn discard_before(&self, t: f64) -> Trajectory {
        let start = self.times.iter().position(|&s| s >= t - 1e-9).unwrap_or(self.len());
        let t0 = self.times.get(start).copied().unwrap_or(0.0);
        Trajectory {
            times: self.times[start..].iter().map(|s| s - t0).collect(),
            states: self.states.columns(start, self.len() - start).into_owned(),
        }
    }

    /// Per-component `(min, max)`.
    pub fn bounds(&self) -> Vec<(f64, f64)> {
        self.states
            .row_iter()
            .map(|r| r.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &v| (lo.min(v), hi.max(v))))
            .collect()
    }
}

fn rk4_step(spec: &SystemSpec, x: &mut [f64], h: f64, k: &mut [Vec<f64>; 5]) -> Result<()> {
    let d = x.len();
    let [k1, k2, k3, k4, tmp] = k;
    spec.eval(x, k1)?;
    for i in 0..d {
        tmp[i] = x[i] + 0.5 * h * k1[i];
    }
    spec.eval(tmp, k2)?;
    for i in 0..d {
        tmp[i] = x[i] + 0.5 * h * k2[i];
    }
    spec.eval(tmp, k3)?;
    for i in 0..d {
        tmp[i] = x[i] + h * k3[i];
    }
    spec.eval(tmp, k4)?;
    for i in 0..d {
        x[i] += h / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);
    }
    Ok(())
}

/// Classic fixed-step RK4 from `t0` to `t1`, recording every step.
///
/// The number of steps is `round((t1 - t0) / dt)`, so `t1` should be a whole number of
/// steps from `t0`.
pub fn integrate(spec: &SystemSpec, x0: &[f64], t0: f64, t1: f64, dt: f64) -> Result<Trajectory> {
    integrate_with_substeps(spec, x0, t0, t1, dt, 1)
}

/// Like [`integrate`], but takes `substeps` internal RK4 steps of `dt / substeps`
/// between recorded samples.
pub fn integrate_with_substeps(
    spec: &SystemSpec,
    x0: &[f64],
    t0: f64,
    t1: f64,
    dt: f64,
    substeps: usize,
) -> Result<Trajectory> {
    if !(dt > 0.0) || !dt.is_finite() {
        return Err(Error::InvalidArgument(format!("dt must be positive, got {dt}")));
    }
    if !(t1 >= t0) {
        return Err(Error::InvalidArgument(format!("t1 ({t1}) must not precede t0 ({t0})")));
    }
    if x0.len() != spec.dim {
        return Err(Error::InvalidArgument(format!(
            "initial state has length {}, {} expects {}",
            x0.len(),
            spec.name,
            spec.dim
        )));
    }
    if substeps == 0 {
        return Err(Error::InvalidArgument("substeps must be at least 1".into()));
    }
    let steps = ((t1 - t0) / dt).round() as usize;
    let d = spec.dim;
    let mut data = Vec::with_capacity(d * (steps + 1));
    let mut x = x0.to_vec();
    data.extend_from_slice(&x);
    let mut k: [Vec<f64>; 5] = std::array::from_fn(|_| vec![0.0; d]);
    let h = dt / substeps as f64;
    for step in 1..=steps {
        for _ in 0..substeps {
            rk4_step(spec, &mut x, h, &mut k)?;
        }
        if x.iter().any(|v| !v.is_finite()) {
            return Err(Error::Divergence { step, time: t0 + step as f64 * dt });
        }
        data.extend_from_slice(&x);
    }
    Ok(Trajectory {
        times: (0..=steps).map(|k| t0 + k as f64 * dt).collect(),
        states: Matrix::from_vec(d, steps + 1, data),
    })
}

/// Integrates from the system's default initial state, discards `burn_in` time units and
/// returns `duration` more, re-based to start at `t = 0`.
pub fn attractor_trajectory(spec: &SystemSpec, burn_in: f64, duration: f64, dt: f64) -> Result<Trajectory> {
    let full = integrate(spec, &spec.initial_state, 0.0, burn_in + duration, dt)?;
    Ok(full.discard_before(burn_in))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn decay() -> SystemSpec {
        SystemSpec::new("decay", 1, Params::new(), vec![1.0], |x, _, out| {
            out[0] = -x[0];
            Ok(())
        })
    }

    #[test]
    fn exponential_decay_matches_closed_form() {
        let traj = integrate(&decay(), &[1.0], 0.0, 1.0, 1e-3).unwrap();
        assert_eq!(traj.len(), 1001);
        assert!((traj.last_state()[0] - (-1.0f64).exp()).abs() < 1e-6);
    }

    #[test]
    fn zero_length_interval_gives_initial_state() {
        let traj = integrate(&decay(), &[0.7], 2.0, 2.0, 0.1).unwrap();
        assert_eq!(traj.times, vec![2.0]);
        assert_eq!(traj.states[(0, 0)], 0.7);
    }

    #[test]
    fn divergence_reports_first_bad_step() {
        let blowup = SystemSpec::new("blowup", 1, Params::new(), vec![1.0], |x, _, out| {
            out[0] = x[0] * x[0];
            Ok(())
        });
        match integrate(&blowup, &[1.0], 0.0, 5.0, 0.1) {
            Err(Error::Divergence { step, .. }) => assert!(step > 1 && step < 50),
            other => panic!("expected divergence, got {other:?}"),
        }
    }

    #[test]
    fn bad_arguments_are_rejected() {
        assert!(integrate(&decay(), &[1.0], 0.0, 1.0, 0.0).is_err());
        assert!(integrate(&decay(), &[1.0], 1.0, 0.0, 0.1).is_err());
        assert!(integrate(&decay(), &[1.0, 2.0], 0.0, 1.0, 0.1).is_err());
    }

    #[test]
    fn substeps_refine_the_solution() {
        let coarse = integrate(&decay(), &[1.0], 0.0, 2.0, 0.5).unwrap();
        let fine = integrate_with_substeps(&decay(), &[1.0], 0.0, 2.0, 0.5, 10).unwrap();
        assert_eq!(coarse.len(), fine.len());
        let exact = (-2.0f64).exp();
        assert!((fine.last_state()[0] - exact).abs() < (coarse.last_state()[0] - exact).abs());
    }

    #[test]
    fn discard_before_rebases_times() {
        let traj = integrate(&decay(), &[1.0], 0.0, 1.0, 0.25).unwrap();
        let tail = traj.discard_before(0.5);
        assert_eq!(tail.times, vec![0.0, 0.25, 0.5]);
        assert_eq!(tail.states[(0, 0)], traj.states[(0, 2)]);
    }
}
