use rand::seq::index;
use rand::Rng as _;

use super::Trajectory;
use crate::{rng, Error, Matrix, Result};

/// How measurement times are picked from a trajectory.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Spacing {
    /// Every `dt` seconds; `dt` must be a whole multiple of the trajectory step.
    Uniform { dt: f64 },
    /// `count` distinct trajectory times drawn uniformly at random, sorted.
    Random { count: usize },
    /// Every `factor`-th trajectory sample.
    Decimated { factor: usize },
}

/// Measurements `y(t) = g(x(t)) + η` with `g` a coordinate projection and
/// `η ~ U(-n, n)` i.i.d. per entry. `values` is `observed × len`.
#[derive(Clone, Debug, PartialEq)]
pub struct SampleSet {
    pub times: Vec<f64>,
    pub values: Matrix,
    pub observed_indices: Vec<usize>,
    pub noise_amplitude: f64,
    pub spacing: Spacing,
}

impl SampleSet {
    /// Wraps raw measurements; spacing is inferred from the times.
    pub fn from_values(times: Vec<f64>, values: Matrix) -> Self {
        assert_eq!(times.len(), values.ncols(), "one column per time");
        let observed_indices = (0..values.nrows()).collect();
        let count = times.len();
        let spacing = match uniform_step(&times) {
            Some(dt) => Spacing::Uniform { dt },
            None => Spacing::Random { count },
        };
        Self { times, values, observed_indices, noise_amplitude: 0.0, spacing }
    }

    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.values.nrows()
    }

    /// The common step if the times are uniformly spaced.
    pub fn uniform_dt(&self) -> Option<f64> {
        uniform_step(&self.times)
    }

    /// Row `i` as a plain vector.
    pub fn component(&self, i: usize) -> Vec<f64> {
        self.values.row(i).iter().copied().collect()
    }
}

pub(crate) fn uniform_step(times: &[f64]) -> Option<f64> {
    if times.len() < 2 {
        return None;
    }
    let dt = (times[times.len() - 1] - times[0]) / (times.len() - 1) as f64;
    if !(dt > 0.0) {
        return None;
    }
    let ok = times.windows(2).all(|w| ((w[1] - w[0]) - dt).abs() <= 1e-6 * dt);
    ok.then_some(dt)
}

/// Measures `traj` on the chosen components and times, adding seeded uniform noise.
///
/// Uniform spacing keeps times `k·dt` strictly before the trajectory's final time, so a
/// trajectory over `[0, 100]` sampled every `0.1` yields 1000 measurements.
pub fn sample(
    traj: &Trajectory,
    observed_indices: &[usize],
    spacing: Spacing,
    noise_amplitude: f64,
    seed: u64,
) -> Result<SampleSet> {
    if !(noise_amplitude >= 0.0) {
        return Err(Error::InvalidArgument(format!("noise amplitude must be >= 0, got {noise_amplitude}")));
    }
    if observed_indices.is_empty() {
        return Err(Error::InvalidArgument("no components observed".into()));
    }
    if let Some(&bad) = observed_indices.iter().find(|&&i| i >= traj.dim()) {
        return Err(Error::InvalidArgument(format!("component {bad} out of range for dimension {}", traj.dim())));
    }
    let len = traj.len();
    let columns: Vec<usize> = match spacing {
        Spacing::Uniform { dt } => {
            let step = uniform_step(&traj.times)
                .ok_or_else(|| Error::UnsupportedSpacing("trajectory is not uniformly spaced".into()))?;
            let ratio = dt / step;
            let stride = ratio.round();
            if !(stride >= 1.0) || (ratio - stride).abs() > 1e-6 * ratio {
                return Err(Error::UnsupportedSpacing(format!(
                    "sampling interval {dt} is not a multiple of the trajectory step {step}"
                )));
            }
            let stride = stride as usize;
            (0..).map(|k| k * stride).take_while(|&i| i < len.saturating_sub(1).max(1)).collect()
        }
        Spacing::Random { count } => {
            let pool = len.saturating_sub(1).max(1);
            if count == 0 || count > pool {
                return Err(Error::EmptySample(format!("cannot draw {count} distinct times from {pool}")));
            }
            let mut picker = rng::stream(seed, 1);
            let mut idx = index::sample(&mut picker, pool, count).into_vec();
            idx.sort_unstable();
            idx
        }
        Spacing::Decimated { factor } => {
            if factor == 0 {
                return Err(Error::InvalidArgument("decimation factor must be positive".into()));
            }
            if factor > len {
                return Err(Error::EmptySample(format!("decimation factor {factor} exceeds trajectory length {len}")));
            }
            (0..len).step_by(factor).collect()
        }
    };
    if columns.is_empty() {
        return Err(Error::EmptySample("no sample times selected".into()));
    }
    let times: Vec<f64> = columns.iter().map(|&j| traj.times[j]).collect();
    let mut values =
        Matrix::from_fn(observed_indices.len(), columns.len(), |r, c| traj.states[(observed_indices[r], columns[c])]);
    if noise_amplitude > 0.0 {
        let mut noise = rng::stream(seed, 0);
        // Column-major order: time by time, component within time.
        for v in values.iter_mut() {
            *v += noise.random_range(-noise_amplitude..noise_amplitude);
        }
    }
    Ok(SampleSet { times, values, observed_indices: observed_indices.to_vec(), noise_amplitude, spacing })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::systems::{catalog, integrate};

    fn lorenz_traj() -> Trajectory {
        let spec = catalog("lorenz3").unwrap();
        integrate(&spec, &spec.initial_state, 0.0, 100.0, 0.01).unwrap()
    }

    #[test]
    fn uniform_grid_of_experiment_one() {
        let s = sample(&lorenz_traj(), &[0, 1, 2], Spacing::Uniform { dt: 0.1 }, 0.0, 0).unwrap();
        assert_eq!(s.len(), 1000);
        assert!((s.times[999] - 99.9).abs() < 1e-9);
        assert!((s.uniform_dt().unwrap() - 0.1).abs() < 1e-12);
    }

    #[test]
    fn zero_noise_copies_trajectory() {
        let traj = lorenz_traj();
        let s = sample(&traj, &[2, 0], Spacing::Uniform { dt: 0.1 }, 0.0, 5).unwrap();
        for (c, &t) in s.times.iter().enumerate() {
            let j = (t / 0.01).round() as usize;
            assert_eq!(s.values[(0, c)], traj.states[(2, j)]);
            assert_eq!(s.values[(1, c)], traj.states[(0, j)]);
        }
    }

    #[test]
    fn same_seed_same_noise() {
        let traj = lorenz_traj();
        let a = sample(&traj, &[0], Spacing::Random { count: 300 }, 0.5, 9).unwrap();
        let b = sample(&traj, &[0], Spacing::Random { count: 300 }, 0.5, 9).unwrap();
        let c = sample(&traj, &[0], Spacing::Random { count: 300 }, 0.5, 10).unwrap();
        assert_eq!(a, b);
        assert_ne!(a.values, c.values);
        assert!(a.times.windows(2).all(|w| w[0] < w[1]));
    }

    #[test]
    fn decimation_beyond_length_is_empty() {
        let traj = lorenz_traj();
        assert!(matches!(
            sample(&traj, &[0], Spacing::Decimated { factor: 20_000 }, 0.0, 0),
            Err(Error::EmptySample(_))
        ));
        let s = sample(&traj, &[0], Spacing::Decimated { factor: 20 }, 0.0, 0).unwrap();
        assert_eq!(s.len(), 501);
    }

    #[test]
    fn non_multiple_interval_is_rejected() {
        assert!(sample(&lorenz_traj(), &[0], Spacing::Uniform { dt: 0.015 }, 0.0, 0).is_err());
    }

    #[test]
    fn noise_mean_is_centred() {
        let zeros = Trajectory { times: (0..10_001).map(|k| k as f64).collect(), states: Matrix::zeros(1, 10_001) };
        let n = 0.8;
        let s = sample(&zeros, &[0], Spacing::Decimated { factor: 1 }, n, 3).unwrap();
        let mean = s.values.mean();
        assert!(mean.abs() < 3.0 * n / (12.0f64 * 1e4).sqrt(), "mean {mean}");
        assert!(s.values.iter().all(|v| v.abs() < n));
    }
}
