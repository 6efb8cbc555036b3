//! Numerical checks of sampling-theory properties of activations, and the bandwidth
//! trends of network Lipschitz constants and feature stable ranks.

use std::f64::consts::PI;

use nalgebra::{DVector, SymmetricEigen};
use rayon::prelude::*;

use crate::coordnet::{Activation, ActivationKind, Network};
use crate::linalg::{gemm, spectral_norm};
use crate::{csv, Error, Matrix, Result};

/// Power-iteration settings for spectral norms.
pub const POWER_ITERATIONS: usize = 100;
pub const POWER_TOLERANCE: f64 = 1e-10;
const POWER_SEED: u64 = 0x5eed;

/// Generator whose integer shifts are summed in the partition-of-unity check.
///
/// Sinc uses the unit-bandwidth normalised form `sin(πx)/(πx)` regardless of ω; the
/// others use the activation as configured.
pub fn generator(activation: &Activation, x: f64) -> f64 {
    match activation.kind {
        ActivationKind::Sinc => {
            if x == 0.0 {
                1.0
            } else {
                (PI * x).sin() / (PI * x)
            }
        }
        _ => activation.value(x),
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct PartitionResidual {
    pub activation: Activation,
    pub truncation_k: usize,
    /// Uniform grid on `[0, 1)`.
    pub grid: Vec<f64>,
    /// `Σ_{|k| ≤ K} F(x + k)` at each grid point.
    pub sums: Vec<f64>,
    /// `|sum - 1|`.
    pub residuals: Vec<f64>,
}

impl PartitionResidual {
    pub fn max_residual(&self) -> f64 {
        self.residuals.iter().copied().fold(0.0, f64::max)
    }

    /// `|sum / mean(sum) - 1|`: the residual once the constant is rescaled to one.
    pub fn normalized_residuals(&self) -> Vec<f64> {
        let mean = self.sums.iter().sum::<f64>() / self.sums.len() as f64;
        self.sums.iter().map(|s| (s / mean - 1.0).abs()).collect()
    }

    pub fn max_normalized_residual(&self) -> f64 {
        self.normalized_residuals().into_iter().fold(0.0, f64::max)
    }

    pub fn to_csv(&self) -> String {
        csv::table(
            &["x", "residual"],
            self.grid.iter().zip(&self.residuals).map(|(x, r)| vec![csv::real(*x), csv::real(*r)]),
        )
    }
}

pub fn partition_residual(
    activation: Activation,
    truncation_k: usize,
    grid_points: usize,
) -> Result<PartitionResidual> {
    if truncation_k < 1 || grid_points == 0 {
        return Err(Error::InvalidArgument("need K >= 1 and at least one grid point".into()));
    }
    let k = truncation_k as i64;
    let grid: Vec<f64> = (0..grid_points).map(|j| j as f64 / grid_points as f64).collect();
    let sums: Vec<f64> = grid
        .iter()
        .map(|&x| {
            // Pair +k with -k so the alternating sinc tails cancel before accumulation.
            let mut s = generator(&activation, x);
            for i in 1..=k {
                let i = i as f64;
                s += generator(&activation, x + i) + generator(&activation, x - i);
            }
            s
        })
        .collect();
    let residuals = sums.iter().map(|s| (s - 1.0).abs()).collect();
    Ok(PartitionResidual { activation, truncation_k, grid, sums, residuals })
}

/// RMS error of the least-squares fit of `signal` (samples at `x_j = j / M` on one period)
/// by a constant plus `n_terms` cosine/sine pairs `cos(2πnx)`, `sin(2πnx)`.
pub fn sine_periodic_fit(signal: &[f64], n_terms: usize) -> Result<f64> {
    let m = signal.len();
    if n_terms < 1 {
        return Err(Error::InvalidArgument("n_terms must be at least 1".into()));
    }
    if m < 2 * n_terms + 1 {
        return Err(Error::InsufficientLength { needed: 2 * n_terms + 1, got: m });
    }
    let cols = 2 * n_terms + 1;
    let basis = Matrix::from_fn(m, cols, |j, c| {
        let x = j as f64 / m as f64;
        if c == 0 {
            1.0
        } else {
            let n = c.div_ceil(2) as f64;
            // sin(2πnx + π/2) and sin(2πnx)
            if c % 2 == 1 {
                (2.0 * PI * n * x).cos()
            } else {
                (2.0 * PI * n * x).sin()
            }
        }
    });
    let y = DVector::from_column_slice(signal);
    let coef = basis.clone().svd(true, true).solve(&y, 1e-12).map_err(|e| Error::InvalidArgument(e.to_string()))?;
    let resid = &basis * coef - y;
    Ok((resid.norm_squared() / m as f64).sqrt())
}

/// Largest spectral norm of layer `layer_k`'s input Jacobian over the columns of
/// `samples`; a lower bound on that layer map's Lipschitz constant.
pub fn estimate_lipschitz(net: &Network, samples: &Matrix, layer_k: usize) -> Result<f64> {
    if layer_k < 1 || layer_k > net.depth() {
        return Err(Error::InvalidArgument(format!("layer {layer_k} not in 1..={}", net.depth())));
    }
    if samples.nrows() != net.input_dim() {
        return Err(Error::InvalidArgument("sample rows must match the input width".into()));
    }
    let mut best: f64 = 0.0;
    for col in samples.column_iter() {
        let x: Vec<f64> = col.iter().copied().collect();
        let jac = net.layer_jacobian(&x, layer_k);
        best = best.max(spectral_norm(&jac, POWER_ITERATIONS, POWER_TOLERANCE, POWER_SEED));
    }
    Ok(best)
}

/// Product of layer spectral norms and activation-derivative suprema up to layer `k`,
/// including the input scaling: an upper bound for [`estimate_lipschitz`].
pub fn lipschitz_upper_bound(net: &Network, layer_k: usize) -> f64 {
    let scale = net.input_scale.iter().fold(0.0f64, |m, s| m.max(s.abs()));
    let mut bound = scale;
    for (l, layer) in net.layers.iter().take(layer_k).enumerate() {
        bound *= crate::linalg::singular_values(&layer.weights)[0];
        if l + 1 < net.depth() {
            bound *= net.activation.sup_derivative();
        }
    }
    bound
}

/// `‖F‖_F² / ‖F‖_op²`, clamped to `[1, min(N, K)]` against round-off.
pub fn stable_rank(features: &Matrix) -> Result<f64> {
    let fro = features.norm_squared();
    if !(fro > 0.0) {
        return Err(Error::UndefinedRank);
    }
    let (n, k) = features.shape();
    let mut gram = Matrix::zeros(k.min(n), k.min(n));
    if k <= n {
        gemm(1.0, features, true, features, false, 0.0, &mut gram);
    } else {
        gemm(1.0, features, false, features, true, 0.0, &mut gram);
    }
    let top = SymmetricEigen::new(gram).eigenvalues.iter().copied().fold(0.0, f64::max);
    Ok((fro / top).clamp(1.0, n.min(k) as f64))
}

#[derive(Clone, Debug, PartialEq)]
pub struct SweepPoint {
    pub omega: f64,
    pub seed: u64,
    pub lipschitz: f64,
    pub stable_rank: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct SweepResult {
    pub omegas: Vec<f64>,
    /// Median over seeds, per ω.
    pub lipschitz_estimates: Vec<f64>,
    pub stable_ranks: Vec<f64>,
    pub seeds: Vec<u64>,
    pub points: Vec<SweepPoint>,
}

impl SweepResult {
    pub fn to_csv(&self) -> String {
        csv::table(
            &["omega", "seed", "lipschitz", "stable_rank"],
            self.points.iter().map(|p| {
                vec![csv::real(p.omega), p.seed.to_string(), csv::real(p.lipschitz), csv::real(p.stable_rank)]
            }),
        )
    }
}

fn median(values: &mut [f64]) -> f64 {
    values.sort_by(f64::total_cmp);
    let n = values.len();
    if n % 2 == 1 {
        values[n / 2]
    } else {
        0.5 * (values[n / 2 - 1] + values[n / 2])
    }
}

/// For each ω and seed, initialises `widths` with that seed (so weights are shared
/// across ω) and records the last hidden layer's Lipschitz estimate and the stable rank
/// of the penultimate features at `samples`. Reports per-ω medians over seeds.
pub fn omega_sweep(
    widths: &[usize],
    kind: ActivationKind,
    omegas: &[f64],
    samples: &Matrix,
    seeds: &[u64],
) -> Result<SweepResult> {
    if omegas.len() < 3 || seeds.len() < 3 {
        return Err(Error::InvalidArgument("a sweep needs at least 3 bandwidths and 3 seeds".into()));
    }
    if widths.len() < 3 {
        return Err(Error::InvalidArgument("a sweep needs at least one hidden layer".into()));
    }
    let pairs: Vec<(f64, u64)> = omegas.iter().flat_map(|&w| seeds.iter().map(move |&s| (w, s))).collect();
    let points = pairs
        .par_iter()
        .map(|&(omega, seed)| {
            let net = Network::init(widths, Activation::new(kind, omega), seed)?;
            let lipschitz = estimate_lipschitz(&net, samples, net.depth() - 1)?;
            let stable_rank = stable_rank(&net.penultimate_features(samples))?;
            Ok(SweepPoint { omega, seed, lipschitz, stable_rank })
        })
        .collect::<Result<Vec<_>>>()?;
    let per = seeds.len();
    let mut lipschitz_estimates = Vec::with_capacity(omegas.len());
    let mut stable_ranks = Vec::with_capacity(omegas.len());
    for chunk in points.chunks(per) {
        lipschitz_estimates.push(median(&mut chunk.iter().map(|p| p.lipschitz).collect::<Vec<_>>()));
        stable_ranks.push(median(&mut chunk.iter().map(|p| p.stable_rank).collect::<Vec<_>>()));
    }
    Ok(SweepResult { omegas: omegas.to_vec(), lipschitz_estimates, stable_ranks, seeds: seeds.to_vec(), points })
}

/// Spearman rank correlation (average ranks for ties).
pub fn spearman(a: &[f64], b: &[f64]) -> f64 {
    assert_eq!(a.len(), b.len());
    let ra = ranks(a);
    let rb = ranks(b);
    let n = a.len() as f64;
    let ma = ra.iter().sum::<f64>() / n;
    let mb = rb.iter().sum::<f64>() / n;
    let cov: f64 = ra.iter().zip(&rb).map(|(x, y)| (x - ma) * (y - mb)).sum();
    let va: f64 = ra.iter().map(|x| (x - ma).powi(2)).sum();
    let vb: f64 = rb.iter().map(|y| (y - mb).powi(2)).sum();
    cov / (va * vb).sqrt()
}

fn ranks(v: &[f64]) -> Vec<f64> {
    let mut idx: Vec<usize> = (0..v.len()).collect();
    idx.sort_by(|&i, &j| v[i].total_cmp(&v[j]));
    let mut r = vec![0.0; v.len()];
    let mut i = 0;
    while i < idx.len() {
        let mut j = i;
        while j + 1 < idx.len() && v[idx[j + 1]] == v[idx[i]] {
            j += 1;
        }
        let avg = (i + j) as f64 / 2.0 + 1.0;
        for &k in &idx[i..=j] {
            r[k] = avg;
        }
        i = j + 1;
    }
    r
}

/// Samples needed on a full grid: `per_axis_frequency ^ dims`.
pub fn nyquist_sample_count(per_axis_frequency: f64, dims: u32) -> Result<f64> {
    if !(per_axis_frequency > 0.0) || dims < 1 {
        return Err(Error::InvalidArgument("frequency must be positive and dims >= 1".into()));
    }
    Ok(per_axis_frequency.powf(dims as f64))
}

/// `‖Σ_k c_k F(· - k)‖²_{L²} / ‖c‖²` for the normalised sinc generator with shifts
/// `k = -K..=K` (`coeffs.len() = 2K + 1`), by midpoint quadrature on `[-3K, 3K]`.
pub fn riesz_ratio(coeffs: &[f64], points_per_unit: usize) -> f64 {
    let k = (coeffs.len() / 2) as f64;
    let half = 3.0 * k.max(1.0) + 10.0;
    let steps = (2.0 * half * points_per_unit as f64) as usize;
    let h = 2.0 * half / steps as f64;
    let act = Activation::sinc(1.0);
    let mut energy = 0.0;
    for s in 0..steps {
        let x = -half + (s as f64 + 0.5) * h;
        let v: f64 = coeffs.iter().enumerate().map(|(i, c)| c * generator(&act, x - (i as f64 - k))).sum();
        energy += v * v * h;
    }
    energy / coeffs.iter().map(|c| c * c).sum::<f64>()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::singular_values;
    use crate::rng;
    use rand::Rng as _;
    use rand_distr::{Distribution, StandardNormal};

    #[test]
    fn sinc_partition_of_unity_improves_with_k() {
        let a = Activation::sinc(30.0);
        let r500 = partition_residual(a, 500, 64).unwrap().max_residual();
        let r5000 = partition_residual(a, 5000, 64).unwrap().max_residual();
        assert!(r500 < 1e-2, "{r500}");
        assert!(r5000 < 1e-3, "{r5000}");
    }

    #[test]
    fn relu_partial_sums_match_closed_form() {
        for k in [10usize, 100] {
            let p = partition_residual(Activation::relu(), k, 16).unwrap();
            for (x, s) in p.grid.iter().zip(&p.sums) {
                let kf = k as f64;
                let want = (kf + 1.0) * x + kf * (kf + 1.0) / 2.0;
                assert!((s - want).abs() < 1e-9 * want);
            }
        }
    }

    #[test]
    fn gaussian_normalized_residual_matches_poisson_summation() {
        // Σ_k e^{-(x+k)²} = √π (1 + 2 Σ_m e^{-π²m²} cos 2πmx)
        let p = partition_residual(Activation::gaussian(1.0), 50, 64).unwrap();
        let normalized = p.normalized_residuals();
        for (x, r) in p.grid.iter().zip(&normalized) {
            let theta = 1.0
                + 2.0 * (-PI * PI).exp() * (2.0 * PI * x).cos()
                + 2.0 * (-4.0 * PI * PI).exp() * (4.0 * PI * x).cos();
            assert!((r - (theta - 1.0).abs()).abs() < 1e-12, "{x}: {r}");
        }
        assert!(p.max_normalized_residual() < 1e-2);
    }

    #[test]
    fn periodic_fit_in_span_and_monotone() {
        let m = 256;
        let x: Vec<f64> = (0..m).map(|j| j as f64 / m as f64).collect();
        let s3: Vec<f64> = x.iter().map(|x| (2.0 * PI * 3.0 * x).sin()).collect();
        assert!(sine_periodic_fit(&s3, 3).unwrap() < 1e-10);
        assert!(sine_periodic_fit(&s3, 2).unwrap() > 0.5);
        let square: Vec<f64> = x.iter().map(|x| if *x < 0.5 { 1.0 } else { -1.0 }).collect();
        let errs: Vec<f64> = (1..=10).map(|n| sine_periodic_fit(&square, n).unwrap()).collect();
        assert!(errs.windows(2).all(|w| w[1] <= w[0] + 1e-12));
        assert!(errs[9] < errs[0]);
    }

    #[test]
    fn sawtooth_fit_matches_fourier_tail() {
        let m = 8192;
        let saw: Vec<f64> = (0..m).map(|j| j as f64 / m as f64 - 0.5).collect();
        let n = 10;
        let tail: f64 = ((n + 1)..200_000).map(|k| 1.0 / (2.0 * PI * PI * (k * k) as f64)).sum::<f64>().sqrt();
        let rms = sine_periodic_fit(&saw, n).unwrap();
        assert!(rms / tail < 2.0 && tail / rms < 2.0, "{rms} vs {tail}");
    }

    #[test]
    fn lipschitz_of_affine_net_is_operator_norm() {
        let net = Network::init(&[4, 3], Activation::relu(), 1).unwrap();
        let samples = Matrix::from_fn(4, 5, |i, j| (i + j) as f64);
        let est = estimate_lipschitz(&net, &samples, 1).unwrap();
        let exact = singular_values(&net.layers[0].weights)[0];
        assert!((est - exact).abs() < 1e-8 * exact);

        let mut zero = Network::init(&[1, 8, 8, 1], Activation::sinc(3.0), 1).unwrap();
        for l in &mut zero.layers {
            l.weights.fill(0.0);
        }
        assert_eq!(estimate_lipschitz(&zero, &samples.rows(0, 1).into_owned(), 2).unwrap(), 0.0);
    }

    #[test]
    fn lipschitz_grows_with_omega_and_respects_upper_bound() {
        let samples = Matrix::from_fn(1, 101, |_, j| j as f64 / 50.0 - 1.0);
        let base = Network::init(&[1, 32, 32, 1], Activation::sinc(5.0), 3).unwrap();
        let mut doubled = base.clone();
        doubled.activation.omega = 10.0;
        let a = estimate_lipschitz(&base, &samples, 2).unwrap();
        let b = estimate_lipschitz(&doubled, &samples, 2).unwrap();
        assert!(b > a, "{a} -> {b}");
        for net in [&base, &doubled] {
            for k in 1..=3 {
                let est = estimate_lipschitz(net, &samples, k).unwrap();
                assert!(est <= lipschitz_upper_bound(net, k) * (1.0 + 1e-9));
            }
        }
    }

    #[test]
    fn stable_rank_reference_cases() {
        let u = DVector::from_fn(6, |i, _| i as f64 + 1.0);
        let v = DVector::from_fn(4, |i, _| 1.0 - i as f64);
        assert!((stable_rank(&(&u * v.transpose())).unwrap() - 1.0).abs() < 1e-12);
        let q = Matrix::from_fn(5, 5, |i, j| if i == (j + 2) % 5 { -1.0 } else { 0.0 });
        assert!((stable_rank(&q).unwrap() - 5.0).abs() < 1e-12);
        assert!(matches!(stable_rank(&Matrix::zeros(3, 3)), Err(Error::UndefinedRank)));

        let mut r = rng::seeded(8);
        let g = Matrix::from_fn(100, 20, |_, _| StandardNormal.sample(&mut r));
        let s = singular_values(&g);
        let oracle = s.iter().map(|x| x * x).sum::<f64>() / (s[0] * s[0]);
        let sr = stable_rank(&g).unwrap();
        assert!((sr - oracle).abs() < 0.05 * oracle);
        assert!(sr <= 20.0);
    }

    #[test]
    fn sweep_with_repeated_omega_is_constant() {
        let samples = Matrix::from_fn(1, 40, |_, j| j as f64 / 20.0 - 1.0);
        let res = omega_sweep(&[1, 16, 16, 1], ActivationKind::Sinc, &[7.0; 3], &samples, &[1, 2, 3]).unwrap();
        assert!(res.lipschitz_estimates.iter().all(|v| *v == res.lipschitz_estimates[0]));
        assert!(res.stable_ranks.iter().all(|v| *v == res.stable_ranks[0]));
        assert_eq!(res.to_csv().lines().count(), 10);
        assert!(omega_sweep(&[1, 16, 1], ActivationKind::Sinc, &[1.0, 2.0], &samples, &[1, 2, 3]).is_err());
    }

    #[test]
    fn spearman_of_monotone_sequences() {
        assert_eq!(spearman(&[1.0, 2.0, 3.0, 4.0], &[0.1, 0.5, 0.7, 9.0]), 1.0);
        assert_eq!(spearman(&[1.0, 2.0, 3.0], &[3.0, 2.0, 1.0]), -1.0);
    }

    #[test]
    fn nyquist_counts() {
        let c = nyquist_sample_count(8.0, 14).unwrap();
        assert!((4.39e12..=4.40e12).contains(&c));
        // 100 trajectories x 800 snapshots gives the 1.81e-8 ratio; 800000 gives ten times it.
        assert!(((80_000.0 / c) / 1.81e-8 - 1.0).abs() < 0.01);
        assert!(((800_000.0 / c) / 1.819e-7 - 1.0).abs() < 0.001);
        assert_eq!(nyquist_sample_count(3.5, 1).unwrap(), 3.5);
        assert!(nyquist_sample_count(0.0, 2).is_err());
    }

    #[test]
    fn sinc_shifts_form_a_tight_frame() {
        let mut r = rng::seeded(4);
        let c: Vec<f64> = (0..401).map(|_| r.random_range(-1.0..1.0)).collect();
        let ratio = riesz_ratio(&c, 8);
        assert!((0.5..=2.0).contains(&ratio), "{ratio}");
    }
}
