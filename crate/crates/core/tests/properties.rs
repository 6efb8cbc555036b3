use dynoprior_core::basis_analysis::{estimate_lipschitz, lipschitz_upper_bound, partition_residual, stable_rank};
use dynoprior_core::coordnet::{load, save, Activation, ActivationKind, Network};
use dynoprior_core::csv::{parse_time_series, time_series};
use dynoprior_core::delay_embed::{hankel, takens_reconstruct, time_delay_modes};
use dynoprior_core::forecast::{rollout, SnapshotPairs};
use dynoprior_core::sindy::{fit, CandidateLibrary, DerivativeEstimate, DerivativeMethod};
use dynoprior_core::systems::{catalog, integrate, sample, SampleSet, Spacing};
use dynoprior_core::{forecast, Matrix};
use proptest::prelude::*;

fn binomial(n: usize, k: usize) -> usize {
    (0..k).fold(1, |acc, i| acc * (n - i) / (i + 1))
}

fn series(len: usize, seed: u64) -> Vec<f64> {
    (0..len)
        .map(|k| ((k as f64 + seed as f64) * 0.173).sin() + 0.4 * ((k as f64) * 0.061 + seed as f64).cos())
        .collect()
}

fn activation_kind() -> impl Strategy<Value = ActivationKind> {
    prop::sample::select(ActivationKind::ALL.to_vec())
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn hankel_antidiagonals_are_constant(len in 10usize..80, n in 2usize..10, seed in 0u64..100) {
        let y = series(len, seed);
        let m = len - n + 1;
        let h = hankel(&y, m, n).unwrap();
        for i in 0..m {
            for j in 0..n {
                prop_assert_eq!(h.data[(i, j)], y[i + j]);
            }
        }
    }

    #[test]
    fn spectrum_descends_and_counts_at_least_one(len in 30usize..120, n in 3usize..12, seed in 0u64..50) {
        let y = series(len, seed);
        let s = time_delay_modes(&hankel(&y, len - n + 1, n).unwrap(), 0.02).unwrap();
        prop_assert!(s.dominant_count >= 1);
        prop_assert!(s.singular_values.windows(2).all(|w| w[0] >= w[1]));
    }

    #[test]
    fn embedding_scales_with_observable(c in 0.01f64..100.0, seed in 0u64..50) {
        let y = series(200, seed);
        let scaled: Vec<f64> = y.iter().map(|v| v * c).collect();
        let a = time_delay_modes(&hankel(&y, 191, 10).unwrap(), 0.02).unwrap();
        let b = time_delay_modes(&hankel(&scaled, 191, 10).unwrap(), 0.02).unwrap();
        prop_assert_eq!(a.dominant_count, b.dominant_count);
        for (sa, sb) in a.singular_values.iter().zip(&b.singular_values) {
            prop_assert!((sa * c - sb).abs() <= 1e-9 * sb.max(1e-12) + 1e-12);
        }
    }

    #[test]
    fn takens_rows_are_orthogonal(seed in 0u64..50, k in 1usize..4) {
        let y = series(150, seed);
        let e = takens_reconstruct(&hankel(&y, 141, 10).unwrap(), k).unwrap();
        let gram = &e.coords * e.coords.transpose();
        for i in 0..k {
            for j in 0..k {
                if i != j {
                    prop_assert!(gram[(i, j)].abs() <= 1e-8 * gram[(i, i)].max(gram[(j, j)]));
                }
            }
        }
    }

    #[test]
    fn stable_rank_bounded_by_rank(rank in 1usize..5, rows in 5usize..20, cols in 5usize..12, seed in 0u64..100) {
        let a = Matrix::from_fn(rows, rank, |i, j| ((i * 7 + j * 3) as f64 + seed as f64 * 0.1).sin());
        let b = Matrix::from_fn(rank, cols, |i, j| ((i * 5 + j * 11) as f64 * 0.3 + seed as f64).cos());
        let s = stable_rank(&(a * b)).unwrap();
        prop_assert!(s >= 1.0);
        prop_assert!(s <= rank as f64 + 1e-9);
    }

    #[test]
    fn library_term_count(dim in 1usize..5, degree in 0usize..4) {
        let lib = CandidateLibrary::polynomial(dim, degree);
        prop_assert_eq!(lib.len(), binomial(dim + degree, degree));
        let values = lib.evaluate(&vec![0.7; dim]);
        prop_assert_eq!(values[0], 1.0);
    }

    #[test]
    fn stlsq_coefficients_are_zero_or_above_threshold(threshold in 0.01f64..0.5, seed in 0u64..20) {
        let spec = catalog("rossler").unwrap();
        let traj = integrate(&spec, &spec.initial_state, 0.0, 10.0, 0.01).unwrap();
        let s = sample(&traj, &[0, 1, 2], Spacing::Uniform { dt: 0.05 }, 0.05, seed).unwrap();
        let ydot = Matrix::from_fn(3, s.len(), |i, j| spec.derivative(&traj.state(j * 5)).unwrap()[i]);
        let est = DerivativeEstimate { times: s.times.clone(), ydot, method: DerivativeMethod::FiniteDifference };
        let model = fit(&s, &est, 2, threshold, 1e-6).unwrap();
        prop_assert!(model.gamma.iter().all(|g| *g == 0.0 || g.abs() >= threshold));
    }

    #[test]
    fn noiseless_samples_match_trajectory(factor in 1usize..6, seed in 0u64..1000) {
        let spec = catalog("vanderpol").unwrap();
        let traj = integrate(&spec, &spec.initial_state, 0.0, 5.0, 0.01).unwrap();
        let s = sample(&traj, &[1], Spacing::Decimated { factor }, 0.0, seed).unwrap();
        prop_assert_eq!(s.values.ncols(), s.times.len());
        for (j, t) in s.times.iter().enumerate() {
            let k = traj.times.iter().position(|u| u == t).unwrap();
            prop_assert_eq!(s.values[(0, j)], traj.states[(1, k)]);
        }
    }

    #[test]
    fn random_times_strictly_increase(count in 2usize..200, seed in 0u64..1000) {
        let spec = catalog("vanderpol").unwrap();
        let traj = integrate(&spec, &spec.initial_state, 0.0, 3.0, 0.01).unwrap();
        let s = sample(&traj, &[0], Spacing::Random { count }, 0.1, seed).unwrap();
        prop_assert_eq!(s.len(), count);
        prop_assert!(s.times.windows(2).all(|w| w[1] > w[0]));
    }

    #[test]
    fn partition_residuals_nonnegative(kind in activation_kind(), k in 1usize..200) {
        let r = partition_residual(Activation::new(kind, kind.default_omega()), k, 51).unwrap();
        prop_assert!(r.residuals.iter().all(|v| *v >= 0.0));
        prop_assert!(r.grid.iter().all(|x| (0.0..1.0).contains(x)));
    }

    #[test]
    fn lipschitz_estimate_below_bound(kind in activation_kind(), omega in 0.5f64..20.0, seed in 0u64..100) {
        let net = Network::init(&[1, 12, 12, 1], Activation::new(kind, omega), seed).unwrap();
        let samples = Matrix::from_fn(1, 40, |_, j| -1.0 + 2.0 * j as f64 / 39.0);
        for layer in 1..=net.depth() {
            let est = estimate_lipschitz(&net, &samples, layer).unwrap();
            prop_assert!(est <= lipschitz_upper_bound(&net, layer) * (1.0 + 1e-9));
        }
    }

    #[test]
    fn network_round_trip(kind in activation_kind(), width in 1usize..20, inputs in 1usize..4, seed in 0u64..1000) {
        let net = Network::init(&[inputs, width, 2], Activation::new(kind, 3.0), seed).unwrap();
        let back = load(&save(&net)).unwrap();
        prop_assert_eq!(back, net);
    }

    #[test]
    fn csv_round_trip(values in prop::collection::vec(-1e6f64..1e6, 3..30)) {
        let times: Vec<f64> = (0..values.len()).map(|k| k as f64 * 0.1).collect();
        let m = Matrix::from_row_slice(1, values.len(), &values);
        let (t, v) = parse_time_series(&time_series(&times, &m, "x")).unwrap();
        prop_assert_eq!(t, times);
        prop_assert_eq!(v, m);
    }

    #[test]
    fn rollout_is_deterministic(seed in 0u64..200, steps in 1usize..50) {
        let net = Network::init(&[2, 8, 2], Activation::sinc(1.0), seed).unwrap();
        let a = rollout(&net, &[0.1, -0.2], steps, 0.01).unwrap();
        let b = rollout(&net, &[0.1, -0.2], steps, 0.01).unwrap();
        prop_assert_eq!(a.trajectory, b.trajectory);
    }

    #[test]
    fn dmd_beats_perturbations(seed in 0u64..100, scale in 1e-4f64..1e-1) {
        let (d, n) = (3, 40);
        let x1 = Matrix::from_fn(d, n, |i, j| ((i + 1) as f64 * j as f64 * 0.37 + seed as f64).sin());
        let x2 = Matrix::from_fn(d, n, |i, j| ((i + 2) as f64 * j as f64 * 0.29 - seed as f64).cos());
        let pairs = SnapshotPairs { x1: x1.clone(), x2: x2.clone(), dt: 0.1, trajectory_ids: vec![0; n], skipped: vec![] };
        let model = forecast::fit_dmd(&pairs, d).unwrap();
        let best = (&x2 - &model.a_matrix * &x1).norm();
        let bump = Matrix::from_fn(d, d, |i, j| scale * ((i * 3 + j) as f64 + seed as f64).sin());
        prop_assert!(best <= (&x2 - (&model.a_matrix + bump) * &x1).norm());
        prop_assert!(model.rank_used <= d);
    }
}

#[test]
fn jacobian_matches_finite_differences() {
    let h = 1e-6;
    for kind in [ActivationKind::Sinc, ActivationKind::Gaussian, ActivationKind::Sine] {
        let net = Network::init(&[3, 10, 10, 2], Activation::new(kind, 2.0), 4).unwrap();
        let x = [0.3, -0.4, 0.15];
        let jac = net.jacobian(&x);
        for j in 0..3 {
            let (mut p, mut m) = (x, x);
            p[j] += h;
            m[j] -= h;
            let (fp, fm) = (net.forward(&p), net.forward(&m));
            for i in 0..2 {
                let fd = (fp[i] - fm[i]) / (2.0 * h);
                assert!((fd - jac[(i, j)]).abs() <= 1e-6 * fd.abs().max(1.0), "{kind:?} ({i},{j})");
            }
        }
    }
}

#[test]
fn noise_mean_is_near_zero() {
    let spec = catalog("vanderpol").unwrap();
    let traj = integrate(&spec, &spec.initial_state, 0.0, 200.0, 0.01).unwrap();
    let clean = sample(&traj, &[0], Spacing::Decimated { factor: 1 }, 0.0, 0).unwrap();
    let noisy = sample(&traj, &[0], Spacing::Decimated { factor: 1 }, 0.5, 17).unwrap();
    let n = clean.len() as f64;
    let mean = (&noisy.values - &clean.values).sum() / n;
    assert!(mean.abs() <= 3.0 * 0.5 / (12.0 * n).sqrt(), "mean {mean}");
}

#[test]
fn sample_set_from_values_keeps_shape() {
    let s = SampleSet::from_values(vec![0.0, 0.5, 1.0], Matrix::from_row_slice(2, 3, &[1.0, 2.0, 3.0, 4.0, 5.0, 6.0]));
    assert_eq!(s.observed_indices, vec![0, 1]);
    assert_eq!(s.uniform_dt(), Some(0.5));
}
