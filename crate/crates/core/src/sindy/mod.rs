//! Sparse identification of polynomial dynamics from samples.

mod derivatives;
mod library;

use nalgebra::DVector;

pub use derivatives::{
    derivative_finite_difference, derivative_network, derivative_spectral, rms_error, DerivativeEstimate,
    DerivativeMethod,
};
pub use library::CandidateLibrary;

use crate::linalg::solve_spd;
use crate::systems::{integrate, CatalogOptions, Params, SampleSet, SystemSpec, Trajectory};
use crate::{csv, Error, Matrix, Result};

pub const DEFAULT_DEGREE: usize = 2;
pub const DEFAULT_THRESHOLD: f64 = 0.1;
pub const DEFAULT_RIDGE: f64 = 1e-6;
const MAX_ROUNDS: usize = 20;

/// Sparse coefficients `Γ` (`Q × D`) over a candidate library.
#[derive(Clone, Debug, PartialEq)]
pub struct SindyModel {
    pub library: CandidateLibrary,
    pub gamma: Matrix,
    pub threshold: f64,
    pub ridge_lambda: f64,
}

/// Sequentially thresholded ridge regression of `ydot` onto `Θ(samples)`.
///
/// Each output column is solved independently: ridge-solve on the active terms, drop
/// terms with `|γ| < threshold`, repeat until the active set stops changing (at most
/// 20 rounds).
pub fn fit(
    samples: &SampleSet,
    ydot: &DerivativeEstimate,
    d_max: usize,
    threshold: f64,
    ridge_lambda: f64,
) -> Result<SindyModel> {
    if ydot.ydot.shape() != samples.values.shape() {
        return Err(Error::InvalidArgument(format!(
            "derivative shape {:?} does not match samples {:?}",
            ydot.ydot.shape(),
            samples.values.shape()
        )));
    }
    if !(threshold >= 0.0) || !(ridge_lambda >= 0.0) {
        return Err(Error::InvalidArgument("threshold and ridge must be non-negative".into()));
    }
    let library = CandidateLibrary::polynomial(samples.dim(), d_max);
    let theta = library.evaluate_batch(&samples.values);
    let gram = theta.transpose() * &theta;
    let q = library.len();
    let mut gamma = Matrix::zeros(q, samples.dim());
    for out in 0..samples.dim() {
        let target = ydot.ydot.row(out).transpose();
        if target.iter().all(|&v| v == 0.0) {
            continue;
        }
        let rhs = theta.transpose() * &target;
        let mut active: Vec<usize> = (0..q).collect();
        let mut coef = DVector::zeros(0);
        for _ in 0..MAX_ROUNDS {
            coef = ridge_solve(&gram, &rhs, &active, ridge_lambda);
            let keep: Vec<usize> =
                active.iter().zip(coef.iter()).filter(|(_, c)| c.abs() >= threshold).map(|(&i, _)| i).collect();
            if keep.is_empty() {
                return Err(Error::DegenerateModel { output: out });
            }
            if keep.len() == active.len() {
                break;
            }
            active = keep;
            coef = DVector::zeros(0);
        }
        if coef.len() != active.len() {
            coef = ridge_solve(&gram, &rhs, &active, ridge_lambda);
        }
        for (&i, &c) in active.iter().zip(coef.iter()) {
            if c.abs() >= threshold {
                gamma[(i, out)] = c;
            }
        }
    }
    Ok(SindyModel { library, gamma, threshold, ridge_lambda })
}

fn ridge_solve(gram: &Matrix, rhs: &DVector<f64>, active: &[usize], lambda: f64) -> DVector<f64> {
    let a = Matrix::from_fn(active.len(), active.len(), |i, j| {
        gram[(active[i], active[j])] + if i == j { lambda } else { 0.0 }
    });
    let b = DVector::from_iterator(active.len(), active.iter().map(|&i| rhs[i]));
    solve_spd(a, &b)
}

impl SindyModel {
    /// Model right-hand side `Γᵀ θ(x)`.
    pub fn rhs(&self, state: &[f64]) -> Vec<f64> {
        let row = self.library.evaluate(state);
        (0..self.gamma.ncols()).map(|d| row.iter().enumerate().map(|(q, v)| v * self.gamma[(q, d)]).sum()).collect()
    }

    pub fn dim(&self) -> usize {
        self.gamma.ncols()
    }

    /// The model as an integrable system.
    pub fn as_system(&self) -> SystemSpec {
        let model = self.clone();
        SystemSpec::new("sindy_model", self.dim(), Params::new(), vec![0.0; self.dim()], move |x, _, out| {
            out.copy_from_slice(&model.rhs(x));
            Ok(())
        })
    }

    /// One line per output, e.g. `dx/dt = -10.02*x + 9.97*y`.
    pub fn equations(&self) -> Vec<String> {
        (0..self.dim())
            .map(|d| {
                let mut s = format!("d{}/dt =", self.library.variable_names[d]);
                let mut first = true;
                for q in 0..self.library.len() {
                    let c = self.gamma[(q, d)];
                    if c == 0.0 {
                        continue;
                    }
                    let name = self.library.term_name(q);
                    let body = if name == "1" { format!("{:.4}", c.abs()) } else { format!("{:.4}*{name}", c.abs()) };
                    let sign = if c < 0.0 { "-" } else { "+" };
                    if first {
                        s.push_str(&format!(" {}{body}", if c < 0.0 { "-" } else { "" }));
                        first = false;
                    } else {
                        s.push_str(&format!(" {sign} {body}"));
                    }
                }
                if first {
                    s.push_str(" 0");
                }
                s
            })
            .collect()
    }

    /// `term,coef_x0,coef_x1,...`
    pub fn to_csv(&self) -> String {
        let mut header = vec!["term".to_string()];
        header.extend((0..self.dim()).map(|d| format!("coef_x{d}")));
        let header: Vec<&str> = header.iter().map(String::as_str).collect();
        csv::table(
            &header,
            (0..self.library.len()).map(|q| {
                let mut row = vec![self.library.term_name(q)];
                row.extend((0..self.dim()).map(|d| csv::real(self.gamma[(q, d)])));
                row
            }),
        )
    }

    /// Terms with a nonzero coefficient, per output.
    pub fn support(&self) -> Vec<Vec<usize>> {
        support_of(&self.gamma)
    }
}

pub fn support_of(gamma: &Matrix) -> Vec<Vec<usize>> {
    (0..gamma.ncols()).map(|d| (0..gamma.nrows()).filter(|&q| gamma[(q, d)] != 0.0).collect()).collect()
}

/// Integrates the recovered model with RK4.
pub fn simulate_model(model: &SindyModel, x0: &[f64], t0: f64, t1: f64, dt: f64) -> Result<Trajectory> {
    integrate(&model.as_system(), x0, t0, t1, dt)
}

/// `‖Γ - Γ_true‖_F / ‖Γ_true‖_F`.
pub fn coefficient_error(estimate: &Matrix, truth: &Matrix) -> f64 {
    (estimate - truth).norm() / truth.norm()
}

/// Largest `|γ - γ_true| / |γ_true|` over the true nonzero terms.
pub fn max_relative_coefficient_error(estimate: &Matrix, truth: &Matrix) -> f64 {
    truth
        .iter()
        .zip(estimate.iter())
        .filter(|(t, _)| **t != 0.0)
        .map(|(t, e)| (e - t).abs() / t.abs())
        .fold(0.0, f64::max)
}

/// Ground-truth `Γ` of a polynomial catalog system in the degree-`d_max` library.
pub fn true_coefficients(name: &str, params: &Params, options: CatalogOptions, d_max: usize) -> Result<Matrix> {
    let p = |k: &str| SystemSpec::require(params, name, k);
    let (dim, entries): (usize, Vec<(usize, Vec<u32>, f64)>) = match name {
        "lorenz3" => {
            let (s, r, b) = (p("sigma")?, p("rho")?, p("beta")?);
            let sign = if options.canonical_lorenz { 1.0 } else { -1.0 };
            (
                3,
                vec![
                    (0, vec![1, 0, 0], -s),
                    (0, vec![0, 1, 0], s),
                    (1, vec![1, 0, 0], r),
                    (1, vec![0, 1, 0], -1.0),
                    (1, vec![1, 0, 1], -1.0),
                    (2, vec![1, 1, 0], sign),
                    (2, vec![0, 0, 1], -b),
                ],
            )
        }
        "chen" => {
            let (a, b, d) = (p("alpha")?, p("beta")?, p("delta")?);
            (
                3,
                vec![
                    (0, vec![1, 0, 0], a),
                    (0, vec![0, 1, 1], -1.0),
                    (1, vec![0, 1, 0], b),
                    (1, vec![1, 0, 1], 1.0),
                    (2, vec![0, 0, 1], d),
                    (2, vec![1, 1, 0], 1.0 / 3.0),
                ],
            )
        }
        "rossler" => {
            let (a, b, c) = (p("a")?, p("b")?, p("c")?);
            (
                3,
                vec![
                    (0, vec![0, 1, 0], -1.0),
                    (0, vec![0, 0, 1], -1.0),
                    (1, vec![1, 0, 0], 1.0),
                    (1, vec![0, 1, 0], a),
                    (2, vec![0, 0, 0], b),
                    (2, vec![1, 0, 1], 1.0),
                    (2, vec![0, 0, 1], -c),
                ],
            )
        }
        "vanderpol" => {
            let mu = p("mu")?;
            (2, vec![(0, vec![1, 0], mu), (0, vec![3, 0], -mu / 3.0), (0, vec![0, 1], -mu), (1, vec![1, 0], 1.0 / mu)])
        }
        "duffing" => {
            let (d, a, b) = (p("delta")?, p("alpha")?, p("beta")?);
            (2, vec![(0, vec![0, 1], 1.0), (1, vec![0, 1], -d), (1, vec![1, 0], -a), (1, vec![3, 0], -b)])
        }
        "limit_cycle" => (
            2,
            vec![
                (0, vec![0, 1], -1.0),
                (0, vec![1, 0], 1.0),
                (0, vec![3, 0], -1.0),
                (0, vec![1, 2], -1.0),
                (1, vec![1, 0], 1.0),
                (1, vec![0, 1], 1.0),
                (1, vec![2, 1], -1.0),
                (1, vec![0, 3], -1.0),
            ],
        ),
        other => {
            return Err(Error::InvalidArgument(format!("no reference coefficients for `{other}`")));
        }
    };
    let library = CandidateLibrary::polynomial(dim, d_max);
    let mut gamma = Matrix::zeros(library.len(), dim);
    for (out, exps, c) in entries {
        let q = library.index_of(&exps).ok_or_else(|| {
            Error::InvalidArgument(format!("`{name}` needs polynomial degree {}", exps.iter().sum::<u32>()))
        })?;
        gamma[(q, out)] = c;
    }
    Ok(gamma)
}
