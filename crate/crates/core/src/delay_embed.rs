//! Hankel time-delay decompositions, neural decompositions of penultimate features,
//! delay embeddings and network surrogates for irregular or noisy observations.

use crate::coordnet::Network;
use crate::linalg::{singular_values, sorted_svd};
use crate::{csv, Error, Matrix, Result};

pub const DEFAULT_DOMINANCE: f64 = 0.02;
/// Delay-window length `nτ` for raw samples.
pub const RAW_WINDOW: f64 = 0.1;
/// Delay-window length `nτ` for network surrogates.
pub const SURROGATE_WINDOW: f64 = 0.2;
/// Default reconstruction gate for neural decomposition, relative to signal variance.
pub const DEFAULT_FEATURE_GATE: f64 = 1e-4;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum HankelSource {
    RawSamples,
    NetworkSurrogate,
}

/// `data[i][j] = y[i + j]`, shape `m × n`: each row is one delay window.
#[derive(Clone, Debug, PartialEq)]
pub struct HankelMatrix {
    pub data: Matrix,
    pub tau: f64,
    pub source: HankelSource,
}

pub fn hankel(series: &[f64], m: usize, n: usize) -> Result<HankelMatrix> {
    hankel_with(series, m, n, 1.0, HankelSource::RawSamples)
}

pub fn hankel_with(series: &[f64], m: usize, n: usize, tau: f64, source: HankelSource) -> Result<HankelMatrix> {
    if m == 0 || n == 0 {
        return Err(Error::InvalidArgument("Hankel dimensions must be positive".into()));
    }
    let needed = m + n - 1;
    if series.len() < needed {
        return Err(Error::InsufficientLength { needed, got: series.len() });
    }
    Ok(HankelMatrix { data: Matrix::from_fn(m, n, |i, j| series[i + j]), tau, source })
}

/// Window of `n = round(window / τ)` delays (at least 2) and `m = len - n + 1` rows.
pub fn hankel_for_window(series: &[f64], tau: f64, window: f64, source: HankelSource) -> Result<HankelMatrix> {
    let n = ((window / tau).round() as usize).max(2);
    if series.len() < n {
        return Err(Error::InsufficientLength { needed: n, got: series.len() });
    }
    hankel_with(series, series.len() - n + 1, n, tau, source)
}

/// Descending singular values and the count with `σ_i / σ_1 > dominance_ratio`.
#[derive(Clone, Debug, PartialEq)]
pub struct ModeSpectrum {
    pub singular_values: Vec<f64>,
    pub dominant_count: usize,
    pub dominance_ratio: f64,
}

impl ModeSpectrum {
    pub fn from_singular_values(mut singular_values: Vec<f64>, dominance_ratio: f64) -> Result<Self> {
        if !(dominance_ratio > 0.0 && dominance_ratio < 1.0) {
            return Err(Error::InvalidArgument(format!("dominance ratio {dominance_ratio} not in (0, 1)")));
        }
        singular_values.sort_by(|a, b| b.total_cmp(a));
        let top = singular_values.first().copied().unwrap_or(0.0);
        let dominant_count =
            if top > 0.0 { singular_values.iter().filter(|&&s| s / top > dominance_ratio).count() } else { 0 };
        Ok(Self { singular_values, dominant_count, dominance_ratio })
    }

    pub fn ratios(&self) -> Vec<f64> {
        let top = self.singular_values.first().copied().unwrap_or(0.0);
        self.singular_values.iter().map(|s| if top > 0.0 { s / top } else { 0.0 }).collect()
    }

    /// `index,sigma,sigma_ratio,dominant` with 1-based indices.
    pub fn to_csv(&self) -> String {
        let ratios = self.ratios();
        csv::table(
            &["index", "sigma", "sigma_ratio", "dominant"],
            self.singular_values.iter().zip(&ratios).enumerate().map(|(i, (s, r))| {
                vec![(i + 1).to_string(), csv::real(*s), csv::real(*r), u8::from(*r > self.dominance_ratio).to_string()]
            }),
        )
    }
}

pub fn time_delay_modes(h: &HankelMatrix, dominance_ratio: f64) -> Result<ModeSpectrum> {
    ModeSpectrum::from_singular_values(singular_values(&h.data), dominance_ratio)
}

/// Spectrum of the penultimate features `Ψ` (`N × K`) of a network fitted to `observed`.
///
/// Fails with [`Error::UntrustedFeatures`] when the network's MSE on `observed`,
/// relative to the observed variance, exceeds `gate`.
pub fn neural_modes(
    net: &Network,
    times: &[f64],
    observed: &[f64],
    dominance_ratio: f64,
    gate: f64,
) -> Result<ModeSpectrum> {
    if times.len() != observed.len() || times.is_empty() {
        return Err(Error::InvalidArgument("times and observations must have equal, nonzero length".into()));
    }
    let inputs = Matrix::from_row_slice(1, times.len(), times);
    let pred = net.forward_batch(&inputs);
    let n = observed.len() as f64;
    let mean = observed.iter().sum::<f64>() / n;
    let var = observed.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / n;
    let mse = observed.iter().enumerate().map(|(j, v)| (pred[(0, j)] - v).powi(2)).sum::<f64>() / n;
    let ratio = if var > 0.0 {
        mse / var
    } else if mse == 0.0 {
        0.0
    } else {
        f64::INFINITY
    };
    if !(ratio <= gate) {
        return Err(Error::UntrustedFeatures { ratio, gate });
    }
    feature_modes(&net.penultimate_features(&inputs), dominance_ratio)
}

/// Spectrum of an arbitrary feature matrix.
pub fn feature_modes(features: &Matrix, dominance_ratio: f64) -> Result<ModeSpectrum> {
    ModeSpectrum::from_singular_values(singular_values(features), dominance_ratio)
}

/// Dominant delay coordinates: row `r` is the time course `σ_r u_r` of the `r`-th
/// delay mode, one column per Hankel row.
#[derive(Clone, Debug, PartialEq)]
pub struct EmbeddingResult {
    pub coords: Matrix,
    pub k: usize,
    /// Orthonormal time profiles `u_r` (columns), `m × k`.
    pub left_vectors: Matrix,
    pub singular_values: Vec<f64>,
}

impl EmbeddingResult {
    /// `t,e1,...,ek`; `times` supplies the start time of each delay window.
    pub fn to_csv(&self, times: &[f64]) -> String {
        assert_eq!(times.len(), self.coords.ncols());
        let mut header: Vec<String> = vec!["t".into()];
        header.extend((1..=self.k).map(|i| format!("e{i}")));
        let header: Vec<&str> = header.iter().map(String::as_str).collect();
        csv::table(
            &header,
            times.iter().enumerate().map(|(j, t)| {
                let mut row = vec![csv::real(*t)];
                row.extend((0..self.k).map(|r| csv::real(self.coords[(r, j)])));
                row
            }),
        )
    }
}

pub fn takens_reconstruct(h: &HankelMatrix, k: usize) -> Result<EmbeddingResult> {
    let (m, n) = h.data.shape();
    if k == 0 || k > m.min(n) {
        return Err(Error::InvalidArgument(format!("embedding dimension {k} not in 1..={}", m.min(n))));
    }
    let svd = sorted_svd(&h.data);
    let left_vectors = svd.u.columns(0, k).into_owned();
    let mut coords = left_vectors.transpose();
    for r in 0..k {
        coords.row_mut(r).scale_mut(svd.singular_values[r]);
    }
    Ok(EmbeddingResult { coords, k, left_vectors, singular_values: svd.singular_values })
}

/// Uniform resampling of a scalar-input network's reconstruction.
#[derive(Clone, Debug, PartialEq)]
pub struct Surrogate {
    pub times: Vec<f64>,
    /// One row per network output.
    pub values: Matrix,
    /// Set when part of the grid lies outside the network's training range.
    pub warning: Option<String>,
}

impl Surrogate {
    pub fn component(&self, i: usize) -> Vec<f64> {
        self.values.row(i).iter().copied().collect()
    }
}

/// Evaluates the network on `t0, t0 + dt, ...` up to and including `t1` (within round-off).
pub fn surrogate_resample(net: &Network, t0: f64, t1: f64, dt: f64) -> Result<Surrogate> {
    if net.input_dim() != 1 {
        return Err(Error::InvalidArgument("surrogate needs a scalar-input network".into()));
    }
    if !(dt > 0.0) || !(t1 >= t0) {
        return Err(Error::InvalidArgument("need dt > 0 and t1 >= t0".into()));
    }
    let steps = ((t1 - t0) / dt + 1e-9).floor() as usize;
    let times: Vec<f64> = (0..=steps).map(|k| t0 + k as f64 * dt).collect();
    let (lo, hi) = net.input_range(0);
    let slack = 1e-9 * (hi - lo).abs().max(1.0);
    let warning = (t0 < lo - slack || times[steps] > hi + slack)
        .then(|| format!("resampling [{t0}, {}] extrapolates beyond the trained range [{lo}, {hi}]", times[steps]));
    let values = net.evaluate_times(&times);
    Ok(Surrogate { times, values, warning })
}

/// Similarity of two point clouds (`k × N`, matching columns) after removing means and
/// the best rotation/reflection and uniform scale: `tr Σ(A Bᵀ) / (‖A‖_F ‖B‖_F)`.
pub fn procrustes_correlation(a: &Matrix, b: &Matrix) -> Result<f64> {
    if a.shape() != b.shape() || a.ncols() < 2 {
        return Err(Error::InvalidArgument("point clouds must share a shape with at least two points".into()));
    }
    let center = |m: &Matrix| {
        let mut c = m.clone();
        for mut row in c.row_iter_mut() {
            let mean = row.mean();
            row.add_scalar_mut(-mean);
        }
        c
    };
    let (a0, b0) = (center(a), center(b));
    let denom = a0.norm() * b0.norm();
    if denom == 0.0 {
        return Err(Error::InvalidArgument("a point cloud is degenerate".into()));
    }
    let trace: f64 = singular_values(&(&a0 * b0.transpose())).iter().sum();
    Ok(trace / denom)
}

/// Largest distance between consecutive points relative to the cloud's diameter.
pub fn closed_curve_gap(coords: &Matrix) -> f64 {
    let n = coords.ncols();
    if n < 2 {
        return 0.0;
    }
    let dist = |i: usize, j: usize| (coords.column(i) - coords.column(j)).norm();
    let gap = (1..n).map(|j| dist(j - 1, j)).fold(0.0, f64::max);
    let mut diameter: f64 = 0.0;
    for i in 0..n {
        for j in (i + 1)..n {
            diameter = diameter.max(dist(i, j));
        }
    }
    if diameter == 0.0 {
        0.0
    } else {
        gap / diameter
    }
}
