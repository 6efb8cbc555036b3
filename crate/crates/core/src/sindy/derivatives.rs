use std::f64::consts::PI;

use rustfft::num_complex::Complex;
use rustfft::FftPlanner;

use crate::coordnet::Network;
use crate::systems::SampleSet;
use crate::{Error, Matrix, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum DerivativeMethod {
    FiniteDifference,
    Spectral,
    NetworkJacobian,
}

impl DerivativeMethod {
    pub fn name(self) -> &'static str {
        match self {
            Self::FiniteDifference => "finite_difference",
            Self::Spectral => "spectral",
            Self::NetworkJacobian => "network_jacobian",
        }
    }
}

/// Estimated `dY/dt`; `ydot` is `d × N`, aligned with `times`.
#[derive(Clone, Debug, PartialEq)]
pub struct DerivativeEstimate {
    pub times: Vec<f64>,
    pub ydot: Matrix,
    pub method: DerivativeMethod,
}

fn require_uniform(samples: &SampleSet, min: usize) -> Result<f64> {
    if samples.len() < min {
        return Err(Error::InsufficientLength { needed: min, got: samples.len() });
    }
    samples
        .uniform_dt()
        .ok_or_else(|| Error::UnsupportedSpacing("this derivative estimator needs uniformly spaced samples".into()))
}

/// Second-order central differences, second-order one-sided at both ends.
pub fn derivative_finite_difference(samples: &SampleSet) -> Result<DerivativeEstimate> {
    let h = require_uniform(samples, 3)?;
    let y = &samples.values;
    let n = y.ncols();
    let mut ydot = Matrix::zeros(y.nrows(), n);
    for i in 0..y.nrows() {
        ydot[(i, 0)] = (-3.0 * y[(i, 0)] + 4.0 * y[(i, 1)] - y[(i, 2)]) / (2.0 * h);
        for j in 1..n - 1 {
            ydot[(i, j)] = (y[(i, j + 1)] - y[(i, j - 1)]) / (2.0 * h);
        }
        ydot[(i, n - 1)] = (3.0 * y[(i, n - 1)] - 4.0 * y[(i, n - 2)] + y[(i, n - 3)]) / (2.0 * h);
    }
    Ok(DerivativeEstimate { times: samples.times.clone(), ydot, method: DerivativeMethod::FiniteDifference })
}

/// FFT differentiation: multiply each frequency bin by `i·2πf` and transform back.
/// The Nyquist bin of an even-length series is zeroed.
pub fn derivative_spectral(samples: &SampleSet) -> Result<DerivativeEstimate> {
    let h = require_uniform(samples, 8)?;
    let n = samples.len();
    let mut planner = FftPlanner::<f64>::new();
    let fwd = planner.plan_fft_forward(n);
    let inv = planner.plan_fft_inverse(n);
    let span = n as f64 * h;
    let mut ydot = Matrix::zeros(samples.dim(), n);
    for i in 0..samples.dim() {
        let mut buf: Vec<Complex<f64>> = samples.values.row(i).iter().map(|&v| Complex::new(v, 0.0)).collect();
        fwd.process(&mut buf);
        for (k, c) in buf.iter_mut().enumerate() {
            let signed = if 2 * k < n {
                k as f64
            } else if 2 * k == n {
                0.0
            } else {
                k as f64 - n as f64
            };
            let omega = 2.0 * PI * signed / span;
            *c *= Complex::new(0.0, omega);
        }
        inv.process(&mut buf);
        for (j, c) in buf.iter().enumerate() {
            ydot[(i, j)] = c.re / n as f64;
        }
    }
    Ok(DerivativeEstimate { times: samples.times.clone(), ydot, method: DerivativeMethod::Spectral })
}

/// Analytic time derivative of a scalar-input network, with respect to raw time.
pub fn derivative_network(net: &Network, times: &[f64]) -> Result<DerivativeEstimate> {
    if net.input_dim() != 1 {
        return Err(Error::InvalidArgument("network derivative needs a scalar (time) input".into()));
    }
    Ok(DerivativeEstimate {
        times: times.to_vec(),
        ydot: net.time_derivative(times),
        method: DerivativeMethod::NetworkJacobian,
    })
}

/// Root-mean-square of `estimate - truth` over all entries.
pub fn rms_error(estimate: &Matrix, truth: &Matrix) -> f64 {
    ((estimate - truth).norm_squared() / truth.len() as f64).sqrt()
}
