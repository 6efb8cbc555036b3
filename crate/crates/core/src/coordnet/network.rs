use nalgebra::DVector;
use rand::Rng as _;

use super::Activation;
use crate::linalg::gemm;
use crate::{rng, Error, Matrix, Result};

/// One affine map `z = W a + b`; `W` is `n_out × n_in`.
#[derive(Clone, Debug, PartialEq)]
pub struct Layer {
    pub weights: Matrix,
    pub bias: DVector<f64>,
}

impl Layer {
    pub fn inputs(&self) -> usize {
        self.weights.ncols()
    }

    pub fn outputs(&self) -> usize {
        self.weights.nrows()
    }
}

/// Fully connected coordinate network.
///
/// Raw inputs are first normalised per component as `(x - shift) * scale`. Layers
/// `1..L-1` apply the activation, the last layer is affine.
#[derive(Clone, Debug, PartialEq)]
pub struct Network {
    pub layers: Vec<Layer>,
    pub activation: Activation,
    pub input_shift: Vec<f64>,
    pub input_scale: Vec<f64>,
}

impl Network {
    /// Weights uniform on `±sqrt(6 / n_in)`, zero biases, identity input normalisation.
    pub fn init(widths: &[usize], activation: Activation, seed: u64) -> Result<Network> {
        if widths.len() < 2 || widths.contains(&0) {
            return Err(Error::InvalidArgument(format!("need at least two positive widths, got {widths:?}")));
        }
        let mut rng = rng::seeded(seed);
        let layers = widths
            .windows(2)
            .map(|w| {
                let (n_in, n_out) = (w[0], w[1]);
                let bound = (6.0 / n_in as f64).sqrt();
                // Row-major draw order so the stream does not depend on storage layout.
                let data: Vec<f64> = (0..n_in * n_out).map(|_| rng.random_range(-bound..bound)).collect();
                Layer { weights: Matrix::from_row_slice(n_out, n_in, &data), bias: DVector::zeros(n_out) }
            })
            .collect();
        Ok(Network { layers, activation, input_shift: vec![0.0; widths[0]], input_scale: vec![1.0; widths[0]] })
    }

    /// Maps each input interval `[lo_i, hi_i]` onto `[-1, 1]`.
    pub fn with_input_range(mut self, lo: &[f64], hi: &[f64]) -> Network {
        assert_eq!(lo.len(), self.input_dim());
        assert_eq!(hi.len(), self.input_dim());
        for i in 0..lo.len() {
            let span = hi[i] - lo[i];
            self.input_shift[i] = 0.5 * (lo[i] + hi[i]);
            self.input_scale[i] = if span > 0.0 { 2.0 / span } else { 1.0 };
        }
        self
    }

    /// Scalar-input shorthand for [`Network::with_input_range`].
    pub fn with_time_range(self, t0: f64, t1: f64) -> Network {
        self.with_input_range(&[t0], &[t1])
    }

    /// The raw input interval that maps onto `[-1, 1]` for component `i`.
    pub fn input_range(&self, i: usize) -> (f64, f64) {
        let half = 1.0 / self.input_scale[i];
        (self.input_shift[i] - half, self.input_shift[i] + half)
    }

    pub fn widths(&self) -> Vec<usize> {
        let mut w = vec![self.input_dim()];
        w.extend(self.layers.iter().map(Layer::outputs));
        w
    }

    pub fn input_dim(&self) -> usize {
        self.layers[0].inputs()
    }

    pub fn output_dim(&self) -> usize {
        self.layers.last().expect("at least one layer").outputs()
    }

    pub fn depth(&self) -> usize {
        self.layers.len()
    }

    pub fn parameter_count(&self) -> usize {
        self.layers.iter().map(|l| l.weights.len() + l.bias.len()).sum()
    }

    pub(crate) fn normalize(&self, x: &[f64]) -> DVector<f64> {
        DVector::from_iterator(
            x.len(),
            x.iter().zip(&self.input_shift).zip(&self.input_scale).map(|((v, s), c)| (v - s) * c),
        )
    }

    pub(crate) fn normalize_batch(&self, inputs: &Matrix) -> Matrix {
        let mut out = inputs.clone();
        for (i, mut row) in out.row_iter_mut().enumerate() {
            let (s, c) = (self.input_shift[i], self.input_scale[i]);
            row.apply(|v| *v = (*v - s) * c);
        }
        out
    }

    pub fn forward(&self, x: &[f64]) -> Vec<f64> {
        assert_eq!(x.len(), self.input_dim(), "input length");
        let mut a = self.normalize(x);
        let last = self.layers.len() - 1;
        for (l, layer) in self.layers.iter().enumerate() {
            let mut z = &layer.weights * &a + &layer.bias;
            if l < last {
                z.apply(|v| *v = self.activation.value(*v));
            }
            a = z;
        }
        a.iter().copied().collect()
    }

    /// Evaluates every column of `inputs` (`n0 × N`); returns `nL × N`.
    pub fn forward_batch(&self, inputs: &Matrix) -> Matrix {
        self.hidden_batch(inputs, self.depth())
    }

    /// Output of layer `k` (0 is the normalised input) for every column of `inputs`.
    pub fn hidden_batch(&self, inputs: &Matrix, k: usize) -> Matrix {
        assert_eq!(inputs.nrows(), self.input_dim(), "input rows");
        assert!(k <= self.depth());
        let mut a = self.normalize_batch(inputs);
        for (l, layer) in self.layers.iter().take(k).enumerate() {
            let mut z = Matrix::zeros(layer.outputs(), a.ncols());
            affine_into(layer, &a, &mut z);
            if l + 1 < self.depth() {
                z.apply(|v| *v = self.activation.value(*v));
            }
            a = z;
        }
        a
    }

    /// Row `i` is the last hidden layer's output at input column `i`; shape `N × n_{L-1}`.
    pub fn penultimate_features(&self, inputs: &Matrix) -> Matrix {
        self.hidden_batch(inputs, self.depth() - 1).transpose()
    }

    /// Derivative of the output with respect to the raw input, `nL × n0`.
    pub fn jacobian(&self, x: &[f64]) -> Matrix {
        self.layer_jacobian(x, self.depth())
    }

    /// Jacobian of layer `k`'s output (`1 ≤ k ≤ L`) with respect to the raw input.
    ///
    /// Built as the chained product `D_k W_k ... D_1 W_1 S` of activation-derivative
    /// diagonals, weights and the input scaling, with no `D` on the affine last layer.
    pub fn layer_jacobian(&self, x: &[f64], k: usize) -> Matrix {
        assert!(k >= 1 && k <= self.depth(), "layer index out of range");
        assert_eq!(x.len(), self.input_dim(), "input length");
        let mut a = self.normalize(x);
        let mut jac = Matrix::from_diagonal(&DVector::from_column_slice(&self.input_scale));
        for (l, layer) in self.layers.iter().take(k).enumerate() {
            let z = &layer.weights * &a + &layer.bias;
            jac = &layer.weights * jac;
            if l + 1 < self.depth() {
                let (vals, ders): (Vec<f64>, Vec<f64>) =
                    z.iter().map(|&v| self.activation.value_and_derivative(v)).unzip();
                for (i, d) in ders.iter().enumerate() {
                    jac.row_mut(i).scale_mut(*d);
                }
                a = DVector::from_vec(vals);
            } else {
                a = z;
            }
        }
        jac
    }

    /// Derivatives of every output with respect to input component `axis`, evaluated at
    /// each column of `inputs`; shape `nL × N`. Forward-mode, one pass over the batch.
    pub fn directional_derivative_batch(&self, inputs: &Matrix, axis: usize) -> Matrix {
        assert!(axis < self.input_dim());
        let n = inputs.ncols();
        let mut a = self.normalize_batch(inputs);
        let mut tangent = Matrix::zeros(self.input_dim(), n);
        tangent.row_mut(axis).fill(self.input_scale[axis]);
        for (l, layer) in self.layers.iter().enumerate() {
            let mut z = Matrix::zeros(layer.outputs(), n);
            affine_into(layer, &a, &mut z);
            let mut dz = Matrix::zeros(layer.outputs(), n);
            gemm(1.0, &layer.weights, false, &tangent, false, 0.0, &mut dz);
            if l + 1 < self.depth() {
                for (zv, dv) in z.iter_mut().zip(dz.iter_mut()) {
                    let (v, d) = self.activation.value_and_derivative(*zv);
                    *zv = v;
                    *dv *= d;
                }
            }
            a = z;
            tangent = dz;
        }
        tangent
    }

    /// `d output / d t` at each time for a scalar-input network; shape `nL × N`.
    pub fn time_derivative(&self, times: &[f64]) -> Matrix {
        assert_eq!(self.input_dim(), 1, "time derivative needs a scalar input");
        self.directional_derivative_batch(&Matrix::from_row_slice(1, times.len(), times), 0)
    }

    /// Evaluates a scalar-input network at each time; shape `nL × N`.
    pub fn evaluate_times(&self, times: &[f64]) -> Matrix {
        assert_eq!(self.input_dim(), 1, "time evaluation needs a scalar input");
        self.forward_batch(&Matrix::from_row_slice(1, times.len(), times))
    }
}

/// `z = W a + b 1ᵀ`.
pub(crate) fn affine_into(layer: &Layer, a: &Matrix, z: &mut Matrix) {
    for mut col in z.column_iter_mut() {
        col.copy_from(&layer.bias);
    }
    gemm(1.0, &layer.weights, false, a, false, 1.0, z);
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ActivationKind;

    /// Straightforward triple-loop evaluation used as an independent reference.
    fn reference_forward(net: &Network, x: &[f64]) -> Vec<f64> {
        let mut a: Vec<f64> =
            x.iter().enumerate().map(|(i, v)| (v - net.input_shift[i]) * net.input_scale[i]).collect();
        for (l, layer) in net.layers.iter().enumerate() {
            let mut z = vec![0.0; layer.outputs()];
            for r in 0..layer.outputs() {
                let mut acc = layer.bias[r];
                for c in 0..layer.inputs() {
                    acc += layer.weights[(r, c)] * a[c];
                }
                z[r] = if l + 1 < net.depth() {
                    let u = net.activation.omega * acc;
                    match net.activation.kind {
                        ActivationKind::Sinc => {
                            if u == 0.0 {
                                1.0
                            } else {
                                u.sin() / u
                            }
                        }
                        ActivationKind::Gaussian => (-acc * acc / net.activation.omega.powi(2)).exp(),
                        ActivationKind::Sine => u.sin(),
                        ActivationKind::Relu => acc.max(0.0),
                    }
                } else {
                    acc
                };
            }
            a = z;
        }
        a
    }

    fn random_net(kind: ActivationKind, seed: u64) -> Network {
        let mut net = Network::init(&[2, 7, 5, 3], Activation::new(kind, 1.3), seed).unwrap();
        let mut r = rng::seeded(seed + 100);
        for layer in &mut net.layers {
            layer.bias.apply(|b| *b = r.random_range(-0.5..0.5));
        }
        net.with_input_range(&[-2.0, 0.0], &[3.0, 10.0])
    }

    #[test]
    fn init_shapes_and_bounds() {
        let net = Network::init(&[1, 256, 256, 256, 3], Activation::sinc(30.0), 0).unwrap();
        let shapes: Vec<(usize, usize)> = net.layers.iter().map(|l| l.weights.shape()).collect();
        assert_eq!(shapes, vec![(256, 1), (256, 256), (256, 256), (3, 256)]);
        assert!(net.layers[0].weights.amax() <= 6f64.sqrt());
        assert!(net.layers.iter().all(|l| l.bias.iter().all(|&b| b == 0.0)));
        let again = Network::init(&[1, 256, 256, 256, 3], Activation::sinc(30.0), 0).unwrap();
        assert_eq!(net, again);
        assert!(Network::init(&[3], Activation::relu(), 0).is_err());
        assert!(Network::init(&[3, 0, 1], Activation::relu(), 0).is_err());
    }

    #[test]
    fn zero_network_outputs_zero() {
        let mut net = Network::init(&[1, 4, 2], Activation::sinc(30.0), 1).unwrap();
        for layer in &mut net.layers {
            layer.weights.fill(0.0);
        }
        assert_eq!(net.forward(&[0.3]), vec![0.0, 0.0]);
        assert_eq!(net.jacobian(&[0.3]), Matrix::zeros(2, 1));
    }

    #[test]
    fn sinc_zero_crossing() {
        let mut net = Network::init(&[1, 1, 1], Activation::sinc(std::f64::consts::PI), 0).unwrap();
        net.layers[0].weights[(0, 0)] = 1.0;
        net.layers[1].weights[(0, 0)] = 1.0;
        assert!(net.forward(&[1.0])[0].abs() < 1e-15);
    }

    #[test]
    fn batch_and_single_forward_match_reference() {
        for kind in ActivationKind::ALL {
            let net = random_net(kind, 3);
            let inputs = Matrix::from_fn(2, 9, |i, j| (i as f64 + 1.0) * (j as f64 * 0.37).sin() * 3.0);
            let batch = net.forward_batch(&inputs);
            for j in 0..9 {
                let x = [inputs[(0, j)], inputs[(1, j)]];
                let want = reference_forward(&net, &x);
                let single = net.forward(&x);
                for i in 0..3 {
                    let tol = 1e-12 * want[i].abs().max(1.0);
                    assert!((single[i] - want[i]).abs() < tol, "{kind}");
                    assert!((batch[(i, j)] - want[i]).abs() < tol, "{kind}");
                }
            }
        }
    }

    #[test]
    fn jacobian_matches_central_differences() {
        let h = 1e-5;
        for kind in ActivationKind::ALL {
            let net = random_net(kind, 11);
            for x in [[0.37, 4.1], [-1.2, 8.3], [2.2, 0.9]] {
                let jac = net.jacobian(&x);
                for c in 0..2 {
                    let (mut xp, mut xm) = (x, x);
                    xp[c] += h;
                    xm[c] -= h;
                    let (fp, fm) = (net.forward(&xp), net.forward(&xm));
                    for r in 0..3 {
                        let fd = (fp[r] - fm[r]) / (2.0 * h);
                        let err = (fd - jac[(r, c)]).abs() / jac[(r, c)].abs().max(1e-3);
                        assert!(err < 1e-5, "{kind} ({r},{c}): {fd} vs {}", jac[(r, c)]);
                    }
                }
            }
        }
    }

    #[test]
    fn affine_network_jacobian_is_weight_times_scale() {
        let net = Network::init(&[3, 2], Activation::sinc(5.0), 4).unwrap();
        assert_eq!(net.jacobian(&[0.1, 0.2, 0.3]), net.layers[0].weights);
    }

    #[test]
    fn directional_derivatives_match_jacobian_columns() {
        let net = random_net(ActivationKind::Sinc, 5);
        let inputs = Matrix::from_fn(2, 4, |i, j| (i * 3 + j) as f64 * 0.4 - 1.0);
        for axis in 0..2 {
            let d = net.directional_derivative_batch(&inputs, axis);
            for j in 0..4 {
                let jac = net.jacobian(&[inputs[(0, j)], inputs[(1, j)]]);
                for r in 0..3 {
                    assert!((d[(r, j)] - jac[(r, axis)]).abs() < 1e-12 * jac[(r, axis)].abs().max(1.0));
                }
            }
        }
    }

    #[test]
    fn penultimate_features_match_truncated_forward() {
        let net = Network::init(&[1, 20, 20, 20, 1], Activation::sinc(10.0), 2).unwrap().with_time_range(0.0, 5.0);
        let times: Vec<f64> = (0..50).map(|k| k as f64 * 0.1).collect();
        let feats = net.penultimate_features(&Matrix::from_row_slice(1, 50, &times));
        assert_eq!(feats.shape(), (50, 20));
        let mut truncated = net.clone();
        truncated.layers.pop();
        // Without the last layer the former penultimate layer becomes affine; reapply φ.
        for (j, t) in times.iter().enumerate() {
            let pre = truncated.forward(&[*t]);
            for (i, z) in pre.iter().enumerate() {
                assert!((feats[(j, i)] - net.activation.value(*z)).abs() < 1e-12);
            }
        }
        let constant = net.penultimate_features(&Matrix::from_element(1, 6, 0.7));
        for j in 1..6 {
            assert_eq!(constant.row(j), constant.row(0));
        }
    }

    #[test]
    fn time_range_maps_to_unit_interval() {
        let net = Network::init(&[1, 3, 1], Activation::sine(1.0), 0).unwrap().with_time_range(10.0, 30.0);
        assert_eq!(net.normalize(&[10.0])[0], -1.0);
        assert_eq!(net.normalize(&[30.0])[0], 1.0);
        assert_eq!(net.input_range(0), (10.0, 30.0));
    }
}
