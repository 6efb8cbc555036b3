use nalgebra::DVector;
use rand::seq::index;

use super::network::{affine_into, Layer};
use super::Network;
use crate::linalg::gemm;
use crate::{rng, Error, Matrix, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Batch {
    Full,
    /// Minibatches of this many columns, drawn without replacement each iteration.
    Size(usize),
}

#[derive(Clone, Debug, PartialEq)]
pub struct TrainConfig {
    pub iterations: usize,
    pub learning_rate: f64,
    pub batch: Batch,
    pub seed: u64,
    /// Record the training MSE every this many iterations (and at the end).
    pub loss_log_stride: usize,
    /// Precondition as if each output were scaled to unit variance (see [`train`]).
    pub standardize_targets: bool,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            iterations: 5000,
            learning_rate: 1e-4,
            batch: Batch::Full,
            seed: 0,
            loss_log_stride: 100,
            standardize_targets: true,
        }
    }
}

/// Training-set MSE recorded during [`train`].
#[derive(Clone, Debug, PartialEq)]
pub struct LossHistory {
    pub iterations: Vec<usize>,
    pub losses: Vec<f64>,
    pub initial_loss: f64,
    pub best_loss: f64,
    /// Iteration whose parameters were returned (0 means the starting parameters).
    pub best_iteration: usize,
}

/// Gradients of the MSE with respect to every layer's weights and biases.
#[derive(Clone, Debug)]
pub struct Gradients {
    pub loss: f64,
    pub layers: Vec<Layer>,
}

const BETA1: f64 = 0.9;
const BETA2: f64 = 0.999;
const EPS: f64 = 1e-8;

struct Workspace {
    /// Post-activation outputs; `acts[0]` is the normalised input.
    acts: Vec<Matrix>,
    /// Activation derivatives at each hidden pre-activation.
    ders: Vec<Matrix>,
}

fn forward_cached(net: &Network, normalized: &Matrix) -> (Matrix, Workspace) {
    let depth = net.depth();
    let mut acts = Vec::with_capacity(depth);
    let mut ders = Vec::with_capacity(depth - 1);
    let mut a = normalized.clone();
    for (l, layer) in net.layers.iter().enumerate() {
        let mut z = Matrix::zeros(layer.outputs(), a.ncols());
        affine_into(layer, &a, &mut z);
        if l + 1 < depth {
            let mut d = Matrix::zeros(z.nrows(), z.ncols());
            for (zv, dv) in z.iter_mut().zip(d.iter_mut()) {
                let (v, g) = net.activation.value_and_derivative(*zv);
                *zv = v;
                *dv = g;
            }
            ders.push(d);
        }
        acts.push(std::mem::replace(&mut a, z));
    }
    (a, Workspace { acts, ders })
}

fn backward(net: &Network, ws: &Workspace, mut delta: Matrix, grads: &mut [Layer]) {
    for l in (0..net.depth()).rev() {
        let g = &mut grads[l];
        gemm(1.0, &delta, false, &ws.acts[l], true, 0.0, &mut g.weights);
        for (i, b) in g.bias.iter_mut().enumerate() {
            *b = delta.row(i).sum();
        }
        if l > 0 {
            let w = &net.layers[l].weights;
            let mut prev = Matrix::zeros(w.ncols(), delta.ncols());
            gemm(1.0, w, true, &delta, false, 0.0, &mut prev);
            prev.component_mul_assign(&ws.ders[l - 1]);
            delta = prev;
        }
    }
}

fn zero_like(net: &Network) -> Vec<Layer> {
    net.layers
        .iter()
        .map(|l| Layer { weights: Matrix::zeros(l.outputs(), l.inputs()), bias: DVector::zeros(l.outputs()) })
        .collect()
}

/// MSE `mean((f(x) - y)²)` over all entries, and its parameter gradients.
pub fn mse_gradients(net: &Network, inputs: &Matrix, targets: &Matrix) -> Gradients {
    let (out, ws) = forward_cached(net, &net.normalize_batch(inputs));
    let (loss, delta) = loss_and_delta(&out, targets);
    let mut layers = zero_like(net);
    backward(net, &ws, delta, &mut layers);
    Gradients { loss, layers }
}

fn loss_and_delta(out: &Matrix, targets: &Matrix) -> (f64, Matrix) {
    let count = out.len() as f64;
    let mut delta = out - targets;
    let loss = delta.norm_squared() / count;
    delta *= 2.0 / count;
    (loss, delta)
}

/// MSE of `net` on the given data.
pub fn mse(net: &Network, inputs: &Matrix, targets: &Matrix) -> f64 {
    (net.forward_batch(inputs) - targets).norm_squared() / targets.len() as f64
}

/// Per-output target scale used to precondition training.
///
/// Optimising `sum_i |r_i|² / s_i²` with the last layer reparametrised as `W_L = diag(s) W̃`
/// is training on standardised targets, expressed without touching the parameters, so a
/// zero residual gives exactly zero updates.
struct OutputScale {
    std: Vec<f64>,
}

impl OutputScale {
    fn fit(targets: &Matrix, enabled: bool) -> Self {
        let n = targets.ncols() as f64;
        let std = targets
            .row_iter()
            .map(|r| {
                if !enabled {
                    return 1.0;
                }
                let m = r.sum() / n;
                let v = r.iter().map(|x| (x - m).powi(2)).sum::<f64>() / n;
                if v > 0.0 && v.is_finite() {
                    v.sqrt()
                } else {
                    1.0
                }
            })
            .collect();
        Self { std }
    }

    /// Gradient seed `d loss / d output` of the preconditioned loss.
    fn delta(&self, residual: &Matrix) -> Matrix {
        let count = residual.len() as f64;
        Matrix::from_fn(residual.nrows(), residual.ncols(), |i, j| {
            2.0 * residual[(i, j)] / (count * self.std[i] * self.std[i])
        })
    }
}

struct Adam {
    m: Vec<Layer>,
    v: Vec<Layer>,
    t: i32,
}

impl Adam {
    fn new(net: &Network) -> Self {
        Self { m: zero_like(net), v: zero_like(net), t: 0 }
    }

    /// One update; the last layer's row `i` moves with step `lr * row_scale[i]`.
    fn step(&mut self, net: &mut Network, grads: &[Layer], lr: f64, row_scale: &[f64]) {
        self.t += 1;
        let c1 = 1.0 - BETA1.powi(self.t);
        let c2 = 1.0 - BETA2.powi(self.t);
        let last = net.depth() - 1;
        for l in 0..net.depth() {
            let layer = &mut net.layers[l];
            let rows = layer.outputs();
            let scale = |idx: usize| if l == last { row_scale[idx % rows] } else { 1.0 };
            let (m, v) = (&mut self.m[l], &mut self.v[l]);
            update(
                layer.weights.as_mut_slice(),
                grads[l].weights.as_slice(),
                m.weights.as_mut_slice(),
                v.weights.as_mut_slice(),
                lr,
                c1,
                c2,
                scale,
            );
            update(
                layer.bias.as_mut_slice(),
                grads[l].bias.as_slice(),
                m.bias.as_mut_slice(),
                v.bias.as_mut_slice(),
                lr,
                c1,
                c2,
                scale,
            );
        }
    }
}

#[allow(clippy::too_many_arguments)]
#[inline]
fn update(
    p: &mut [f64],
    g: &[f64],
    m: &mut [f64],
    v: &mut [f64],
    lr: f64,
    c1: f64,
    c2: f64,
    scale: impl Fn(usize) -> f64,
) {
    for i in 0..p.len() {
        m[i] = BETA1 * m[i] + (1.0 - BETA1) * g[i];
        v[i] = BETA2 * v[i] + (1.0 - BETA2) * g[i] * g[i];
        p[i] -= lr * scale(i) * (m[i] / c1) / ((v[i] / c2).sqrt() + EPS);
    }
}

/// Fits `net` to `targets` (`nL × N`) at `inputs` (`n0 × N`) with Adam on the MSE.
///
/// The returned network holds the parameters with the lowest training-set MSE seen, so
/// its loss never exceeds the initial loss. With `standardize_targets` the output bias
/// first absorbs the mean residual and the optimiser sees each output divided by its
/// standard deviation; losses are always reported in raw units.
pub fn train(net: &Network, inputs: &Matrix, targets: &Matrix, cfg: &TrainConfig) -> Result<(Network, LossHistory)> {
    if inputs.ncols() != targets.ncols() || inputs.ncols() == 0 {
        return Err(Error::InvalidArgument(format!(
            "inputs have {} columns, targets {}",
            inputs.ncols(),
            targets.ncols()
        )));
    }
    if inputs.nrows() != net.input_dim() || targets.nrows() != net.output_dim() {
        return Err(Error::InvalidArgument("data rows do not match the network widths".into()));
    }
    if !(cfg.learning_rate > 0.0) || cfg.iterations == 0 {
        return Err(Error::InvalidArgument("learning rate and iterations must be positive".into()));
    }
    let n = inputs.ncols();
    let minibatch = match cfg.batch {
        Batch::Size(0) => return Err(Error::InvalidArgument("batch size must be positive".into())),
        Batch::Size(k) if k < n => Some(k),
        _ => None,
    };
    let stride = cfg.loss_log_stride.max(1);

    let scale = OutputScale::fit(targets, cfg.standardize_targets);
    let normalized = net.normalize_batch(inputs);
    let count = targets.len() as f64;

    let mut work = net.clone();
    if cfg.standardize_targets {
        // Start from the best constant offset so the optimiser only has to fit the shape.
        let residual = targets - work.hidden_batch_normalized(&normalized);
        let last = work.depth() - 1;
        for (i, row) in residual.row_iter().enumerate() {
            work.layers[last].bias[i] += row.sum() / n as f64;
        }
    }
    let mut adam = Adam::new(&work);
    let mut grads = zero_like(&work);
    let mut batch_rng = rng::stream(cfg.seed, 7);
    let mut best = work.clone();
    let mut best_loss = f64::INFINITY;
    let mut best_iteration = 0;
    let mut iterations = Vec::new();
    let mut losses = Vec::new();
    let mut initial_loss = f64::NAN;

    for it in 0..=cfg.iterations {
        let logged = it % stride == 0 || it == cfg.iterations;
        // Full-batch MSE of the parameters reached after `it` updates, when it is needed.
        let mut full = None;
        if minibatch.is_none() {
            let (out, ws) = forward_cached(&work, &normalized);
            let residual = out - targets;
            full = Some((residual.norm_squared() / count, Some((residual, ws))));
        } else if logged {
            let residual = work.hidden_batch_normalized(&normalized) - targets;
            full = Some((residual.norm_squared() / count, None));
        }
        let mut cached = None;
        if let Some((loss, data)) = full {
            if !loss.is_finite() {
                return Err(Error::TrainingDiverged { iteration: it });
            }
            if it == 0 {
                initial_loss = loss;
            }
            if loss < best_loss {
                best_loss = loss;
                best_iteration = it;
                best.clone_from(&work);
            }
            if logged {
                iterations.push(it);
                losses.push(loss);
            }
            cached = data;
        }
        if it == cfg.iterations {
            break;
        }
        match (minibatch, cached) {
            (None, Some((residual, ws))) => backward(&work, &ws, scale.delta(&residual), &mut grads),
            (Some(k), _) => {
                let mut idx = index::sample(&mut batch_rng, n, k).into_vec();
                idx.sort_unstable();
                let xb = normalized.select_columns(&idx);
                let (out, ws) = forward_cached(&work, &xb);
                let residual = out - targets.select_columns(&idx);
                if residual.iter().any(|v| !v.is_finite()) {
                    return Err(Error::TrainingDiverged { iteration: it });
                }
                backward(&work, &ws, scale.delta(&residual), &mut grads);
            }
            (None, None) => unreachable!("full batch always caches the forward pass"),
        }
        adam.step(&mut work, &grads, cfg.learning_rate, &scale.std);
    }

    let history = LossHistory { iterations, losses, initial_loss, best_loss, best_iteration };
    Ok((best, history))
}

impl Network {
    /// Forward pass on inputs that are already normalised.
    pub(crate) fn hidden_batch_normalized(&self, normalized: &Matrix) -> Matrix {
        let mut a = normalized.clone();
        for (l, layer) in self.layers.iter().enumerate() {
            let mut z = Matrix::zeros(layer.outputs(), a.ncols());
            affine_into(layer, &a, &mut z);
            if l + 1 < self.depth() {
                z.apply(|v| *v = self.activation.value(*v));
            }
            a = z;
        }
        a
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::{Activation, ActivationKind};
    use rand::Rng as _;

    fn random_net(kind: ActivationKind) -> Network {
        let mut net = Network::init(&[2, 6, 5, 2], Activation::new(kind, 1.1), 21).unwrap();
        let mut r = rng::seeded(5);
        for layer in &mut net.layers {
            layer.bias.apply(|b| *b = r.random_range(-0.3..0.3));
        }
        net
    }

    #[test]
    fn gradients_match_central_differences() {
        let inputs = Matrix::from_fn(2, 7, |i, j| ((i * 7 + j) as f64 * 0.71).sin() * 1.5);
        let targets = Matrix::from_fn(2, 7, |i, j| ((i + j) as f64 * 0.3).cos());
        let h = 1e-5;
        for kind in ActivationKind::ALL {
            let net = random_net(kind);
            let g = mse_gradients(&net, &inputs, &targets);
            for l in 0..net.depth() {
                for idx in 0..net.layers[l].weights.len() {
                    let mut p = net.clone();
                    p.layers[l].weights.as_mut_slice()[idx] += h;
                    let mut m = net.clone();
                    m.layers[l].weights.as_mut_slice()[idx] -= h;
                    let fd = (mse(&p, &inputs, &targets) - mse(&m, &inputs, &targets)) / (2.0 * h);
                    let an = g.layers[l].weights.as_slice()[idx];
                    assert!((fd - an).abs() <= 1e-4 * an.abs().max(1e-4), "{kind} W{l}[{idx}] {fd} vs {an}");
                }
                for idx in 0..net.layers[l].bias.len() {
                    let mut p = net.clone();
                    p.layers[l].bias[idx] += h;
                    let mut m = net.clone();
                    m.layers[l].bias[idx] -= h;
                    let fd = (mse(&p, &inputs, &targets) - mse(&m, &inputs, &targets)) / (2.0 * h);
                    let an = g.layers[l].bias[idx];
                    assert!((fd - an).abs() <= 1e-4 * an.abs().max(1e-4), "{kind} b{l}[{idx}] {fd} vs {an}");
                }
            }
        }
    }

    #[test]
    fn fixed_point_stays_at_zero_loss() {
        let net = random_net(ActivationKind::Sinc);
        let inputs = Matrix::from_fn(2, 10, |i, j| (i + 2 * j) as f64 * 0.1);
        let targets = net.forward_batch(&inputs);
        let cfg = TrainConfig { iterations: 20, ..Default::default() };
        let (trained, hist) = train(&net, &inputs, &targets, &cfg).unwrap();
        assert_eq!(hist.initial_loss, 0.0);
        assert_eq!(hist.best_loss, 0.0);
        assert_eq!(trained, net);
    }

    #[test]
    fn loss_never_exceeds_initial_and_is_deterministic() {
        let net = random_net(ActivationKind::Sine);
        let inputs = Matrix::from_fn(2, 30, |i, j| ((i * 30 + j) as f64 * 0.13).sin());
        let targets = Matrix::from_fn(2, 30, |i, j| ((i + 1) as f64 * j as f64 * 0.2).cos() * 4.0);
        let cfg = TrainConfig { iterations: 200, learning_rate: 1e-2, loss_log_stride: 10, ..Default::default() };
        let (a, ha) = train(&net, &inputs, &targets, &cfg).unwrap();
        let (b, hb) = train(&net, &inputs, &targets, &cfg).unwrap();
        assert_eq!(ha, hb);
        assert_eq!(a, b);
        assert!(ha.best_loss <= ha.initial_loss);
        assert!((mse(&a, &inputs, &targets) - ha.best_loss).abs() < 1e-9 * ha.best_loss.max(1.0));
        assert_eq!(ha.iterations.first(), Some(&0));
        assert_eq!(ha.iterations.last(), Some(&200));
    }

    #[test]
    fn minibatch_training_makes_progress() {
        let net = Network::init(&[1, 16, 1], Activation::sine(3.0), 2).unwrap();
        let inputs = Matrix::from_fn(1, 64, |_, j| j as f64 / 32.0 - 1.0);
        let targets = inputs.map(|t| (2.0 * t).sin());
        let cfg = TrainConfig {
            iterations: 300,
            learning_rate: 1e-2,
            batch: Batch::Size(16),
            loss_log_stride: 25,
            ..Default::default()
        };
        let (_, h) = train(&net, &inputs, &targets, &cfg).unwrap();
        assert!(h.best_loss < 0.5 * h.initial_loss);
    }

    #[test]
    fn non_finite_loss_is_reported() {
        let net = Network::init(&[1, 4, 1], Activation::relu(), 0).unwrap();
        let inputs = Matrix::from_element(1, 3, 1.0);
        let targets = Matrix::from_row_slice(1, 3, &[1.0, f64::NAN, 0.0]);
        let cfg = TrainConfig { iterations: 5, standardize_targets: false, ..Default::default() };
        assert!(matches!(train(&net, &inputs, &targets, &cfg), Err(Error::TrainingDiverged { iteration: 0 })));
    }

    #[test]
    fn shape_mismatch_is_rejected() {
        let net = Network::init(&[1, 4, 1], Activation::relu(), 0).unwrap();
        let cfg = TrainConfig::default();
        assert!(train(&net, &Matrix::zeros(1, 3), &Matrix::zeros(1, 4), &cfg).is_err());
        assert!(train(&net, &Matrix::zeros(2, 3), &Matrix::zeros(1, 3), &cfg).is_err());
    }
}
