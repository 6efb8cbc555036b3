use super::{train, Activation, LossHistory, Network, TrainConfig};
use crate::{Error, Matrix, Result};

/// Initialises a scalar-input network over `[times[0], times[last]]` and trains it on
/// `values` (`d × N`, one column per time).
///
/// `hidden` lists the hidden widths; the input width is 1 and the output width `d`.
pub fn fit_time_series(
    times: &[f64],
    values: &Matrix,
    hidden: &[usize],
    activation: Activation,
    init_seed: u64,
    cfg: &TrainConfig,
) -> Result<(Network, LossHistory)> {
    if times.len() != values.ncols() || times.len() < 2 {
        return Err(Error::InvalidArgument("need at least two samples, one column per time".into()));
    }
    let (lo, hi) = times.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), &t| (a.min(t), b.max(t)));
    let mut widths = vec![1];
    widths.extend_from_slice(hidden);
    widths.push(values.nrows());
    let net = Network::init(&widths, activation, init_seed)?.with_time_range(lo, hi);
    let inputs = Matrix::from_row_slice(1, times.len(), times);
    train(&net, &inputs, values, cfg)
}
