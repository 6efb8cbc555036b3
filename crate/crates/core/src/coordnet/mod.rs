//! Coordinate networks: fully connected maps from coordinates to signal values.

mod activation;
mod fit;
mod network;
mod serialize;
mod train;

pub use activation::{Activation, ActivationKind, SINC_DERIVATIVE_SUP};
pub use fit::fit_time_series;
pub use network::{Layer, Network};
pub use serialize::{load, save, FORMAT_VERSION, MAGIC};
pub use train::{mse, mse_gradients, train, Batch, Gradients, LossHistory, TrainConfig};
