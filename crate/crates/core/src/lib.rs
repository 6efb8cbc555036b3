//! Coordinate networks as implicit priors for dynamical systems.
//!
//! The crate is organised around the pipelines it supports:
//!
//! * [`systems`]: ODE catalog, fixed-step RK4 integration and the measurement model
//!   (coordinate projection plus uniform noise, uniform/random/decimated spacing).
//! * [`coordnet`]: small fully connected networks with sinc, Gaussian, sine or ReLU
//!   activations, Adam training, analytic input Jacobians and a binary format.
//! * [`basis_analysis`]: partition-of-unity residuals, periodic sine fits, Lipschitz and
//!   stable-rank estimates, bandwidth sweeps and Nyquist sample counts.
//! * [`sindy`]: candidate libraries, three derivative estimators and STLSQ regression.
//! * [`delay_embed`]: Hankel matrices, time-delay and neural mode spectra, delay
//!   embeddings and network surrogates.
//! * [`forecast`]: snapshot pairs, state-to-next-state networks, exact DMD and rollouts.

pub mod basis_analysis;
pub mod coordnet;
pub mod csv;
pub mod delay_embed;
mod error;
pub mod forecast;
pub mod linalg;
pub mod rng;
pub mod sindy;
pub mod systems;

pub use coordnet::{Activation, ActivationKind, Batch, LossHistory, Network, TrainConfig};
pub use delay_embed::{EmbeddingResult, HankelMatrix, ModeSpectrum};
pub use error::{Error, Result};
pub use forecast::{DmdModel, SnapshotPairs};
pub use sindy::{CandidateLibrary, DerivativeEstimate, SindyModel};
pub use systems::{SampleSet, Spacing, SystemSpec, Trajectory};

/// Dense column-major matrix used throughout the crate.
pub type Matrix = nalgebra::DMatrix<f64>;
