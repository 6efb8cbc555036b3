use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("unknown system `{name}`; valid names: {valid}")]
    UnknownSystem { name: String, valid: String },

    #[error("system `{system}` reads parameter `{name}`, which is not set")]
    MissingParameter { system: String, name: String },

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("integration diverged at step {step} (t = {time})")]
    Divergence { step: usize, time: f64 },

    #[error("sampling produced no columns: {0}")]
    EmptySample(String),

    #[error("training diverged at iteration {iteration}: loss is not finite")]
    TrainingDiverged { iteration: usize },

    #[error("cannot decode network: {0}")]
    Deserialize(String),

    #[error("unsupported spacing: {0}")]
    UnsupportedSpacing(String),

    #[error("every candidate term was eliminated for output dimension {output}")]
    DegenerateModel { output: usize },

    #[error("stable rank is undefined for a zero matrix")]
    UndefinedRank,

    #[error("series too short: need {needed} samples, got {got}")]
    InsufficientLength { needed: usize, got: usize },

    #[error("network reconstruction error {ratio:.3e} (relative to variance) exceeds gate {gate:.3e}")]
    UntrustedFeatures { ratio: f64, gate: f64 },

    #[error("no snapshot pairs: {0}")]
    ZeroPairs(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
