//! Experiment configuration: built-in defaults, overlaid by a TOML file, overlaid by flags.

use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use serde::{Deserialize, Serialize};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ExperimentKind {
    Sindy,
    Modes,
    Embed,
    Forecast,
    Sweep,
    Puc,
}

impl ExperimentKind {
    pub const ALL: [ExperimentKind; 6] = [
        ExperimentKind::Sindy,
        ExperimentKind::Modes,
        ExperimentKind::Embed,
        ExperimentKind::Forecast,
        ExperimentKind::Sweep,
        ExperimentKind::Puc,
    ];

    pub fn name(self) -> &'static str {
        match self {
            ExperimentKind::Sindy => "sindy",
            ExperimentKind::Modes => "modes",
            ExperimentKind::Embed => "embed",
            ExperimentKind::Forecast => "forecast",
            ExperimentKind::Sweep => "sweep",
            ExperimentKind::Puc => "puc",
        }
    }

    /// System used when neither the file nor the flags name one.
    pub fn default_system(self) -> &'static str {
        match self {
            ExperimentKind::Sindy | ExperimentKind::Forecast => "lorenz3",
            ExperimentKind::Modes => "chen",
            ExperimentKind::Embed => "vanderpol",
            ExperimentKind::Sweep | ExperimentKind::Puc => "none",
        }
    }
}

impl fmt::Display for ExperimentKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for ExperimentKind {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        ExperimentKind::ALL.into_iter().find(|k| k.name() == s).ok_or_else(|| format!("unknown experiment `{s}`"))
    }
}

macro_rules! choice {
    ($(#[$meta:meta])* $name:ident { $($variant:ident => $text:literal),+ $(,)? }) => {
        $(#[$meta])*
        #[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
        #[serde(rename_all = "lowercase")]
        pub enum $name {
            $(#[value(name = $text)] #[serde(rename = $text)] $variant),+
        }

        impl $name {
            pub fn name(self) -> &'static str {
                match self {
                    $($name::$variant => $text),+
                }
            }
        }

        impl fmt::Display for $name {
            fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
                f.write_str(self.name())
            }
        }
    };
}

choice!(DerivChoice { FiniteDifference => "fd", Spectral => "spectral", Network => "network" });
choice!(ModesMethod { TimeDelay => "tdd", Neural => "nd" });
choice!(Pipeline { Raw => "raw", Surrogate => "surrogate" });
choice!(SpacingChoice { Uniform => "uniform", Random => "random", Sparse => "sparse" });
choice!(ForecastModel { Net => "net", Dmd => "dmd", Both => "both" });
choice!(StartChoice { InBounds => "inbounds", Far => "far" });
choice!(ActivationChoice { Sinc => "sinc", Gaussian => "gaussian", Sine => "sine", Relu => "relu" });

impl ActivationChoice {
    pub fn kind(self) -> dynoprior_core::coordnet::ActivationKind {
        use dynoprior_core::coordnet::ActivationKind;
        match self {
            ActivationChoice::Sinc => ActivationKind::Sinc,
            ActivationChoice::Gaussian => ActivationKind::Gaussian,
            ActivationChoice::Sine => ActivationKind::Sine,
            ActivationChoice::Relu => ActivationKind::Relu,
        }
    }
}

/// Shared coordinate-network settings.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct NetParams {
    pub width: usize,
    /// Number of hidden layers.
    pub hidden_layers: usize,
    pub omega: f64,
    pub iterations: usize,
    pub learning_rate: f64,
    /// Minibatch size; 0 trains on the full batch.
    pub batch: usize,
}

impl NetParams {
    pub fn hidden(&self) -> Vec<usize> {
        vec![self.width; self.hidden_layers]
    }
}

impl Default for NetParams {
    fn default() -> Self {
        NetParams { width: 128, hidden_layers: 3, omega: 10.0, iterations: 1500, learning_rate: 1e-3, batch: 0 }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SindyParams {
    pub noise: f64,
    pub deriv: DerivChoice,
    pub dmax: usize,
    pub threshold: f64,
    pub ridge: f64,
    pub dt: f64,
    pub duration: f64,
    pub burn_in: f64,
    pub net: NetParams,
}

impl Default for SindyParams {
    fn default() -> Self {
        SindyParams {
            noise: 0.0,
            deriv: DerivChoice::Network,
            dmax: dynoprior_core::sindy::DEFAULT_DEGREE,
            threshold: dynoprior_core::sindy::DEFAULT_THRESHOLD,
            ridge: dynoprior_core::sindy::DEFAULT_RIDGE,
            dt: 0.1,
            duration: 100.0,
            burn_in: 10.0,
            net: NetParams::default(),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ModesParams {
    pub method: ModesMethod,
    pub samples: usize,
    pub dt: f64,
    pub ratio: f64,
    /// State component observed.
    pub observe: usize,
    pub burn_in: f64,
    /// Hankel window `n·τ`.
    pub window: f64,
    /// Relative reconstruction MSE a network must reach before its features are used.
    pub gate: f64,
    pub net: NetParams,
}

impl Default for ModesParams {
    fn default() -> Self {
        ModesParams {
            method: ModesMethod::TimeDelay,
            samples: 5000,
            dt: 0.002,
            ratio: dynoprior_core::delay_embed::DEFAULT_DOMINANCE,
            observe: 0,
            burn_in: 20.0,
            window: dynoprior_core::delay_embed::RAW_WINDOW,
            gate: dynoprior_core::delay_embed::DEFAULT_FEATURE_GATE,
            net: NetParams { width: 20, omega: 10.0, iterations: 5000, ..NetParams::default() },
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EmbedParams {
    pub pipeline: Pipeline,
    pub noise: f64,
    pub spacing: SpacingChoice,
    pub samples: usize,
    pub duration: f64,
    pub burn_in: f64,
    pub observe: usize,
    /// Embedding dimension; 0 uses the system dimension.
    pub k: usize,
    pub net: NetParams,
}

impl Default for EmbedParams {
    fn default() -> Self {
        EmbedParams {
            pipeline: Pipeline::Surrogate,
            noise: 0.1,
            spacing: SpacingChoice::Uniform,
            samples: 5000,
            duration: 100.0,
            burn_in: 20.0,
            observe: 0,
            k: 0,
            net: NetParams { width: 48, omega: 20.0, iterations: 2000, ..NetParams::default() },
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ForecastParams {
    pub ntraj: usize,
    pub nsnap: usize,
    pub dt: f64,
    pub model: ForecastModel,
    pub steps: usize,
    pub x0: StartChoice,
    /// DMD truncation rank; 0 keeps full rank.
    pub rank: usize,
    /// Steps in the multi-step comparison report.
    pub horizon: usize,
    pub holdout: f64,
    pub substeps: usize,
    pub net: NetParams,
}

impl Default for ForecastParams {
    fn default() -> Self {
        ForecastParams {
            ntraj: 20,
            nsnap: 800,
            dt: 0.01,
            model: ForecastModel::Both,
            steps: 1000,
            x0: StartChoice::InBounds,
            rank: 0,
            horizon: 10,
            holdout: 0.1,
            substeps: 1,
            net: NetParams { width: 128, omega: 2.0, iterations: 5000, batch: 512, ..NetParams::default() },
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SweepParams {
    pub activation: ActivationChoice,
    pub omegas: Vec<f64>,
    pub seeds: usize,
    pub width: usize,
    pub hidden_layers: usize,
    /// Evaluation points on `[-1, 1]`.
    pub points: usize,
}

impl Default for SweepParams {
    fn default() -> Self {
        SweepParams {
            activation: ActivationChoice::Sinc,
            omegas: vec![5.0, 10.0, 20.0, 40.0],
            seeds: 5,
            width: 64,
            hidden_layers: 3,
            points: 512,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PucParams {
    pub activation: ActivationChoice,
    /// 0 uses the activation's default bandwidth.
    pub omega: f64,
    pub k: usize,
    pub grid: usize,
}

impl Default for PucParams {
    fn default() -> Self {
        PucParams { activation: ActivationChoice::Sinc, omega: 0.0, k: 5000, grid: 201 }
    }
}

/// One complete, effective run description.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub experiment: ExperimentKind,
    #[serde(default)]
    pub system: String,
    #[serde(default)]
    pub seed: u64,
    #[serde(default = "default_output_dir")]
    pub output_dir: PathBuf,
    #[serde(default)]
    pub sindy: SindyParams,
    #[serde(default)]
    pub modes: ModesParams,
    #[serde(default)]
    pub embed: EmbedParams,
    #[serde(default)]
    pub forecast: ForecastParams,
    #[serde(default)]
    pub sweep: SweepParams,
    #[serde(default)]
    pub puc: PucParams,
}

fn default_output_dir() -> PathBuf {
    PathBuf::from("out")
}

#[derive(Debug)]
pub struct ConfigError(pub String);

impl fmt::Display for ConfigError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::error::Error for ConfigError {}

impl ExperimentConfig {
    pub fn new(experiment: ExperimentKind) -> Self {
        ExperimentConfig {
            experiment,
            system: experiment.default_system().to_string(),
            seed: 0,
            output_dir: default_output_dir(),
            sindy: SindyParams::default(),
            modes: ModesParams::default(),
            embed: EmbedParams::default(),
            forecast: ForecastParams::default(),
            sweep: SweepParams::default(),
            puc: PucParams::default(),
        }
    }

    pub fn from_toml(text: &str) -> Result<Self, ConfigError> {
        let mut cfg: ExperimentConfig = toml::from_str(text).map_err(|e| ConfigError(e.to_string()))?;
        if cfg.system.is_empty() {
            cfg.system = cfg.experiment.default_system().to_string();
        }
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self, ConfigError> {
        let text = std::fs::read_to_string(path).map_err(|e| ConfigError(format!("{}: {e}", path.display())))?;
        Self::from_toml(&text)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("configuration serialises")
    }
}
