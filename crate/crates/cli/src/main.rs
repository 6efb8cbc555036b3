use std::path::PathBuf;
use std::process::ExitCode;

use clap::parser::ValueSource;
use clap::{ArgMatches, Args, CommandFactory, FromArgMatches, Parser, Subcommand};
use dynoprior_cli::config::*;
use dynoprior_cli::experiments;

#[derive(Parser)]
#[command(name = "dynoprior", version, about = "Coordinate-network experiments on dynamical systems")]
struct Cli {
    /// Worker threads for parallel sub-runs (0 = all cores)
    #[arg(long, global = true, env = "DYNO_THREADS", default_value_t = 0)]
    threads: usize,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Sparse equation discovery from sampled trajectories
    Sindy(SindyArgs),
    /// Count modes of one observed component (time-delay or neural decomposition)
    Modes(ModesArgs),
    /// Delay-embedding reconstruction from raw samples or a network surrogate
    Embed(EmbedArgs),
    /// Next-state forecasting: network versus DMD
    Forecast(ForecastArgs),
    /// Bandwidth sweep of Lipschitz estimates and stable ranks
    Sweep(SweepArgs),
    /// Partition-of-unity residual of an activation
    Puc(PucArgs),
    /// Run the experiment described by a configuration file
    Run(RunArgs),
}

#[derive(Args)]
struct Common {
    /// TOML configuration; flags given on the command line override its values
    #[arg(long)]
    config: Option<PathBuf>,
    /// Catalog system (default depends on the experiment)
    #[arg(long)]
    system: Option<String>,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Output directory
    #[arg(long, default_value = "out")]
    out: PathBuf,
}

#[derive(Args)]
struct SindyArgs {
    #[command(flatten)]
    common: Common,
    /// Uniform noise amplitude
    #[arg(long, default_value_t = SindyParams::default().noise)]
    noise: f64,
    #[arg(long, value_enum, default_value_t = SindyParams::default().deriv)]
    deriv: DerivChoice,
    /// Maximum monomial degree of the library
    #[arg(long, default_value_t = SindyParams::default().dmax)]
    dmax: usize,
    #[arg(long, default_value_t = SindyParams::default().threshold)]
    threshold: f64,
    #[arg(long, default_value_t = SindyParams::default().ridge)]
    ridge: f64,
    /// Sampling interval
    #[arg(long, default_value_t = SindyParams::default().dt)]
    dt: f64,
    #[arg(long, default_value_t = SindyParams::default().duration)]
    duration: f64,
    #[arg(long, default_value_t = SindyParams::default().burn_in)]
    burn_in: f64,
    #[arg(long, default_value_t = SindyParams::default().net.width)]
    width: usize,
    /// Hidden layers
    #[arg(long, default_value_t = SindyParams::default().net.hidden_layers)]
    layers: usize,
    #[arg(long, default_value_t = SindyParams::default().net.omega)]
    omega: f64,
    #[arg(long, default_value_t = SindyParams::default().net.iterations)]
    iterations: usize,
    #[arg(long, default_value_t = SindyParams::default().net.learning_rate)]
    lr: f64,
    /// Minibatch size (0 = full batch)
    #[arg(long, default_value_t = SindyParams::default().net.batch)]
    batch: usize,
}

#[derive(Args)]
struct ModesArgs {
    #[command(flatten)]
    common: Common,
    #[arg(long, value_enum, default_value_t = ModesParams::default().method)]
    method: ModesMethod,
    #[arg(long, default_value_t = ModesParams::default().samples)]
    samples: usize,
    #[arg(long, default_value_t = ModesParams::default().dt)]
    dt: f64,
    /// Dominance threshold on sigma_i / sigma_1
    #[arg(long, default_value_t = ModesParams::default().ratio)]
    ratio: f64,
    /// Observed state component
    #[arg(long, default_value_t = ModesParams::default().observe)]
    observe: usize,
    #[arg(long, default_value_t = ModesParams::default().burn_in)]
    burn_in: f64,
    /// Hankel window n*tau
    #[arg(long, default_value_t = ModesParams::default().window)]
    window: f64,
    /// Required relative reconstruction MSE before features are trusted
    #[arg(long, default_value_t = ModesParams::default().gate)]
    gate: f64,
    #[arg(long, default_value_t = ModesParams::default().net.width)]
    width: usize,
    #[arg(long, default_value_t = ModesParams::default().net.hidden_layers)]
    layers: usize,
    #[arg(long, default_value_t = ModesParams::default().net.omega)]
    omega: f64,
    #[arg(long, default_value_t = ModesParams::default().net.iterations)]
    iterations: usize,
    #[arg(long, default_value_t = ModesParams::default().net.learning_rate)]
    lr: f64,
    #[arg(long, default_value_t = ModesParams::default().net.batch)]
    batch: usize,
}

#[derive(Args)]
struct EmbedArgs {
    #[command(flatten)]
    common: Common,
    #[arg(long, value_enum, default_value_t = EmbedParams::default().pipeline)]
    pipeline: Pipeline,
    #[arg(long, default_value_t = EmbedParams::default().noise)]
    noise: f64,
    #[arg(long, value_enum, default_value_t = EmbedParams::default().spacing)]
    spacing: SpacingChoice,
    /// Samples on the base grid
    #[arg(long, default_value_t = EmbedParams::default().samples)]
    samples: usize,
    #[arg(long, default_value_t = EmbedParams::default().duration)]
    duration: f64,
    #[arg(long, default_value_t = EmbedParams::default().burn_in)]
    burn_in: f64,
    #[arg(long, default_value_t = EmbedParams::default().observe)]
    observe: usize,
    /// Embedding dimension (0 = system dimension)
    #[arg(long, default_value_t = EmbedParams::default().k)]
    k: usize,
    #[arg(long, default_value_t = EmbedParams::default().net.width)]
    width: usize,
    #[arg(long, default_value_t = EmbedParams::default().net.hidden_layers)]
    layers: usize,
    #[arg(long, default_value_t = EmbedParams::default().net.omega)]
    omega: f64,
    #[arg(long, default_value_t = EmbedParams::default().net.iterations)]
    iterations: usize,
    #[arg(long, default_value_t = EmbedParams::default().net.learning_rate)]
    lr: f64,
    #[arg(long, default_value_t = EmbedParams::default().net.batch)]
    batch: usize,
}

#[derive(Args)]
struct ForecastArgs {
    #[command(flatten)]
    common: Common,
    /// Trajectories
    #[arg(long, default_value_t = ForecastParams::default().ntraj)]
    ntraj: usize,
    /// Snapshots per trajectory
    #[arg(long, default_value_t = ForecastParams::default().nsnap)]
    nsnap: usize,
    #[arg(long, default_value_t = ForecastParams::default().dt)]
    dt: f64,
    #[arg(long, value_enum, default_value_t = ForecastParams::default().model)]
    model: ForecastModel,
    /// Rollout steps
    #[arg(long, default_value_t = ForecastParams::default().steps)]
    steps: usize,
    #[arg(long, value_enum, default_value_t = ForecastParams::default().x0)]
    x0: StartChoice,
    /// DMD truncation rank (0 = full)
    #[arg(long, default_value_t = ForecastParams::default().rank)]
    rank: usize,
    /// Steps in the multi-step comparison
    #[arg(long, default_value_t = ForecastParams::default().horizon)]
    horizon: usize,
    /// Fraction of trajectories held out
    #[arg(long, default_value_t = ForecastParams::default().holdout)]
    holdout: f64,
    /// RK4 substeps per snapshot interval
    #[arg(long, default_value_t = ForecastParams::default().substeps)]
    substeps: usize,
    #[arg(long, default_value_t = ForecastParams::default().net.width)]
    width: usize,
    #[arg(long, default_value_t = ForecastParams::default().net.hidden_layers)]
    layers: usize,
    #[arg(long, default_value_t = ForecastParams::default().net.omega)]
    omega: f64,
    #[arg(long, default_value_t = ForecastParams::default().net.iterations)]
    iterations: usize,
    #[arg(long, default_value_t = ForecastParams::default().net.learning_rate)]
    lr: f64,
    #[arg(long, default_value_t = ForecastParams::default().net.batch)]
    batch: usize,
}

#[derive(Args)]
struct SweepArgs {
    #[command(flatten)]
    common: Common,
    #[arg(long, value_enum, default_value_t = SweepParams::default().activation)]
    activation: ActivationChoice,
    /// Comma-separated bandwidths
    #[arg(long, value_delimiter = ',', default_value = "5,10,20,40")]
    omegas: Vec<f64>,
    /// Number of seeds per bandwidth
    #[arg(long, default_value_t = SweepParams::default().seeds)]
    seeds: usize,
    #[arg(long, default_value_t = SweepParams::default().width)]
    width: usize,
    #[arg(long, default_value_t = SweepParams::default().hidden_layers)]
    layers: usize,
    /// Evaluation points on [-1, 1]
    #[arg(long, default_value_t = SweepParams::default().points)]
    points: usize,
}

#[derive(Args)]
struct PucArgs {
    #[command(flatten)]
    common: Common,
    #[arg(long, value_enum, default_value_t = PucParams::default().activation)]
    activation: ActivationChoice,
    /// Bandwidth (0 = the activation's default)
    #[arg(long, default_value_t = PucParams::default().omega)]
    omega: f64,
    /// Truncation: shifts -K..=K
    #[arg(long, default_value_t = PucParams::default().k)]
    k: usize,
    /// Grid points on [0, 1)
    #[arg(long, default_value_t = PucParams::default().grid)]
    grid: usize,
}

#[derive(Args)]
struct RunArgs {
    #[arg(long)]
    config: PathBuf,
    /// Overrides the file's output directory
    #[arg(long)]
    out: Option<PathBuf>,
    /// Overrides the file's seed
    #[arg(long)]
    seed: Option<u64>,
}

fn explicit(m: &ArgMatches, id: &str) -> bool {
    matches!(m.value_source(id), Some(ValueSource::CommandLine) | Some(ValueSource::EnvVariable))
}

macro_rules! merge {
    ($m:expr, $args:expr, $target:expr; $($field:ident => $($path:ident).+),+ $(,)?) => {
        $(if explicit($m, stringify!($field)) {
            $target.$($path).+ = $args.$field.clone();
        })+
    };
}

fn base_config(kind: ExperimentKind, common: &Common, m: &ArgMatches) -> Result<ExperimentConfig, String> {
    let mut cfg = match &common.config {
        Some(path) => {
            let cfg = ExperimentConfig::load(path).map_err(|e| e.to_string())?;
            if cfg.experiment != kind {
                return Err(format!("{} describes a `{}` run, not `{kind}`", path.display(), cfg.experiment));
            }
            cfg
        }
        None => ExperimentConfig::new(kind),
    };
    if let Some(system) = &common.system {
        cfg.system = system.clone();
    }
    merge!(m, common, cfg; seed => seed, out => output_dir);
    Ok(cfg)
}

fn build_config(cli: &Command, m: &ArgMatches) -> Result<ExperimentConfig, String> {
    Ok(match cli {
        Command::Sindy(a) => {
            let mut c = base_config(ExperimentKind::Sindy, &a.common, m)?;
            merge!(m, a, c.sindy; noise => noise, deriv => deriv, dmax => dmax, threshold => threshold,
                ridge => ridge, dt => dt, duration => duration, burn_in => burn_in, width => net.width,
                layers => net.hidden_layers, omega => net.omega, iterations => net.iterations,
                lr => net.learning_rate, batch => net.batch);
            c
        }
        Command::Modes(a) => {
            let mut c = base_config(ExperimentKind::Modes, &a.common, m)?;
            merge!(m, a, c.modes; method => method, samples => samples, dt => dt, ratio => ratio,
                observe => observe, burn_in => burn_in, window => window, gate => gate, width => net.width,
                layers => net.hidden_layers, omega => net.omega, iterations => net.iterations,
                lr => net.learning_rate, batch => net.batch);
            c
        }
        Command::Embed(a) => {
            let mut c = base_config(ExperimentKind::Embed, &a.common, m)?;
            merge!(m, a, c.embed; pipeline => pipeline, noise => noise, spacing => spacing,
                samples => samples, duration => duration, burn_in => burn_in, observe => observe, k => k,
                width => net.width, layers => net.hidden_layers, omega => net.omega,
                iterations => net.iterations, lr => net.learning_rate, batch => net.batch);
            c
        }
        Command::Forecast(a) => {
            let mut c = base_config(ExperimentKind::Forecast, &a.common, m)?;
            merge!(m, a, c.forecast; ntraj => ntraj, nsnap => nsnap, dt => dt, model => model,
                steps => steps, x0 => x0, rank => rank, horizon => horizon, holdout => holdout,
                substeps => substeps, width => net.width, layers => net.hidden_layers, omega => net.omega,
                iterations => net.iterations, lr => net.learning_rate, batch => net.batch);
            c
        }
        Command::Sweep(a) => {
            let mut c = base_config(ExperimentKind::Sweep, &a.common, m)?;
            merge!(m, a, c.sweep; activation => activation, omegas => omegas, seeds => seeds,
                width => width, layers => hidden_layers, points => points);
            c
        }
        Command::Puc(a) => {
            let mut c = base_config(ExperimentKind::Puc, &a.common, m)?;
            merge!(m, a, c.puc; activation => activation, omega => omega, k => k, grid => grid);
            c
        }
        Command::Run(a) => {
            let mut c = ExperimentConfig::load(&a.config).map_err(|e| e.to_string())?;
            if let Some(out) = &a.out {
                c.output_dir = out.clone();
            }
            if let Some(seed) = a.seed {
                c.seed = seed;
            }
            c
        }
    })
}

fn main() -> ExitCode {
    let matches = Cli::command().get_matches();
    let cli = match Cli::from_arg_matches(&matches) {
        Ok(c) => c,
        Err(e) => e.exit(),
    };
    if cli.threads > 0 {
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(cli.threads).build_global() {
            eprintln!("warning: could not size the thread pool: {e}");
        }
    }
    let sub = matches.subcommand().map(|(_, m)| m).expect("subcommand is required");
    let config = match build_config(&cli.command, sub) {
        Ok(c) => c,
        Err(e) => {
            eprintln!("error: {e}");
            return ExitCode::from(2);
        }
    };
    match experiments::run(&config) {
        Ok(manifest) => {
            println!("{}", serde_json::to_string_pretty(&manifest.results).expect("results serialise"));
            match &manifest.error {
                None => {
                    println!("{} run written to {}", config.experiment, config.output_dir.display());
                    ExitCode::SUCCESS
                }
                Some(e) => {
                    eprintln!("error: {e} (partial outputs in {})", config.output_dir.display());
                    ExitCode::FAILURE
                }
            }
        }
        Err(e) => {
            eprintln!("error: cannot write to {}: {e}", config.output_dir.display());
            ExitCode::FAILURE
        }
    }
}
