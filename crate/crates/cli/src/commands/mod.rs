//! Subcommand definitions, shared plumbing, and dispatch.

mod compare;
mod gen_ics;
mod histogram;
mod rollout;
mod train;

use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;

use qsa_core::experiment::{ExperimentConfig, PolicyMode, Role};

#[derive(Debug)]
pub enum CliError {
    /// Bad arguments or invalid file content; exit code 1.
    Usage(String),
    /// I/O or engine failure; exit code 2.
    Runtime(anyhow::Error),
}

impl CliError {
    pub fn usage(msg: impl Into<String>) -> Self {
        CliError::Usage(msg.into())
    }
}

impl From<anyhow::Error> for CliError {
    fn from(e: anyhow::Error) -> Self {
        CliError::Runtime(e)
    }
}

#[derive(Parser, Debug)]
#[command(
    name = "qsa",
    version,
    about = "Minimum-time Mountain Car policy search with quasi-stochastic gradient descent"
)]
pub struct Cli {
    /// Bound the number of worker threads used for restart studies.
    #[arg(long, global = true)]
    pub jobs: Option<usize>,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Sample a seeded set of initial conditions and write it as CSV.
    GenIcs(gen_ics::GenIcsArgs),
    /// Train a policy and write parameters, traces, and a JSON summary.
    Train(train::TrainArgs),
    /// Multi-restart training study; writes a histogram report and bins CSV.
    Histogram(histogram::HistogramArgs),
    /// Roll a policy out from given starts; optionally dump trajectories.
    Rollout(rollout::RolloutArgs),
    /// Compare a uniform and a partitioned histogram report.
    Compare(compare::CompareArgs),
}

/// Flags shared by the experiment-backed commands.
#[derive(Args, Debug, Clone)]
pub struct ConfigArgs {
    /// JSON experiment config; flags override individual fields.
    #[arg(long)]
    pub config: Option<PathBuf>,

    /// Master seed (falls back to QSA_SEED, then the config file).
    #[arg(long, env = "QSA_SEED")]
    pub seed: Option<u64>,
}

#[derive(ValueEnum, Clone, Copy, Debug, PartialEq, Eq)]
pub enum RoleArg {
    Train,
    Test,
}

impl From<RoleArg> for Role {
    fn from(r: RoleArg) -> Role {
        match r {
            RoleArg::Train => Role::Train,
            RoleArg::Test => Role::Test,
        }
    }
}

#[derive(ValueEnum, Clone, Copy, Debug, PartialEq, Eq)]
pub enum ModeArg {
    Uniform,
    Partitioned,
}

impl From<ModeArg> for PolicyMode {
    fn from(m: ModeArg) -> PolicyMode {
        match m {
            ModeArg::Uniform => PolicyMode::Uniform,
            ModeArg::Partitioned => PolicyMode::Partitioned,
        }
    }
}

/// Load the config file when given, apply flag overrides, and validate.
pub fn resolve_config(args: &ConfigArgs, mode: Option<PolicyMode>, restarts: Option<usize>) -> Result<ExperimentConfig, CliError> {
    let mut cfg = match &args.config {
        None => ExperimentConfig::default(),
        Some(path) => {
            let text = fs::read_to_string(path).map_err(|e| {
                CliError::Runtime(anyhow::anyhow!("cannot read config {}: {e}", path.display()))
            })?;
            serde_json::from_str(&text).map_err(|e| {
                CliError::usage(format!("invalid config {}: {e}", path.display()))
            })?
        }
    };
    if let Some(seed) = args.seed {
        cfg.master_seed = seed;
    }
    if let Some(mode) = mode {
        cfg.mode = mode;
    }
    if let Some(restarts) = restarts {
        cfg.n_restarts = restarts;
    }
    cfg.validate().map_err(|e| CliError::usage(e.to_string()))?;
    Ok(cfg)
}

/// Reproducibility block: re-running a command with the printed config
/// yields identical outputs.
pub fn print_resolved(value: &impl Serialize) {
    match serde_json::to_string(value) {
        Ok(json) => println!("resolved-config: {json}"),
        Err(e) => eprintln!("warning: could not serialize resolved config: {e}"),
    }
}

pub fn ensure_out_dir(dir: &Path) -> Result<(), CliError> {
    fs::create_dir_all(dir)
        .map_err(|e| CliError::Runtime(anyhow::anyhow!("cannot create {}: {e}", dir.display())))
}

pub fn run(cli: Cli) -> Result<ExitCode, CliError> {
    if let Some(jobs) = cli.jobs {
        if jobs == 0 {
            return Err(CliError::usage("--jobs must be at least 1"));
        }
        // ignore the error if a global pool already exists (e.g. under tests)
        let _ = rayon::ThreadPoolBuilder::new().num_threads(jobs).build_global();
    }
    match cli.command {
        Command::GenIcs(args) => gen_ics::run(args),
        Command::Train(args) => train::run(args),
        Command::Histogram(args) => histogram::run(args),
        Command::Rollout(args) => rollout::run(args),
        Command::Compare(args) => compare::run(args),
    }
}
