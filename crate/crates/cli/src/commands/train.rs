use std::fs;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::Args;
use serde::Serialize;

use qsa_core::experiment::{train_partitioned, train_uniform, ExperimentConfig, PolicyMode};
use qsa_core::persist::{save_partitioned_theta, save_trace, save_uniform_theta};
use qsa_core::probing::ProbingConfig;
use qsa_core::Theta;

use super::{ensure_out_dir, print_resolved, resolve_config, CliError, ConfigArgs, ModeArg};

#[derive(Args, Debug)]
pub struct TrainArgs {
    /// Which parameterization to train.
    #[arg(long, value_enum)]
    pub mode: ModeArg,

    /// JSON experiment config (required; use "{}" contents for defaults).
    #[arg(long)]
    pub config: PathBuf,

    /// Master seed (falls back to QSA_SEED, then the config file).
    #[arg(long, env = "QSA_SEED")]
    pub seed: Option<u64>,

    /// Output directory.
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Serialize)]
struct UniformSummary<'a> {
    mode: PolicyMode,
    config: &'a ExperimentConfig,
    theta: Theta,
    theta0: Theta,
    final_gamma: f64,
    probing: &'a ProbingConfig,
    theta_file: String,
    trace_file: String,
}

#[derive(Serialize)]
struct PartitionedSummary<'a> {
    mode: PolicyMode,
    config: &'a ExperimentConfig,
    thetas: [Theta; 4],
    theta0s: [Theta; 4],
    per_region_gamma: [f64; 4],
    gamma_bar: f64,
    probing: [&'a ProbingConfig; 4],
    theta_file: String,
    trace_files: [String; 4],
}

pub fn run(args: TrainArgs) -> Result<ExitCode, CliError> {
    let config_args = ConfigArgs {
        config: Some(args.config.clone()),
        seed: args.seed,
    };
    let cfg = resolve_config(&config_args, Some(args.mode.into()), None)?;
    print_resolved(&cfg);
    ensure_out_dir(&args.out)?;

    match cfg.mode {
        PolicyMode::Uniform => {
            let out = train_uniform(&cfg).map_err(|e| CliError::Runtime(e.into()))?;
            let theta_file = args.out.join("theta.csv");
            let trace_file = args.out.join("trace.csv");
            save_uniform_theta(&theta_file, out.run.theta).map_err(|e| CliError::Runtime(e.into()))?;
            save_trace(&trace_file, &out.run.trace).map_err(|e| CliError::Runtime(e.into()))?;
            let summary = UniformSummary {
                mode: cfg.mode,
                config: &cfg,
                theta: out.run.theta,
                theta0: out.run.theta0,
                final_gamma: out.run.final_gamma,
                probing: &out.run.probing,
                theta_file: theta_file.display().to_string(),
                trace_file: trace_file.display().to_string(),
            };
            write_summary(&args.out, &summary)?;
            println!(
                "trained uniform policy: theta = [{}, {}], final gamma = {:.3}",
                out.run.theta.theta1, out.run.theta.theta2, out.run.final_gamma
            );
        }
        PolicyMode::Partitioned => {
            let out = train_partitioned(&cfg).map_err(|e| CliError::Runtime(e.into()))?;
            let theta_file = args.out.join("theta.csv");
            save_partitioned_theta(&theta_file, &out.theta).map_err(|e| CliError::Runtime(e.into()))?;
            let mut trace_files = Vec::new();
            for (i, run) in out.runs.iter().enumerate() {
                let path = args.out.join(format!("trace_region{}.csv", i + 1));
                save_trace(&path, &run.trace).map_err(|e| CliError::Runtime(e.into()))?;
                trace_files.push(path.display().to_string());
            }
            let summary = PartitionedSummary {
                mode: cfg.mode,
                config: &cfg,
                thetas: out.theta.thetas,
                theta0s: [
                    out.runs[0].theta0,
                    out.runs[1].theta0,
                    out.runs[2].theta0,
                    out.runs[3].theta0,
                ],
                per_region_gamma: out.per_region_gamma,
                gamma_bar: out.gamma_bar,
                probing: [
                    &out.runs[0].probing,
                    &out.runs[1].probing,
                    &out.runs[2].probing,
                    &out.runs[3].probing,
                ],
                theta_file: theta_file.display().to_string(),
                trace_files: trace_files.try_into().expect("four regions"),
            };
            write_summary(&args.out, &summary)?;
            println!(
                "trained partitioned policy: per-region gamma = [{:.3}, {:.3}, {:.3}, {:.3}], gamma_bar = {:.3}",
                out.per_region_gamma[0], out.per_region_gamma[1], out.per_region_gamma[2], out.per_region_gamma[3], out.gamma_bar
            );
        }
    }
    Ok(ExitCode::SUCCESS)
}

fn write_summary(dir: &std::path::Path, summary: &impl Serialize) -> Result<(), CliError> {
    let path = dir.join("summary.json");
    let json = serde_json::to_string_pretty(summary)
        .map_err(|e| CliError::Runtime(anyhow::anyhow!("summary serialization: {e}")))?;
    fs::write(&path, json + "\n")
        .map_err(|e| CliError::Runtime(anyhow::anyhow!("cannot write {}: {e}", path.display())))?;
    println!("wrote {}", path.display());
    Ok(())
}
