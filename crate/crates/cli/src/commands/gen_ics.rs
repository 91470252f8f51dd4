use std::path::PathBuf;
use std::process::ExitCode;

use clap::Args;
use serde::Serialize;

use qsa_core::experiment::{generate_ics, Role};
use qsa_core::partition::Region;
use qsa_core::persist::save_ics;

use super::{resolve_config, CliError, ConfigArgs, RoleArg};

#[derive(Args, Debug)]
pub struct GenIcsArgs {
    #[command(flatten)]
    pub config: ConfigArgs,

    /// Number of states to sample.
    #[arg(long)]
    pub count: usize,

    /// Whether the set is meant for training or testing.
    #[arg(long, value_enum)]
    pub role: RoleArg,

    /// Restrict sampling to one region (1..=4).
    #[arg(long, value_parser = clap::value_parser!(u8).range(1..=4))]
    pub region: Option<u8>,

    /// Output CSV path.
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Serialize)]
struct Resolved<'a> {
    seed: u64,
    count: usize,
    role: Role,
    region: Option<u8>,
    env: &'a qsa_core::EnvParams,
    partition: &'a qsa_core::RegionPartition,
    out: &'a PathBuf,
}

pub fn run(args: GenIcsArgs) -> Result<ExitCode, CliError> {
    let cfg = resolve_config(&args.config, None, None)?;
    // the master seed doubles as the sampling seed for a standalone IC file
    let seed = cfg.master_seed;
    if args.count == 0 {
        return Err(CliError::usage("--count must be at least 1"));
    }
    let region = args
        .region
        .map(Region::from_number)
        .transpose()
        .map_err(|e| CliError::usage(e.to_string()))?;

    print_block(&args, seed, &cfg);

    let set = generate_ics(seed, args.count, args.role.into(), region, &cfg.env, &cfg.partition)
        .map_err(|e| CliError::usage(e.to_string()))?;
    save_ics(&args.out, &set).map_err(|e| CliError::Runtime(e.into()))?;
    println!(
        "wrote {} {} initial conditions to {}",
        set.states.len(),
        match set.role {
            Role::Train => "training",
            Role::Test => "test",
        },
        args.out.display()
    );
    Ok(ExitCode::SUCCESS)
}

fn print_block(args: &GenIcsArgs, seed: u64, cfg: &qsa_core::ExperimentConfig) {
    super::print_resolved(&Resolved {
        seed,
        count: args.count,
        role: args.role.into(),
        region: args.region,
        env: &cfg.env,
        partition: &cfg.partition,
        out: &args.out,
    });
}
