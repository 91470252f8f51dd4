use std::path::PathBuf;
use std::process::ExitCode;

use clap::Args;
use serde::Serialize;

use qsa_core::experiment::{sample_theta0, Role};
use qsa_core::objective::{partitioned_policy, rollout, uniform_policy};
use qsa_core::persist::{load_ics, load_theta, save_episode, ThetaFile};
use qsa_core::{State, Theta};

use super::{ensure_out_dir, print_resolved, resolve_config, CliError, ConfigArgs};

#[derive(Args, Debug)]
pub struct RolloutArgs {
    /// Parameter CSV (uniform `theta1,theta2` or partitioned
    /// `region,theta1,theta2` layout).
    #[arg(long, conflicts_with = "random_theta")]
    pub theta_file: Option<PathBuf>,

    /// Draw an untrained parameter from the given seed instead.
    #[arg(long)]
    pub random_theta: Option<u64>,

    /// A single start state as `z,v`.
    #[arg(long, allow_hyphen_values = true, conflicts_with = "ic_file")]
    pub ic: Option<String>,

    /// CSV of start states (`z,v` rows).
    #[arg(long)]
    pub ic_file: Option<PathBuf>,

    /// Record and dump the trajectory and control sequence per episode.
    #[arg(long)]
    pub record: bool,

    /// Output directory for episode CSV dumps.
    #[arg(long)]
    pub out: Option<PathBuf>,

    #[command(flatten)]
    pub config: ConfigArgs,
}

#[derive(Serialize)]
enum ResolvedPolicy {
    Uniform(Theta),
    Partitioned([Theta; 4]),
}

#[derive(Serialize)]
struct Resolved<'a> {
    policy: &'a ResolvedPolicy,
    ics: Vec<[f64; 2]>,
    record: bool,
    env: &'a qsa_core::EnvParams,
    cost: &'a qsa_core::CostConfig,
    partition: &'a qsa_core::RegionPartition,
}

fn parse_ic(text: &str) -> Result<State, CliError> {
    let parts: Vec<&str> = text.split(',').collect();
    if parts.len() != 2 {
        return Err(CliError::usage(format!("--ic expects `z,v`, got {text:?}")));
    }
    let z: f64 = parts[0]
        .trim()
        .parse()
        .map_err(|_| CliError::usage(format!("cannot parse z from {:?}", parts[0])))?;
    let v: f64 = parts[1]
        .trim()
        .parse()
        .map_err(|_| CliError::usage(format!("cannot parse v from {:?}", parts[1])))?;
    Ok(State::new(z, v))
}

pub fn run(args: RolloutArgs) -> Result<ExitCode, CliError> {
    let cfg = resolve_config(&args.config, None, None)?;

    let policy_spec = match (&args.theta_file, args.random_theta) {
        (Some(path), None) => match load_theta(path).map_err(classify_persist)? {
            ThetaFile::Uniform(t) => ResolvedPolicy::Uniform(t),
            ThetaFile::Partitioned(pt) => ResolvedPolicy::Partitioned(pt.thetas),
        },
        (None, Some(seed)) => ResolvedPolicy::Uniform(sample_theta0(seed)),
        (None, None) => {
            return Err(CliError::usage("one of --theta-file or --random-theta is required"))
        }
        (Some(_), Some(_)) => unreachable!("clap conflicts_with"),
    };

    let ics: Vec<State> = match (&args.ic, &args.ic_file) {
        (Some(text), None) => vec![parse_ic(text)?],
        (None, Some(path)) => {
            load_ics(path, Role::Test, &cfg.env, None)
                .map_err(classify_persist)?
                .states
        }
        (None, None) => return Err(CliError::usage("one of --ic or --ic-file is required")),
        (Some(_), Some(_)) => unreachable!("clap conflicts_with"),
    };
    for s in &ics {
        if !cfg.env.contains(s) {
            return Err(CliError::usage(format!(
                "start state (z = {}, v = {}) outside the state box",
                s.z, s.v
            )));
        }
    }

    if args.record && args.out.is_none() {
        return Err(CliError::usage("--record needs --out for the episode dumps"));
    }
    if let Some(out) = &args.out {
        ensure_out_dir(out)?;
    }

    print_resolved(&Resolved {
        policy: &policy_spec,
        ics: ics.iter().map(|s| [s.z, s.v]).collect(),
        record: args.record,
        env: &cfg.env,
        cost: &cfg.cost,
        partition: &cfg.partition,
    });

    let policy: Box<dyn Fn(&State) -> f64> = match &policy_spec {
        ResolvedPolicy::Uniform(theta) => Box::new(uniform_policy(*theta)),
        ResolvedPolicy::Partitioned(thetas) => Box::new(partitioned_policy(
            qsa_core::partition::PartitionedTheta::new(*thetas),
            cfg.partition,
        )),
    };

    for (i, x0) in ics.iter().enumerate() {
        let episode = rollout(&policy, *x0, &cfg.env, &cfg.cost, args.record)
            .map_err(|e| CliError::Runtime(e.into()))?;
        println!(
            "episode {i}: start (z = {}, v = {}), steps = {}, reached goal = {}",
            x0.z, x0.v, episode.steps, episode.reached_goal
        );
        if args.record {
            let path = args
                .out
                .as_ref()
                .expect("checked above")
                .join(format!("episode_{i:03}.csv"));
            save_episode(&path, &episode).map_err(|e| CliError::Runtime(e.into()))?;
            println!("  wrote {}", path.display());
        }
    }
    Ok(ExitCode::SUCCESS)
}

/// Unreadable files are runtime failures; readable but invalid content is a
/// validation error.
fn classify_persist(e: qsa_core::persist::PersistError) -> CliError {
    match e {
        qsa_core::persist::PersistError::Io { .. } => CliError::Runtime(e.into()),
        other => CliError::usage(other.to_string()),
    }
}
