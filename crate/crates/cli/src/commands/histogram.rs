use std::fmt::Write as _;
use std::fs;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::Args;

use qsa_core::experiment::histogram_experiment;
use qsa_core::persist::save_report;

use super::{ensure_out_dir, print_resolved, resolve_config, CliError, ConfigArgs, ModeArg};

#[derive(Args, Debug)]
pub struct HistogramArgs {
    /// Which parameterization to study.
    #[arg(long, value_enum)]
    pub mode: ModeArg,

    /// Number of training restarts (split across regions in partitioned mode).
    #[arg(long)]
    pub restarts: Option<usize>,

    #[command(flatten)]
    pub config: ConfigArgs,

    /// Output directory.
    #[arg(long)]
    pub out: PathBuf,
}

pub fn run(args: HistogramArgs) -> Result<ExitCode, CliError> {
    if args.restarts == Some(0) {
        return Err(CliError::usage("--restarts must be at least 1"));
    }
    let cfg = resolve_config(&args.config, Some(args.mode.into()), args.restarts)?;
    print_resolved(&cfg);
    ensure_out_dir(&args.out)?;

    let report = histogram_experiment(&cfg).map_err(|e| match e {
        qsa_core::experiment::ExperimentError::InvalidConfig(_) => CliError::usage(e.to_string()),
        other => CliError::Runtime(other.into()),
    })?;

    let report_path = args.out.join("report.json");
    save_report(&report_path, &report).map_err(|e| CliError::Runtime(e.into()))?;

    let bins_path = args.out.join("bins.csv");
    let mut csv = String::from("bin_left,bin_right,count\n");
    for (i, count) in report.counts.iter().enumerate() {
        writeln!(csv, "{},{},{}", report.bin_edges[i], report.bin_edges[i + 1], count)
            .expect("string write");
    }
    fs::write(&bins_path, csv)
        .map_err(|e| CliError::Runtime(anyhow::anyhow!("cannot write {}: {e}", bins_path.display())))?;

    println!("wrote {} and {}", report_path.display(), bins_path.display());
    match &report.summary {
        Some(s) => println!(
            "{} restarts: mean {:.3}, min {:.3}, max {:.3}, failures {}",
            report.raw_values.len(),
            s.mean,
            s.min,
            s.max,
            report.failure_count
        ),
        None => println!("no successful restarts; failures {}", report.failure_count),
    }
    Ok(ExitCode::SUCCESS)
}
