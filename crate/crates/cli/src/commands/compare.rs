use std::fs;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::Args;
use serde::Serialize;

use qsa_core::experiment::HistogramReport;
use qsa_core::persist::load_report;

use super::{CliError, print_resolved};

/// Cost threshold used for the mass comparison.
const THRESHOLD: f64 = 46.0;

#[derive(Args, Debug)]
pub struct CompareArgs {
    /// Histogram report of the uniform study.
    #[arg(long)]
    pub uniform_report: PathBuf,

    /// Histogram report of the partitioned study.
    #[arg(long)]
    pub partitioned_report: PathBuf,

    /// Output path for the comparison JSON.
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Serialize)]
struct Side {
    path: String,
    restarts: usize,
    mean: f64,
    mode_locations: Vec<f64>,
    mass_below_threshold: f64,
}

#[derive(Serialize)]
struct Comparison {
    threshold: f64,
    uniform: Side,
    partitioned: Side,
    /// partitioned mean minus uniform mean; negative favors partitioned.
    mean_difference: f64,
    verdict: &'static str,
}

fn side(path: &PathBuf, report: &HistogramReport) -> Result<Side, CliError> {
    if report.raw_values.is_empty() {
        return Err(CliError::usage(format!(
            "{}: report holds no raw values to compare",
            path.display()
        )));
    }
    let mean = report.raw_values.iter().sum::<f64>() / report.raw_values.len() as f64;
    Ok(Side {
        path: path.display().to_string(),
        restarts: report.raw_values.len(),
        mean,
        mode_locations: report.summary.as_ref().map(|s| s.modes.clone()).unwrap_or_default(),
        mass_below_threshold: report.mass_below(THRESHOLD),
    })
}

fn load(path: &PathBuf) -> Result<HistogramReport, CliError> {
    load_report(path).map_err(|e| match e {
        qsa_core::persist::PersistError::Io { .. } => CliError::Runtime(e.into()),
        other => CliError::usage(other.to_string()),
    })
}

pub fn run(args: CompareArgs) -> Result<ExitCode, CliError> {
    print_resolved(&serde_json::json!({
        "uniform_report": args.uniform_report.display().to_string(),
        "partitioned_report": args.partitioned_report.display().to_string(),
        "threshold": THRESHOLD,
        "out": args.out.display().to_string(),
    }));

    let uniform = load(&args.uniform_report)?;
    let partitioned = load(&args.partitioned_report)?;

    let u = side(&args.uniform_report, &uniform)?;
    let p = side(&args.partitioned_report, &partitioned)?;
    let mean_difference = p.mean - u.mean;
    let verdict = if mean_difference < 0.0 {
        "partitioned"
    } else if mean_difference == 0.0 {
        "tie"
    } else {
        "uniform"
    };
    let partitioned_wins = mean_difference <= 0.0;

    let comparison = Comparison {
        threshold: THRESHOLD,
        uniform: u,
        partitioned: p,
        mean_difference,
        verdict,
    };
    let json = serde_json::to_string_pretty(&comparison)
        .map_err(|e| CliError::Runtime(anyhow::anyhow!("serialization: {e}")))?;
    fs::write(&args.out, json + "\n")
        .map_err(|e| CliError::Runtime(anyhow::anyhow!("cannot write {}: {e}", args.out.display())))?;

    println!(
        "means: partitioned {:.3} vs uniform {:.3} (difference {:+.3}); mass below {THRESHOLD}: {:.3} vs {:.3}; verdict: {verdict}",
        comparison.partitioned.mean,
        comparison.uniform.mean,
        mean_difference,
        comparison.partitioned.mass_below_threshold,
        comparison.uniform.mass_below_threshold,
    );
    println!("wrote {}", args.out.display());

    Ok(if partitioned_wins { ExitCode::SUCCESS } else { ExitCode::from(1) })
}
