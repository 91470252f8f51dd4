//! File persistence for initial conditions, parameters, traces, reports, and
//! episode dumps.
//!
//! CSV floats are written with the shortest round-tripping decimal form, so
//! save followed by load reproduces every value bit-exactly. Loaders validate
//! schemas and report the offending line on failure.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use thiserror::Error;

use crate::energy_policy::Theta;
use crate::env::{EnvParams, State};
use crate::experiment::{HistogramReport, InitialConditionSet, Role};
use crate::objective::EpisodeResult;
use crate::partition::{PartitionedTheta, Region, RegionPartition};
use crate::qsgd::{QsgdTrace, TraceRecord};

#[derive(Debug, Error)]
pub enum PersistError {
    #[error("i/o error on {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("{path}:{line}: {message}")]
    Schema {
        path: String,
        line: usize,
        message: String,
    },
    #[error("{path}: {message}")]
    Format { path: String, message: String },
    #[error("json error on {path}: {source}")]
    Json {
        path: String,
        #[source]
        source: serde_json::Error,
    },
}

fn io_err(path: &Path, source: std::io::Error) -> PersistError {
    PersistError::Io {
        path: path.display().to_string(),
        source,
    }
}

fn schema_err(path: &Path, line: usize, message: impl Into<String>) -> PersistError {
    PersistError::Schema {
        path: path.display().to_string(),
        line,
        message: message.into(),
    }
}

fn format_err(path: &Path, message: impl Into<String>) -> PersistError {
    PersistError::Format {
        path: path.display().to_string(),
        message: message.into(),
    }
}

fn parse_f64(path: &Path, line: usize, field: &str, raw: &str) -> Result<f64, PersistError> {
    raw.trim()
        .parse::<f64>()
        .map_err(|_| schema_err(path, line, format!("cannot parse {field} from {raw:?}")))
}

fn read_lines(path: &Path) -> Result<Vec<String>, PersistError> {
    let text = fs::read_to_string(path).map_err(|e| io_err(path, e))?;
    Ok(text.lines().map(str::to_owned).collect())
}

/// Write an IC set as `z,v` rows, with a `region` column when tags exist.
pub fn save_ics(path: &Path, set: &InitialConditionSet) -> Result<(), PersistError> {
    let mut out = String::new();
    match &set.regions {
        None => {
            out.push_str("z,v\n");
            for s in &set.states {
                writeln!(out, "{},{}", s.z, s.v).expect("string write");
            }
        }
        Some(regions) => {
            out.push_str("z,v,region\n");
            for (s, r) in set.states.iter().zip(regions) {
                writeln!(out, "{},{},{}", s.z, s.v, r.number()).expect("string write");
            }
        }
    }
    fs::write(path, out).map_err(|e| io_err(path, e))
}

/// Load an IC set, validating every state against the box. When the file
/// carries region tags and a partition is supplied, tags are checked for
/// consistency with the partition geometry.
pub fn load_ics(
    path: &Path,
    role: Role,
    env: &EnvParams,
    partition: Option<&RegionPartition>,
) -> Result<InitialConditionSet, PersistError> {
    let lines = read_lines(path)?;
    let header = lines
        .first()
        .ok_or_else(|| format_err(path, "empty file"))?
        .trim();
    let has_region = match header {
        "z,v" => false,
        "z,v,region" => true,
        other => return Err(format_err(path, format!("unexpected header {other:?}"))),
    };

    let mut states = Vec::new();
    let mut regions = has_region.then(Vec::new);
    for (i, raw) in lines.iter().enumerate().skip(1) {
        let line = i + 1;
        if raw.trim().is_empty() {
            continue;
        }
        let fields: Vec<&str> = raw.split(',').collect();
        let expected = if has_region { 3 } else { 2 };
        if fields.len() != expected {
            return Err(schema_err(path, line, format!("expected {expected} fields, found {}", fields.len())));
        }
        let z = parse_f64(path, line, "z", fields[0])?;
        let v = parse_f64(path, line, "v", fields[1])?;
        let s = State::new(z, v);
        if !env.contains(&s) {
            return Err(schema_err(path, line, format!("state (z = {z}, v = {v}) outside the state box")));
        }
        if let Some(regions) = regions.as_mut() {
            let n: u8 = fields[2]
                .trim()
                .parse()
                .map_err(|_| schema_err(path, line, format!("cannot parse region from {:?}", fields[2])))?;
            let region = Region::from_number(n).map_err(|e| schema_err(path, line, e.to_string()))?;
            if let Some(p) = partition {
                let actual = p.classify(&s);
                if actual != region {
                    return Err(schema_err(path, line, format!("state tagged region {region} lies in region {actual}")));
                }
            }
            regions.push(region);
        }
        states.push(s);
    }
    if states.is_empty() {
        return Err(format_err(path, "no initial conditions in file"));
    }
    Ok(InitialConditionSet { states, role, regions })
}

/// A parameter file holds either a single uniform theta or four region rows.
#[derive(Debug, Clone, PartialEq)]
pub enum ThetaFile {
    Uniform(Theta),
    Partitioned(PartitionedTheta),
}

pub fn save_uniform_theta(path: &Path, theta: Theta) -> Result<(), PersistError> {
    let out = format!("theta1,theta2\n{},{}\n", theta.theta1, theta.theta2);
    fs::write(path, out).map_err(|e| io_err(path, e))
}

pub fn save_partitioned_theta(path: &Path, pt: &PartitionedTheta) -> Result<(), PersistError> {
    let mut out = String::from("region,theta1,theta2\n");
    for region in Region::ALL {
        let t = pt.theta(region);
        writeln!(out, "{},{},{}", region.number(), t.theta1, t.theta2).expect("string write");
    }
    fs::write(path, out).map_err(|e| io_err(path, e))
}

/// Load a theta file, dispatching on the header.
pub fn load_theta(path: &Path) -> Result<ThetaFile, PersistError> {
    let lines = read_lines(path)?;
    let header = lines
        .first()
        .ok_or_else(|| format_err(path, "empty file"))?
        .trim();
    let data: Vec<(usize, &String)> = lines
        .iter()
        .enumerate()
        .skip(1)
        .filter(|(_, l)| !l.trim().is_empty())
        .map(|(i, l)| (i + 1, l))
        .collect();

    match header {
        "theta1,theta2" => {
            if data.len() != 1 {
                return Err(format_err(path, format!("expected exactly 1 parameter row, found {}", data.len())));
            }
            let (line, raw) = data[0];
            let fields: Vec<&str> = raw.split(',').collect();
            if fields.len() != 2 {
                return Err(schema_err(path, line, "expected 2 fields"));
            }
            let t1 = parse_f64(path, line, "theta1", fields[0])?;
            let t2 = parse_f64(path, line, "theta2", fields[1])?;
            let theta = Theta::new(t1, t2);
            if !theta.is_finite() {
                return Err(schema_err(path, line, "non-finite parameter"));
            }
            Ok(ThetaFile::Uniform(theta))
        }
        "region,theta1,theta2" => {
            if data.len() != 4 {
                return Err(format_err(path, format!("expected exactly 4 region rows, found {}", data.len())));
            }
            let mut thetas = [None::<Theta>; 4];
            for (line, raw) in data {
                let fields: Vec<&str> = raw.split(',').collect();
                if fields.len() != 3 {
                    return Err(schema_err(path, line, "expected 3 fields"));
                }
                let n: u8 = fields[0]
                    .trim()
                    .parse()
                    .map_err(|_| schema_err(path, line, format!("cannot parse region from {:?}", fields[0])))?;
                let region = Region::from_number(n).map_err(|e| schema_err(path, line, e.to_string()))?;
                let t1 = parse_f64(path, line, "theta1", fields[1])?;
                let t2 = parse_f64(path, line, "theta2", fields[2])?;
                let slot = &mut thetas[region.index()];
                if slot.is_some() {
                    return Err(schema_err(path, line, format!("duplicate region {region}")));
                }
                let theta = Theta::new(t1, t2);
                if !theta.is_finite() {
                    return Err(schema_err(path, line, "non-finite parameter"));
                }
                *slot = Some(theta);
            }
            let thetas = [
                thetas[0].expect("four distinct regions fill all slots"),
                thetas[1].expect("four distinct regions fill all slots"),
                thetas[2].expect("four distinct regions fill all slots"),
                thetas[3].expect("four distinct regions fill all slots"),
            ];
            Ok(ThetaFile::Partitioned(PartitionedTheta::new(thetas)))
        }
        other => Err(format_err(path, format!("unexpected header {other:?}"))),
    }
}

/// Write a training trace as one CSV row per iteration.
pub fn save_trace(path: &Path, trace: &QsgdTrace) -> Result<(), PersistError> {
    let mut out = String::from("n,t,a,theta1,theta2,psi1,psi2,gamma\n");
    for rec in &trace.records {
        if rec.theta.len() != 2 || rec.psi.len() != 2 {
            return Err(format_err(path, "trace CSV supports exactly 2 parameter dimensions"));
        }
        writeln!(
            out,
            "{},{},{},{},{},{},{},{}",
            rec.iteration, rec.time, rec.gain, rec.theta[0], rec.theta[1], rec.psi[0], rec.psi[1], rec.gamma_value
        )
        .expect("string write");
    }
    fs::write(path, out).map_err(|e| io_err(path, e))
}

pub fn load_trace(path: &Path) -> Result<QsgdTrace, PersistError> {
    let lines = read_lines(path)?;
    let header = lines
        .first()
        .ok_or_else(|| format_err(path, "empty file"))?
        .trim();
    if header != "n,t,a,theta1,theta2,psi1,psi2,gamma" {
        return Err(format_err(path, format!("unexpected header {header:?}")));
    }
    let mut records = Vec::new();
    for (i, raw) in lines.iter().enumerate().skip(1) {
        let line = i + 1;
        if raw.trim().is_empty() {
            continue;
        }
        let fields: Vec<&str> = raw.split(',').collect();
        if fields.len() != 8 {
            return Err(schema_err(path, line, format!("expected 8 fields, found {}", fields.len())));
        }
        let iteration: usize = fields[0]
            .trim()
            .parse()
            .map_err(|_| schema_err(path, line, format!("cannot parse n from {:?}", fields[0])))?;
        records.push(TraceRecord {
            iteration,
            time: parse_f64(path, line, "t", fields[1])?,
            gain: parse_f64(path, line, "a", fields[2])?,
            theta: vec![
                parse_f64(path, line, "theta1", fields[3])?,
                parse_f64(path, line, "theta2", fields[4])?,
            ],
            psi: vec![
                parse_f64(path, line, "psi1", fields[5])?,
                parse_f64(path, line, "psi2", fields[6])?,
            ],
            gamma_value: parse_f64(path, line, "gamma", fields[7])?,
        });
    }
    Ok(QsgdTrace { records })
}

/// Write a histogram report as pretty-printed JSON.
pub fn save_report(path: &Path, report: &HistogramReport) -> Result<(), PersistError> {
    let json = serde_json::to_string_pretty(report).map_err(|e| PersistError::Json {
        path: path.display().to_string(),
        source: e,
    })?;
    fs::write(path, json + "\n").map_err(|e| io_err(path, e))
}

pub fn load_report(path: &Path) -> Result<HistogramReport, PersistError> {
    let text = fs::read_to_string(path).map_err(|e| io_err(path, e))?;
    let report: HistogramReport = serde_json::from_str(&text).map_err(|e| PersistError::Json {
        path: path.display().to_string(),
        source: e,
    })?;
    report
        .validate()
        .map_err(|e| format_err(path, e.to_string()))?;
    Ok(report)
}

/// Dump a recorded episode as `step,z,v,u` rows. The final row carries the
/// terminal state and an empty control field.
pub fn save_episode(path: &Path, episode: &EpisodeResult) -> Result<(), PersistError> {
    let trajectory = episode
        .trajectory
        .as_ref()
        .ok_or_else(|| format_err(path, "episode was not recorded with a trajectory"))?;
    let controls = episode
        .controls
        .as_ref()
        .ok_or_else(|| format_err(path, "episode was not recorded with controls"))?;
    let mut out = String::from("step,z,v,u\n");
    for (k, s) in trajectory.iter().enumerate() {
        match controls.get(k) {
            Some(u) => writeln!(out, "{},{},{},{}", k, s.z, s.v, u).expect("string write"),
            None => writeln!(out, "{},{},{},", k, s.z, s.v).expect("string write"),
        }
    }
    fs::write(path, out).map_err(|e| io_err(path, e))
}
