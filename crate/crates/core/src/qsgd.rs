//! Quasi-stochastic gradient descent with deterministic probing.
//!
//! The optimizer never sees a gradient. Each iteration perturbs the current
//! parameter along the probing signal, evaluates the scalar objective at the
//! perturbed point, and descends along the probing direction weighted by the
//! objective value:
//!
//! ```text
//! a_n   = gain / (1 + n)^gain_exponent
//! xi_n  = probe(t_n)
//! psi_n = theta_n + probe_scale * xi_n
//! theta_{n+1} = theta_n - a_n * (1 / probe_scale) * G * xi_n * objective(psi_n)
//! ```
//!
//! With the default ode-time clock, t_0 = 0 and t advances by the gain of
//! each subsequent iteration, the Euler time of the parameter ODE the update
//! discretizes.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::probing::{probe_value, ClockMode, ProbingConfig, ProbingError};

/// Any |theta component| beyond this aborts the run as diverged.
pub const DIVERGENCE_LIMIT: f64 = 1e6;

type ObjectiveError = Box<dyn std::error::Error + Send + Sync + 'static>;

/// Gain schedule, probe scaling, and iteration budget.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct QsgdConfig {
    /// Initial gain; the first iteration uses exactly this step size.
    pub gain: f64,
    /// Decay exponent of the gain schedule, in (0.5, 1].
    pub gain_exponent: f64,
    /// Amplitude scale applied to the probing signal.
    pub probe_scale: f64,
    /// Optional dense gain matrix; `None` means identity.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub gain_matrix: Option<Vec<Vec<f64>>>,
    /// Number of iterations to run.
    pub n_iters: usize,
}

impl Default for QsgdConfig {
    fn default() -> Self {
        Self {
            gain: 0.08,
            gain_exponent: 0.95,
            probe_scale: 1.0,
            gain_matrix: None,
            n_iters: 50,
        }
    }
}

impl QsgdConfig {
    /// Validate against the parameter dimension `d`.
    pub fn validate(&self, d: usize) -> Result<(), QsgdError> {
        if !(self.gain > 0.0 && self.gain.is_finite()) {
            return Err(QsgdError::InvalidConfig(format!("gain {} must be > 0", self.gain)));
        }
        if !(self.gain_exponent > 0.5 && self.gain_exponent <= 1.0) {
            return Err(QsgdError::InvalidConfig(format!(
                "gain_exponent {} must lie in (0.5, 1]",
                self.gain_exponent
            )));
        }
        if !(self.probe_scale > 0.0 && self.probe_scale.is_finite()) {
            return Err(QsgdError::InvalidConfig(format!(
                "probe_scale {} must be > 0",
                self.probe_scale
            )));
        }
        if self.n_iters == 0 {
            return Err(QsgdError::InvalidConfig("n_iters must be >= 1".into()));
        }
        if let Some(g) = &self.gain_matrix {
            validate_spd(g, d)?;
        }
        Ok(())
    }

    /// G * v with the configured gain matrix (identity when absent).
    fn apply_gain_matrix(&self, v: &[f64]) -> Vec<f64> {
        match &self.gain_matrix {
            None => v.to_vec(),
            Some(g) => g
                .iter()
                .map(|row| row.iter().zip(v).map(|(a, b)| a * b).sum())
                .collect(),
        }
    }
}

/// Symmetric positive definite check via a plain Cholesky factorization.
fn validate_spd(g: &[Vec<f64>], d: usize) -> Result<(), QsgdError> {
    if g.len() != d || g.iter().any(|row| row.len() != d) {
        return Err(QsgdError::InvalidConfig(format!(
            "gain matrix must be {d}x{d}"
        )));
    }
    let scale = g
        .iter()
        .flatten()
        .fold(0.0f64, |m, x| m.max(x.abs()))
        .max(1.0);
    for i in 0..d {
        for j in 0..i {
            if (g[i][j] - g[j][i]).abs() > 1e-12 * scale {
                return Err(QsgdError::InvalidConfig("gain matrix must be symmetric".into()));
            }
        }
    }
    let mut l = vec![vec![0.0; d]; d];
    for i in 0..d {
        for j in 0..=i {
            let mut sum = g[i][j];
            for k in 0..j {
                sum -= l[i][k] * l[j][k];
            }
            if i == j {
                if sum <= 0.0 {
                    return Err(QsgdError::InvalidConfig("gain matrix must be positive definite".into()));
                }
                l[i][j] = sum.sqrt();
            } else {
                l[i][j] = sum / l[j][j];
            }
        }
    }
    Ok(())
}

/// One iteration of the run: the pre-update parameter, the perturbed point,
/// and the objective value that drove the update.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TraceRecord {
    pub iteration: usize,
    /// Probe-clock time at which the probing signal was sampled.
    pub time: f64,
    /// Gain a_n used by the update.
    pub gain: f64,
    pub theta: Vec<f64>,
    pub psi: Vec<f64>,
    pub gamma_value: f64,
}

/// Iteration-by-iteration training record.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct QsgdTrace {
    pub records: Vec<TraceRecord>,
}

impl QsgdTrace {
    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }
}

#[derive(Debug, Error)]
pub enum QsgdError {
    #[error("invalid qsgd configuration: {0}")]
    InvalidConfig(String),
    #[error(transparent)]
    Probing(#[from] ProbingError),
    #[error("dimension mismatch: theta has {theta}, probing covers {probe}")]
    DimensionMismatch { theta: usize, probe: usize },
    #[error("non-finite inputs to the update{}", iteration.map(|n| format!(" at iteration {n}")).unwrap_or_default())]
    NonFiniteInput { iteration: Option<usize> },
    #[error("objective value {value} at iteration {iteration} must be finite and >= 0")]
    InvalidGamma { iteration: usize, value: f64 },
    #[error("parameter update produced a non-finite component{}", iteration.map(|n| format!(" at iteration {n}")).unwrap_or_default())]
    NonFiniteUpdate { iteration: Option<usize> },
    #[error("parameter diverged at iteration {iteration}: component magnitude {magnitude} exceeds {limit}", limit = DIVERGENCE_LIMIT)]
    Diverged { iteration: usize, magnitude: f64 },
    #[error("objective failed at iteration {iteration}: {source}")]
    Objective {
        iteration: usize,
        #[source]
        source: ObjectiveError,
    },
}

impl QsgdError {
    fn at(self, n: usize) -> Self {
        match self {
            QsgdError::NonFiniteInput { .. } => QsgdError::NonFiniteInput { iteration: Some(n) },
            QsgdError::NonFiniteUpdate { .. } => QsgdError::NonFiniteUpdate { iteration: Some(n) },
            other => other,
        }
    }
}

/// The gain schedule a_n = gain / (1 + n)^gain_exponent.
pub fn step_size(n: usize, cfg: &QsgdConfig) -> f64 {
    cfg.gain / (1.0 + n as f64).powf(cfg.gain_exponent)
}

/// One parameter update: theta - a_n * (1 / probe_scale) * G * xi * gamma.
pub fn qsgd_update(
    theta: &[f64],
    xi: &[f64],
    gamma_value: f64,
    a_n: f64,
    cfg: &QsgdConfig,
) -> Result<Vec<f64>, QsgdError> {
    if theta.len() != xi.len() {
        return Err(QsgdError::DimensionMismatch {
            theta: theta.len(),
            probe: xi.len(),
        });
    }
    let finite = theta.iter().chain(xi).all(|x| x.is_finite())
        && gamma_value.is_finite()
        && a_n.is_finite();
    if !finite || gamma_value < 0.0 {
        return Err(QsgdError::NonFiniteInput { iteration: None });
    }
    let direction = cfg.apply_gain_matrix(xi);
    let next: Vec<f64> = theta
        .iter()
        .zip(&direction)
        .map(|(th, dir)| th - a_n * dir * gamma_value / cfg.probe_scale)
        .collect();
    if next.iter().any(|x| !x.is_finite()) {
        return Err(QsgdError::NonFiniteUpdate { iteration: None });
    }
    Ok(next)
}

/// Run the full optimization loop against an arbitrary objective.
///
/// Returns the final parameter and the per-iteration trace. The objective is
/// expected to be total; failures abort the run with iteration context.
pub fn run_qsgd<F>(
    mut objective: F,
    theta0: &[f64],
    cfg: &QsgdConfig,
    pc: &ProbingConfig,
) -> Result<(Vec<f64>, QsgdTrace), QsgdError>
where
    F: FnMut(&[f64]) -> Result<f64, ObjectiveError>,
{
    cfg.validate(theta0.len())?;
    pc.validate()?;
    if pc.dim() != theta0.len() {
        return Err(QsgdError::DimensionMismatch {
            theta: theta0.len(),
            probe: pc.dim(),
        });
    }
    if theta0.iter().any(|x| !x.is_finite()) {
        return Err(QsgdError::NonFiniteInput { iteration: Some(0) });
    }

    let mut theta = theta0.to_vec();
    let mut records = Vec::with_capacity(cfg.n_iters);
    let mut time = 0.0;
    for n in 0..cfg.n_iters {
        let a_n = step_size(n, cfg);
        if n > 0 {
            time = match pc.clock_mode {
                ClockMode::OdeTime => time + a_n,
                ClockMode::IterationIndex => n as f64,
            };
        }
        let xi = probe_value(pc, time);
        let psi: Vec<f64> = theta
            .iter()
            .zip(&xi)
            .map(|(th, x)| th + cfg.probe_scale * x)
            .collect();
        let gamma_value = objective(&psi).map_err(|source| QsgdError::Objective { iteration: n, source })?;
        if !gamma_value.is_finite() || gamma_value < 0.0 {
            return Err(QsgdError::InvalidGamma { iteration: n, value: gamma_value });
        }
        records.push(TraceRecord {
            iteration: n,
            time,
            gain: a_n,
            theta: theta.clone(),
            psi,
            gamma_value,
        });
        theta = qsgd_update(&theta, &xi, gamma_value, a_n, cfg).map_err(|e| e.at(n))?;
        let worst = theta.iter().fold(0.0f64, |m, x| m.max(x.abs()));
        if worst > DIVERGENCE_LIMIT {
            return Err(QsgdError::Diverged { iteration: n, magnitude: worst });
        }
    }

    Ok((theta, QsgdTrace { records }))
}
