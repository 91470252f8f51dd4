//! Deterministic sinusoidal exploration signals and the probe clock.
//!
//! Each parameter dimension carries its own mixture of sinusoids
//! xi_j(t) = sum_i a_ij sin(2 pi (w_ij t + phi_ij)). Amplitudes are sampled
//! once per run from unif(0, 1); the frequency pair defaults to one slow and
//! one fast component. The probe clock decides at which times the optimizer
//! samples the signal: by default it accumulates the gain schedule (the Euler
//! time of the underlying parameter ODE), because sampling at integer
//! iteration indices would alias the fast component to exactly zero.

use rand::Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Default frequency pair: one slowly varying, one fast component.
pub const DEFAULT_FREQUENCIES: [f64; 2] = [0.3, 50.0];
/// Default phases (all zero).
pub const DEFAULT_PHASES: [f64; 2] = [0.0, 0.0];

/// One sinusoid: amplitude, frequency in cycles per unit time, phase in cycles.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SinusoidTerm {
    pub amplitude: f64,
    pub frequency: f64,
    pub phase: f64,
}

/// A sum of sinusoids driving one parameter dimension.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SinusoidMixture {
    pub terms: Vec<SinusoidTerm>,
}

impl SinusoidMixture {
    pub fn validate(&self) -> Result<(), ProbingError> {
        if self.terms.is_empty() {
            return Err(ProbingError::EmptyMixture);
        }
        for t in &self.terms {
            if !t.amplitude.is_finite() || !t.phase.is_finite() {
                return Err(ProbingError::NonFiniteTerm);
            }
            if !(t.frequency > 0.0) || !t.frequency.is_finite() {
                return Err(ProbingError::BadFrequency(t.frequency));
            }
        }
        Ok(())
    }

    /// Signal value at time `t`.
    pub fn value(&self, t: f64) -> f64 {
        self.terms
            .iter()
            .map(|term| term.amplitude * (std::f64::consts::TAU * (term.frequency * t + term.phase)).sin())
            .sum()
    }

    /// Upper bound sum of |amplitude| over terms.
    pub fn amplitude_bound(&self) -> f64 {
        self.terms.iter().map(|t| t.amplitude.abs()).sum()
    }
}

/// Rule mapping the iteration index to the time at which the probe is sampled.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ClockMode {
    /// t_0 = 0 and t advances by the gain of each subsequent iteration.
    #[default]
    OdeTime,
    /// t_n = n. Retained for ablation; aliases integer-frequency components.
    IterationIndex,
}

/// Per-dimension probing signals plus the probe clock rule.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProbingConfig {
    pub dims: Vec<SinusoidMixture>,
    pub clock_mode: ClockMode,
}

impl ProbingConfig {
    pub fn dim(&self) -> usize {
        self.dims.len()
    }

    pub fn validate(&self) -> Result<(), ProbingError> {
        if self.dims.is_empty() {
            return Err(ProbingError::NoDimensions);
        }
        for m in &self.dims {
            m.validate()?;
        }
        Ok(())
    }
}

#[derive(Debug, Error)]
pub enum ProbingError {
    #[error("a sinusoid mixture must contain at least one term")]
    EmptyMixture,
    #[error("probing config must cover at least one dimension")]
    NoDimensions,
    #[error("non-finite amplitude or phase in a sinusoid term")]
    NonFiniteTerm,
    #[error("frequency {0} must be finite and > 0")]
    BadFrequency(f64),
    #[error("frequency/phase lists must be non-empty and of equal length")]
    MismatchedTermLists,
}

/// Probe vector at time `t`, one component per configured dimension.
pub fn probe_value(pc: &ProbingConfig, t: f64) -> Vec<f64> {
    debug_assert!(t.is_finite() && t >= 0.0);
    pc.dims.iter().map(|m| m.value(t)).collect()
}

/// Draw a probing config: amplitudes unif(0, 1) independently per dimension
/// per term, frequencies and phases shared across dimensions.
pub fn sample_probing_config<R: Rng>(
    rng: &mut R,
    d: usize,
    frequencies: &[f64],
    phases: &[f64],
    clock_mode: ClockMode,
) -> Result<ProbingConfig, ProbingError> {
    if d == 0 {
        return Err(ProbingError::NoDimensions);
    }
    if frequencies.is_empty() || frequencies.len() != phases.len() {
        return Err(ProbingError::MismatchedTermLists);
    }
    let dims = (0..d)
        .map(|_| SinusoidMixture {
            terms: frequencies
                .iter()
                .zip(phases)
                .map(|(&frequency, &phase)| SinusoidTerm {
                    amplitude: sample_open_unit(rng),
                    frequency,
                    phase,
                })
                .collect(),
        })
        .collect();
    let pc = ProbingConfig { dims, clock_mode };
    pc.validate()?;
    Ok(pc)
}

/// Uniform draw from the open interval (0, 1).
fn sample_open_unit<R: Rng>(rng: &mut R) -> f64 {
    loop {
        let a: f64 = rng.gen_range(0.0..1.0);
        if a > 0.0 {
            return a;
        }
    }
}
