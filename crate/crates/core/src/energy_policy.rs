//! Energy functions, the Lyapunov-derived analytic feedback, and the
//! constrained sign-policy family.
//!
//! The analytic feedback comes from shaping the total (kinetic + potential)
//! energy: with J = E^2/2 as a Lyapunov function, minimizing the control
//! Hamiltonian yields u = -(k/R) v E. The constrained policy family keeps
//! only the sign of a two-term combination of v^3 and v sin(z), with the two
//! weights as the trainable parameter.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::env::State;

/// Mass, force coupling, gravity, and control penalty for the energy model.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EnergyParams {
    pub m: f64,
    pub k: f64,
    pub g: f64,
    /// Quadratic control penalty weight.
    pub r: f64,
}

impl Default for EnergyParams {
    fn default() -> Self {
        // Only k/m = 1e-3 is pinned by the dynamics; m and r are normalized.
        Self {
            m: 1.0,
            k: 1e-3,
            g: 2.5e-3,
            r: 1.0,
        }
    }
}

impl EnergyParams {
    pub fn validate(&self) -> Result<(), EnergyError> {
        if self.m > 0.0 && self.k > 0.0 && self.g > 0.0 && self.r > 0.0 {
            Ok(())
        } else {
            Err(EnergyError::InvalidParams(format!("{self:?}")))
        }
    }
}

/// Two-component parameter of the sign policy: a weight on v^3 and a weight
/// on v sin(z). Serialized as a plain 2-element array.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(from = "[f64; 2]", into = "[f64; 2]")]
pub struct Theta {
    pub theta1: f64,
    pub theta2: f64,
}

impl Theta {
    pub fn new(theta1: f64, theta2: f64) -> Self {
        Self { theta1, theta2 }
    }

    pub fn is_finite(&self) -> bool {
        self.theta1.is_finite() && self.theta2.is_finite()
    }

    pub fn as_array(&self) -> [f64; 2] {
        [self.theta1, self.theta2]
    }
}

impl From<[f64; 2]> for Theta {
    fn from(a: [f64; 2]) -> Self {
        Self { theta1: a[0], theta2: a[1] }
    }
}

impl From<Theta> for [f64; 2] {
    fn from(t: Theta) -> Self {
        [t.theta1, t.theta2]
    }
}

#[derive(Debug, Error)]
pub enum EnergyError {
    #[error("non-finite state components (z = {z}, v = {v})")]
    NonFiniteState { z: f64, v: f64 },
    #[error("invalid energy parameters: {0}")]
    InvalidParams(String),
}

fn check_finite(s: State) -> Result<(), EnergyError> {
    if s.is_finite() {
        Ok(())
    } else {
        Err(EnergyError::NonFiniteState { z: s.z, v: s.v })
    }
}

/// Total energy E = m v^2 / 2 + m g sin(z) / 3.
pub fn total_energy(s: State, ep: &EnergyParams) -> Result<f64, EnergyError> {
    check_finite(s)?;
    Ok(0.5 * ep.m * s.v * s.v + ep.m * ep.g * s.z.sin() / 3.0)
}

/// Lyapunov function J = E^2 / 2.
pub fn lyapunov_value(s: State, ep: &EnergyParams) -> Result<f64, EnergyError> {
    let e = total_energy(s, ep)?;
    Ok(0.5 * e * e)
}

/// Closed-form energy-shaping feedback u = -(km/2R) v^3 - (kmg/3R) v sin(z),
/// identically -(k/R) v E. Not clamped to the control range.
pub fn analytic_feedback(s: State, ep: &EnergyParams) -> Result<f64, EnergyError> {
    check_finite(s)?;
    Ok(-(ep.k * ep.m / (2.0 * ep.r)) * s.v.powi(3)
        - (ep.k * ep.m * ep.g / (3.0 * ep.r)) * s.v * s.z.sin())
}

/// The analytic feedback clamped to [-1, 1], usable as a rollout baseline.
pub fn clamped_analytic_feedback(s: State, ep: &EnergyParams) -> Result<f64, EnergyError> {
    Ok(analytic_feedback(s, ep)?.clamp(-1.0, 1.0))
}

/// Tie-breaking convention for a zero sign-policy argument.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SignConvention {
    /// sign(0) = 0 (coast at the tie).
    #[default]
    Zero,
    /// sign(0) = +1.
    Positive,
    /// sign(0) = -1.
    Negative,
}

/// Sign policy u = sign(theta1 v^3 + theta2 v sin(z)) with sign(0) = 0.
pub fn policy_action(theta: Theta, s: State) -> f64 {
    policy_action_with(theta, s, SignConvention::Zero)
}

/// Sign policy with an explicit tie-breaking convention.
pub fn policy_action_with(theta: Theta, s: State, tie: SignConvention) -> f64 {
    let a = theta.theta1 * s.v.powi(3) + theta.theta2 * s.v * s.z.sin();
    if a > 0.0 {
        1.0
    } else if a < 0.0 {
        -1.0
    } else {
        match tie {
            SignConvention::Zero => 0.0,
            SignConvention::Positive => 1.0,
            SignConvention::Negative => -1.0,
        }
    }
}

/// Right-hand side (dz/dt, dv/dt) of the continuous-time model the discrete
/// dynamics were derived from: dz/dt = v, dv/dt = (k/m) u - g sin(pi + w z).
pub fn continuous_dynamics(s: State, u: f64, ep: &EnergyParams, slope_wavenumber: f64) -> (f64, f64) {
    let angle = std::f64::consts::PI + slope_wavenumber * s.z;
    (s.v, (ep.k / ep.m) * u - ep.g * angle.sin())
}

/// Analytic dJ/dt along `continuous_dynamics`, by the chain rule:
/// dJ/dt = E [ k v u + m g v (sin(w z) + cos(z) / 3) ],
/// using sin(w z) = -sin(pi + w z) for the gravity term.
pub fn lyapunov_rate(s: State, u: f64, ep: &EnergyParams, slope_wavenumber: f64) -> Result<f64, EnergyError> {
    let e = total_energy(s, ep)?;
    Ok(e * (ep.k * s.v * u
        + ep.m * ep.g * s.v * ((slope_wavenumber * s.z).sin() + s.z.cos() / 3.0)))
}
