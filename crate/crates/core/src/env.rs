//! Discrete-time Mountain Car dynamics.
//!
//! The state is a (position, velocity) pair confined to a box. One step
//! advances position by the old velocity and velocity by the applied force
//! minus a slope-dependent gravity term, then projects back into the box.
//! Two special rules: crossing the goal position ends the episode (absorbing
//! goal), and a car pinned at the left wall with leftward velocity has its
//! velocity reset to zero (crash into the wall).

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Physical constants and box bounds for the environment.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EnvParams {
    /// Left wall position.
    pub z_min: f64,
    /// Goal position (right edge of the box, absorbing).
    pub z_goal: f64,
    /// Minimum velocity per step.
    pub v_min: f64,
    /// Maximum velocity per step.
    pub v_max: f64,
    /// Force multiplier applied to the control (houses the force/mass ratio).
    pub force_gain: f64,
    /// Gravity multiplier on the slope term.
    pub gravity_gain: f64,
    /// Wavenumber of the hill profile entering cos(w * z).
    pub slope_wavenumber: f64,
}

impl Default for EnvParams {
    fn default() -> Self {
        Self {
            z_min: -1.2,
            z_goal: 0.5,
            v_min: -0.07,
            v_max: 0.07,
            force_gain: 1e-3,
            gravity_gain: 2.5e-3,
            slope_wavenumber: 3.0,
        }
    }
}

impl EnvParams {
    pub fn validate(&self) -> Result<(), EnvError> {
        let ok = self.z_min.is_finite()
            && self.z_goal.is_finite()
            && self.v_min.is_finite()
            && self.v_max.is_finite()
            && self.z_min < self.z_goal
            && self.v_min < 0.0
            && self.v_max > 0.0
            && self.force_gain > 0.0
            && self.gravity_gain > 0.0
            && self.slope_wavenumber.is_finite();
        if ok {
            Ok(())
        } else {
            Err(EnvError::InvalidParams(format!("{self:?}")))
        }
    }

    /// Whether a state lies inside the box (finite and within both intervals).
    pub fn contains(&self, s: &State) -> bool {
        s.z.is_finite()
            && s.v.is_finite()
            && (self.z_min..=self.z_goal).contains(&s.z)
            && (self.v_min..=self.v_max).contains(&s.v)
    }
}

/// Car state: position `z` and per-step velocity `v`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct State {
    pub z: f64,
    pub v: f64,
}

impl State {
    pub fn new(z: f64, v: f64) -> Self {
        Self { z, v }
    }

    pub fn is_finite(&self) -> bool {
        self.z.is_finite() && self.v.is_finite()
    }
}

/// Result of one transition.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StepOutcome {
    pub next: State,
    /// The raw position update crossed the goal; the episode is over.
    pub reached_goal: bool,
    /// The car was pinned at the left wall and its velocity was zeroed.
    pub wall_reset: bool,
}

#[derive(Debug, Error)]
pub enum EnvError {
    #[error("control {0} outside [-1, 1]")]
    ControlOutOfRange(f64),
    #[error("non-finite state components (z = {z}, v = {v})")]
    NonFiniteState { z: f64, v: f64 },
    #[error("invalid environment parameters: {0}")]
    InvalidParams(String),
}

/// Advance the car one step under control `u`.
///
/// Both updates read the old state on the right-hand side: the position moves
/// by the old velocity, the velocity by the force and gravity at the old
/// position. The goal test uses the pre-clamp position so a crossing is never
/// masked by the projection, and the wall reset applies after clamping when
/// the post-clamp position sits exactly on the left wall.
pub fn step(s: State, u: f64, p: &EnvParams) -> Result<StepOutcome, EnvError> {
    if !s.is_finite() {
        return Err(EnvError::NonFiniteState { z: s.z, v: s.v });
    }
    if !u.is_finite() || !(-1.0..=1.0).contains(&u) {
        return Err(EnvError::ControlOutOfRange(u));
    }

    let raw_z = s.z + s.v;
    let raw_v = s.v + p.force_gain * u - p.gravity_gain * (p.slope_wavenumber * s.z).cos();

    let reached_goal = raw_z >= p.z_goal;
    let z = raw_z.clamp(p.z_min, p.z_goal);
    let mut v = raw_v.clamp(p.v_min, p.v_max);
    let mut wall_reset = false;
    if z == p.z_min && v < 0.0 {
        v = 0.0;
        wall_reset = true;
    }

    Ok(StepOutcome {
        next: State { z, v },
        reached_goal,
        wall_reset,
    })
}
