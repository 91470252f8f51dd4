//! Four-region state-space partition and per-region policy dispatch.
//!
//! Regions follow the phase-plane quadrant convention around a configurable
//! split point: Q1 is right/up (z >= z_split, v >= v_split), Q2 left/up,
//! Q3 left/down, Q4 right/down. Boundary states go to the >= side on both
//! axes.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::energy_policy::{policy_action, Theta};
use crate::env::{EnvParams, State};

/// Split lines dividing the box into four quadrant-style regions.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RegionPartition {
    pub z_split: f64,
    pub v_split: f64,
}

impl Default for RegionPartition {
    fn default() -> Self {
        // Box midpoints: four equal-area regions.
        Self {
            z_split: -0.35,
            v_split: 0.0,
        }
    }
}

impl RegionPartition {
    pub fn validate(&self, env: &EnvParams) -> Result<(), PartitionError> {
        if env.z_min < self.z_split
            && self.z_split < env.z_goal
            && env.v_min < self.v_split
            && self.v_split < env.v_max
        {
            Ok(())
        } else {
            Err(PartitionError::InvalidSplit {
                z_split: self.z_split,
                v_split: self.v_split,
            })
        }
    }

    /// Total quadrant classification; box membership is not checked here.
    pub fn classify(&self, s: &State) -> Region {
        match (s.z >= self.z_split, s.v >= self.v_split) {
            (true, true) => Region::Q1,
            (false, true) => Region::Q2,
            (false, false) => Region::Q3,
            (true, false) => Region::Q4,
        }
    }
}

/// Region label, numbered 1..=4 in phase-plane quadrant order.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Region {
    Q1,
    Q2,
    Q3,
    Q4,
}

impl Region {
    pub const ALL: [Region; 4] = [Region::Q1, Region::Q2, Region::Q3, Region::Q4];

    /// Zero-based index for array storage.
    pub fn index(self) -> usize {
        match self {
            Region::Q1 => 0,
            Region::Q2 => 1,
            Region::Q3 => 2,
            Region::Q4 => 3,
        }
    }

    /// One-based region number as used in files and reports.
    pub fn number(self) -> u8 {
        self.index() as u8 + 1
    }

    pub fn from_number(n: u8) -> Result<Region, PartitionError> {
        match n {
            1 => Ok(Region::Q1),
            2 => Ok(Region::Q2),
            3 => Ok(Region::Q3),
            4 => Ok(Region::Q4),
            _ => Err(PartitionError::BadRegionNumber(n)),
        }
    }
}

impl std::fmt::Display for Region {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{}", self.number())
    }
}

/// One policy parameter per region.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(from = "[[f64; 2]; 4]", into = "[[f64; 2]; 4]")]
pub struct PartitionedTheta {
    pub thetas: [Theta; 4],
}

impl PartitionedTheta {
    pub fn new(thetas: [Theta; 4]) -> Self {
        Self { thetas }
    }

    /// All four regions share one parameter (degenerates to the uniform policy).
    pub fn uniform(theta: Theta) -> Self {
        Self { thetas: [theta; 4] }
    }

    pub fn theta(&self, region: Region) -> Theta {
        self.thetas[region.index()]
    }

    pub fn is_finite(&self) -> bool {
        self.thetas.iter().all(Theta::is_finite)
    }
}

impl From<[[f64; 2]; 4]> for PartitionedTheta {
    fn from(a: [[f64; 2]; 4]) -> Self {
        Self {
            thetas: [a[0].into(), a[1].into(), a[2].into(), a[3].into()],
        }
    }
}

impl From<PartitionedTheta> for [[f64; 2]; 4] {
    fn from(pt: PartitionedTheta) -> Self {
        [
            pt.thetas[0].into(),
            pt.thetas[1].into(),
            pt.thetas[2].into(),
            pt.thetas[3].into(),
        ]
    }
}

#[derive(Debug, Error)]
pub enum PartitionError {
    #[error("state (z = {z}, v = {v}) outside the state box")]
    OutOfBox { z: f64, v: f64 },
    #[error("split point (z_split = {z_split}, v_split = {v_split}) outside the box interior")]
    InvalidSplit { z_split: f64, v_split: f64 },
    #[error("region number {0} not in 1..=4")]
    BadRegionNumber(u8),
}

/// Region of an in-box state.
pub fn region_of(s: State, p: &RegionPartition, env: &EnvParams) -> Result<Region, PartitionError> {
    if !env.contains(&s) {
        return Err(PartitionError::OutOfBox { z: s.z, v: s.v });
    }
    Ok(p.classify(&s))
}

/// Sign-policy action under the parameter of the state's region.
pub fn partitioned_action(
    pt: &PartitionedTheta,
    s: State,
    p: &RegionPartition,
    env: &EnvParams,
) -> Result<f64, PartitionError> {
    let region = region_of(s, p, env)?;
    Ok(policy_action(pt.theta(region), s))
}
