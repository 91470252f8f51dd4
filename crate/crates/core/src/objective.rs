//! Policy rollouts and the minimum-time cost signals.
//!
//! An episode runs until the goal absorbs the car or a step budget expires;
//! its cost is the step count times a per-step cost. The training objective
//! is the capped mean cost over a fixed set of initial conditions, and the
//! partitioned variant averages four per-region values of that objective.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::energy_policy::{policy_action, Theta};
use crate::env::{step, EnvError, EnvParams, State};
use crate::partition::{region_of, PartitionError, PartitionedTheta, Region, RegionPartition};

/// One parameter applied everywhere, as a rollout closure.
pub fn uniform_policy(theta: Theta) -> impl Fn(&State) -> f64 + Copy {
    move |s| policy_action(theta, *s)
}

/// Per-region parameters dispatched by quadrant, as a rollout closure.
pub fn partitioned_policy(
    pt: PartitionedTheta,
    partition: RegionPartition,
) -> impl Fn(&State) -> f64 + Copy {
    move |s| policy_action(pt.theta(partition.classify(s)), *s)
}

/// Episode budget and per-step cost.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CostConfig {
    /// Maximum episode length in steps.
    pub t_max: usize,
    /// Cost charged per non-goal step.
    pub step_cost: f64,
}

impl Default for CostConfig {
    fn default() -> Self {
        Self {
            t_max: 500,
            step_cost: 1.0,
        }
    }
}

impl CostConfig {
    pub fn validate(&self) -> Result<(), ObjectiveError> {
        if self.t_max >= 1 && self.step_cost > 0.0 && self.step_cost.is_finite() {
            Ok(())
        } else {
            Err(ObjectiveError::InvalidConfig(format!("{self:?}")))
        }
    }
}

/// Outcome of one episode. Trajectory and control sequences are recorded on
/// request; the trajectory has steps+1 entries, the controls steps entries.
#[derive(Debug, Clone, PartialEq)]
pub struct EpisodeResult {
    pub steps: usize,
    pub reached_goal: bool,
    pub trajectory: Option<Vec<State>>,
    pub controls: Option<Vec<f64>>,
}

#[derive(Debug, Error)]
pub enum ObjectiveError {
    #[error(transparent)]
    Env(#[from] EnvError),
    #[error(transparent)]
    Partition(#[from] PartitionError),
    #[error("invalid cost configuration: {0}")]
    InvalidConfig(String),
    #[error("start state (z = {z}, v = {v}) outside the state box")]
    StartOutOfBox { z: f64, v: f64 },
    #[error("empty initial-condition set")]
    EmptyIcSet,
    #[error("initial condition {index} for region {expected} lies in region {found}")]
    IcRegionMismatch {
        expected: Region,
        found: Region,
        index: usize,
    },
}

/// Roll the policy out from `x0` until goal absorption or the step budget.
///
/// A start already at the goal position costs zero steps. The policy is any
/// state-to-control map; controls outside [-1, 1] surface as env errors.
pub fn rollout<F>(
    mut policy: F,
    x0: State,
    env: &EnvParams,
    cc: &CostConfig,
    record: bool,
) -> Result<EpisodeResult, ObjectiveError>
where
    F: FnMut(&State) -> f64,
{
    cc.validate()?;
    if !env.contains(&x0) {
        return Err(ObjectiveError::StartOutOfBox { z: x0.z, v: x0.v });
    }

    let mut trajectory = record.then(|| {
        let mut t = Vec::with_capacity(cc.t_max.min(1 << 16) + 1);
        t.push(x0);
        t
    });
    let mut controls = record.then(Vec::new);

    if x0.z == env.z_goal {
        return Ok(EpisodeResult {
            steps: 0,
            reached_goal: true,
            trajectory,
            controls,
        });
    }

    let mut s = x0;
    let mut steps = 0;
    let mut reached_goal = false;
    while steps < cc.t_max {
        let u = policy(&s);
        let out = step(s, u, env)?;
        steps += 1;
        if let Some(t) = trajectory.as_mut() {
            t.push(out.next);
        }
        if let Some(c) = controls.as_mut() {
            c.push(u);
        }
        s = out.next;
        if out.reached_goal {
            reached_goal = true;
            break;
        }
    }

    Ok(EpisodeResult {
        steps,
        reached_goal,
        trajectory,
        controls,
    })
}

/// Episode cost from one start: step_cost per step until absorption or timeout.
pub fn cost_to_go<F>(policy: F, x0: State, env: &EnvParams, cc: &CostConfig) -> Result<f64, ObjectiveError>
where
    F: FnMut(&State) -> f64,
{
    Ok(cc.step_cost * rollout(policy, x0, env, cc, false)?.steps as f64)
}

/// Mean episode cost over a set of initial conditions.
pub fn gamma_bullet<F>(
    mut policy: F,
    ics: &[State],
    env: &EnvParams,
    cc: &CostConfig,
) -> Result<f64, ObjectiveError>
where
    F: FnMut(&State) -> f64,
{
    if ics.is_empty() {
        return Err(ObjectiveError::EmptyIcSet);
    }
    let mut total = 0.0;
    for x0 in ics {
        total += cost_to_go(&mut policy, *x0, env, cc)?;
    }
    Ok(total / ics.len() as f64)
}

/// The training objective: mean episode cost capped at the time budget.
pub fn gamma<F>(policy: F, ics: &[State], env: &EnvParams, cc: &CostConfig) -> Result<f64, ObjectiveError>
where
    F: FnMut(&State) -> f64,
{
    Ok(gamma_bullet(policy, ics, env, cc)?.min(cc.t_max as f64))
}

/// Per-region objective values of the assembled partitioned policy, plus
/// their mean. Every rollout runs the full partitioned policy; the regions
/// only select which initial conditions feed each value.
pub fn gamma_partitioned_avg(
    pt: &PartitionedTheta,
    per_region_ics: &[Vec<State>; 4],
    partition: &RegionPartition,
    env: &EnvParams,
    cc: &CostConfig,
) -> Result<([f64; 4], f64), ObjectiveError> {
    for region in Region::ALL {
        let ics = &per_region_ics[region.index()];
        if ics.is_empty() {
            return Err(ObjectiveError::EmptyIcSet);
        }
        for (index, s) in ics.iter().enumerate() {
            let found = region_of(*s, partition, env)?;
            if found != region {
                return Err(ObjectiveError::IcRegionMismatch {
                    expected: region,
                    found,
                    index,
                });
            }
        }
    }

    let policy = partitioned_policy(*pt, *partition);
    let mut per_region = [0.0; 4];
    for region in Region::ALL {
        per_region[region.index()] = gamma(policy, &per_region_ics[region.index()], env, cc)?;
    }
    let mean = per_region.iter().sum::<f64>() / 4.0;
    Ok((per_region, mean))
}
