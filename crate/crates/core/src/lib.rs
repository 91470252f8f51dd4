//! Gradient-free policy search for the minimum-time Mountain Car problem.
//!
//! The car lives in a bounded position/velocity box and must reach the right
//! hilltop in as few steps as possible. Policies are sign-feedback laws over a
//! two-component parameter, trained with a quasi-stochastic gradient descent
//! loop whose exploration comes from deterministic sinusoids instead of random
//! sampling. The crate provides the environment, the energy-shaping policy
//! family, a four-region partitioned variant, the optimizer, and a seeded
//! experiment harness (training, histogram studies over restarts,
//! generalization tests, CSV/JSON persistence).

pub mod energy_policy;
pub mod env;
pub mod experiment;
pub mod objective;
pub mod partition;
pub mod persist;
pub mod probing;
pub mod qsgd;

pub use energy_policy::{policy_action, EnergyParams, SignConvention, Theta};
pub use env::{step, EnvParams, State, StepOutcome};
pub use experiment::{
    derive_seed, generate_ics, generalization_test, histogram_experiment, train_partitioned,
    train_uniform, ExperimentConfig, HistogramReport, InitialConditionSet, PolicyMode, Role,
    SeedStream,
};
pub use objective::{
    cost_to_go, gamma, gamma_bullet, gamma_partitioned_avg, partitioned_policy, rollout,
    uniform_policy, CostConfig, EpisodeResult,
};
pub use partition::{partitioned_action, region_of, PartitionedTheta, Region, RegionPartition};
pub use probing::{probe_value, sample_probing_config, ClockMode, ProbingConfig, SinusoidMixture};
pub use qsgd::{qsgd_update, run_qsgd, step_size, QsgdConfig, QsgdTrace};
