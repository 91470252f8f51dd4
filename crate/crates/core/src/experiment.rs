//! Experiment orchestration: seeded initial conditions, uniform and
//! partitioned training, multi-restart histogram studies, and generalization
//! tests.
//!
//! Everything is a pure function of the experiment config. Per-restart
//! randomness comes from seeds derived as a fixed function of
//! (master_seed, stream, index), so parallel and serial runs produce
//! identical results in identical index order, and uniform and partitioned
//! histogram studies under one master seed consume the same pool of initial
//! parameters.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::energy_policy::Theta;
use crate::env::{EnvError, EnvParams, State};
use crate::objective::{
    gamma, gamma_partitioned_avg, rollout, uniform_policy, CostConfig, EpisodeResult,
    ObjectiveError,
};
use crate::partition::{PartitionError, PartitionedTheta, Region, RegionPartition};
use crate::probing::{
    sample_probing_config, ClockMode, ProbingConfig, ProbingError, DEFAULT_FREQUENCIES,
    DEFAULT_PHASES,
};
use crate::qsgd::{run_qsgd, QsgdConfig, QsgdError, QsgdTrace};

/// Which parameterization an experiment trains and evaluates.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PolicyMode {
    Uniform,
    Partitioned,
}

impl std::fmt::Display for PolicyMode {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            PolicyMode::Uniform => write!(f, "uniform"),
            PolicyMode::Partitioned => write!(f, "partitioned"),
        }
    }
}

/// Whether an initial-condition set feeds training or testing.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Role {
    Train,
    Test,
}

/// Probing-signal settings shared by every run of an experiment; the
/// amplitudes themselves are drawn per run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ProbingSettings {
    pub frequencies: Vec<f64>,
    pub phases: Vec<f64>,
    pub clock_mode: ClockMode,
}

impl Default for ProbingSettings {
    fn default() -> Self {
        Self {
            frequencies: DEFAULT_FREQUENCIES.to_vec(),
            phases: DEFAULT_PHASES.to_vec(),
            clock_mode: ClockMode::OdeTime,
        }
    }
}

/// Full description of an experiment. Serialized as the config file and
/// embedded verbatim in every report.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentConfig {
    pub mode: PolicyMode,
    pub master_seed: u64,
    /// Total training initial conditions (split 4 ways in partitioned mode).
    pub n_train_ics: usize,
    pub n_test_ics: usize,
    /// Total restarts of a histogram study (split 4 ways in partitioned mode).
    pub n_restarts: usize,
    pub qsgd: QsgdConfig,
    pub cost: CostConfig,
    pub env: EnvParams,
    pub partition: RegionPartition,
    pub probing: ProbingSettings,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            mode: PolicyMode::Uniform,
            master_seed: 0,
            n_train_ics: 80,
            n_test_ics: 50,
            n_restarts: 800,
            qsgd: QsgdConfig::default(),
            cost: CostConfig::default(),
            env: EnvParams::default(),
            partition: RegionPartition::default(),
            probing: ProbingSettings::default(),
        }
    }
}

impl ExperimentConfig {
    pub fn validate(&self) -> Result<(), ExperimentError> {
        if self.n_train_ics == 0 || self.n_test_ics == 0 || self.n_restarts == 0 {
            return Err(ExperimentError::InvalidConfig(
                "all experiment counts must be >= 1".into(),
            ));
        }
        if self.mode == PolicyMode::Partitioned && self.n_train_ics % 4 != 0 {
            return Err(ExperimentError::InvalidConfig(format!(
                "partitioned mode needs n_train_ics divisible by 4, got {}",
                self.n_train_ics
            )));
        }
        self.env.validate()?;
        self.partition.validate(&self.env)?;
        self.cost.validate()?;
        self.qsgd.validate(2)?;
        if self.probing.frequencies.is_empty()
            || self.probing.frequencies.len() != self.probing.phases.len()
        {
            return Err(ExperimentError::Probing(ProbingError::MismatchedTermLists));
        }
        Ok(())
    }

    /// Training initial conditions per region in partitioned mode.
    pub fn per_region_train_ics(&self) -> usize {
        self.n_train_ics / 4
    }

    /// Restarts per region in a partitioned histogram study.
    pub fn per_region_restarts(&self) -> usize {
        self.n_restarts / 4
    }
}

/// A seeded set of starting states, optionally tagged with their regions.
#[derive(Debug, Clone, PartialEq)]
pub struct InitialConditionSet {
    pub states: Vec<State>,
    pub role: Role,
    pub regions: Option<Vec<Region>>,
}

/// Named seed streams; the stream tag keeps independent draws from colliding.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SeedStream {
    TrainIcs,
    TestIcs,
    Theta0,
    Probe,
}

impl SeedStream {
    fn tag(self) -> u64 {
        match self {
            SeedStream::TrainIcs => 1,
            SeedStream::TestIcs => 2,
            SeedStream::Theta0 => 3,
            SeedStream::Probe => 4,
        }
    }
}

fn splitmix64(mut x: u64) -> u64 {
    x = x.wrapping_add(0x9E37_79B9_7F4A_7C15);
    let mut z = x;
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Fixed mixing of (master seed, stream, index) into a per-draw seed.
pub fn derive_seed(master: u64, stream: SeedStream, index: u64) -> u64 {
    splitmix64(splitmix64(splitmix64(master) ^ stream.tag()) ^ index)
}

#[derive(Debug, Error)]
pub enum ExperimentError {
    #[error("invalid experiment configuration: {0}")]
    InvalidConfig(String),
    #[error(transparent)]
    Env(#[from] EnvError),
    #[error(transparent)]
    Partition(#[from] PartitionError),
    #[error(transparent)]
    Objective(#[from] ObjectiveError),
    #[error(transparent)]
    Probing(#[from] ProbingError),
    #[error(transparent)]
    Qsgd(#[from] QsgdError),
    #[error("region {region} training failed: {source}")]
    Region {
        region: Region,
        #[source]
        source: Box<ExperimentError>,
    },
}

impl ExperimentError {
    /// Failures of an individual restart (divergence and kin) are recorded in
    /// histogram reports instead of aborting the whole study.
    fn is_restart_failure(&self) -> bool {
        match self {
            ExperimentError::Qsgd(
                QsgdError::Diverged { .. }
                | QsgdError::NonFiniteUpdate { .. }
                | QsgdError::InvalidGamma { .. },
            ) => true,
            ExperimentError::Region { source, .. } => source.is_restart_failure(),
            _ => false,
        }
    }
}

/// Sample `count` starting states uniformly over the box (or one region's
/// sub-box), excluding the degenerate goal position.
pub fn generate_ics(
    seed: u64,
    count: usize,
    role: Role,
    region: Option<Region>,
    env: &EnvParams,
    partition: &RegionPartition,
) -> Result<InitialConditionSet, ExperimentError> {
    if count == 0 {
        return Err(ExperimentError::InvalidConfig("IC count must be >= 1".into()));
    }
    env.validate()?;
    partition.validate(env)?;

    // Half-open sampling intervals make the draws rejection-free: the goal
    // position and the >= tie-break sides fall out automatically.
    let (z_range, v_range) = match region {
        None => (env.z_min..env.z_goal, env.v_min..env.v_max),
        Some(Region::Q1) => (partition.z_split..env.z_goal, partition.v_split..env.v_max),
        Some(Region::Q2) => (env.z_min..partition.z_split, partition.v_split..env.v_max),
        Some(Region::Q3) => (env.z_min..partition.z_split, env.v_min..partition.v_split),
        Some(Region::Q4) => (partition.z_split..env.z_goal, env.v_min..partition.v_split),
    };

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let states: Vec<State> = (0..count)
        .map(|_| State::new(rng.gen_range(z_range.clone()), rng.gen_range(v_range.clone())))
        .collect();
    let regions = region.map(|r| vec![r; count]);
    Ok(InitialConditionSet { states, role, regions })
}

/// Initial parameter draw for restart pools: unif([-1, 1]^2).
pub fn sample_theta0(seed: u64) -> Theta {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    Theta::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0))
}

/// The experiment's uniform-mode training IC set.
pub fn training_ics(cfg: &ExperimentConfig) -> Result<InitialConditionSet, ExperimentError> {
    generate_ics(
        derive_seed(cfg.master_seed, SeedStream::TrainIcs, 0),
        cfg.n_train_ics,
        Role::Train,
        None,
        &cfg.env,
        &cfg.partition,
    )
}

/// Per-region training IC lists for partitioned mode, indexed by region.
pub fn per_region_training_ics(cfg: &ExperimentConfig) -> Result<[Vec<State>; 4], ExperimentError> {
    let mut out: [Vec<State>; 4] = Default::default();
    for region in Region::ALL {
        let set = generate_ics(
            derive_seed(cfg.master_seed, SeedStream::TrainIcs, region.number() as u64),
            cfg.per_region_train_ics(),
            Role::Train,
            Some(region),
            &cfg.env,
            &cfg.partition,
        )?;
        out[region.index()] = set.states;
    }
    Ok(out)
}

/// The experiment's held-out test IC set.
pub fn test_ics(cfg: &ExperimentConfig) -> Result<InitialConditionSet, ExperimentError> {
    generate_ics(
        derive_seed(cfg.master_seed, SeedStream::TestIcs, 0),
        cfg.n_test_ics,
        Role::Test,
        None,
        &cfg.env,
        &cfg.partition,
    )
}

/// Everything produced by one qSGD run on one IC set.
#[derive(Debug, Clone, PartialEq)]
pub struct TrainRun {
    pub theta: Theta,
    pub theta0: Theta,
    pub probing: ProbingConfig,
    pub trace: QsgdTrace,
    /// Objective of the final parameter on the run's training ICs.
    pub final_gamma: f64,
}

/// One qSGD run: draw theta0 and the probing amplitudes from the given
/// seeds, minimize the capped mean cost over `ics` with a single parameter
/// applied everywhere, then score the final parameter on the same ICs.
pub fn train_single_run(
    cfg: &ExperimentConfig,
    ics: &[State],
    theta0_seed: u64,
    probe_seed: u64,
) -> Result<TrainRun, ExperimentError> {
    let theta0 = sample_theta0(theta0_seed);
    let probing = sample_probing_config(
        &mut ChaCha8Rng::seed_from_u64(probe_seed),
        2,
        &cfg.probing.frequencies,
        &cfg.probing.phases,
        cfg.probing.clock_mode,
    )?;

    let env = &cfg.env;
    let cost = &cfg.cost;
    let objective = |psi: &[f64]| {
        let theta = Theta::new(psi[0], psi[1]);
        gamma(uniform_policy(theta), ics, env, cost)
            .map_err(|e| -> Box<dyn std::error::Error + Send + Sync> { Box::new(e) })
    };
    let (theta_vec, trace) = run_qsgd(objective, &theta0.as_array(), &cfg.qsgd, &probing)?;
    let theta = Theta::new(theta_vec[0], theta_vec[1]);
    let final_gamma = gamma(uniform_policy(theta), ics, env, cost)?;
    Ok(TrainRun {
        theta,
        theta0,
        probing,
        trace,
        final_gamma,
    })
}

/// Result of training the uniform policy once.
#[derive(Debug, Clone, PartialEq)]
pub struct UniformTrainOutcome {
    pub run: TrainRun,
    pub ics: InitialConditionSet,
}

/// Train the uniform policy on the experiment's training ICs.
pub fn train_uniform(cfg: &ExperimentConfig) -> Result<UniformTrainOutcome, ExperimentError> {
    cfg.validate()?;
    let ics = training_ics(cfg)?;
    let run = train_single_run(
        cfg,
        &ics.states,
        derive_seed(cfg.master_seed, SeedStream::Theta0, 0),
        derive_seed(cfg.master_seed, SeedStream::Probe, 0),
    )?;
    Ok(UniformTrainOutcome { run, ics })
}

/// Result of training the partitioned policy once.
#[derive(Debug, Clone, PartialEq)]
pub struct PartitionedTrainOutcome {
    pub theta: PartitionedTheta,
    pub runs: [TrainRun; 4],
    pub per_region_ics: [Vec<State>; 4],
    pub per_region_gamma: [f64; 4],
    /// Mean of the four per-region objectives of the assembled policy.
    pub gamma_bar: f64,
}

/// Train one parameter per region, each as an independent uniform problem on
/// that region's ICs, then evaluate the assembled partitioned policy.
pub fn train_partitioned(cfg: &ExperimentConfig) -> Result<PartitionedTrainOutcome, ExperimentError> {
    let mut cfg_check = cfg.clone();
    cfg_check.mode = PolicyMode::Partitioned;
    cfg_check.validate()?;

    let per_region_ics = per_region_training_ics(cfg)?;
    let runs = train_partitioned_restart(cfg, &per_region_ics, 0, 1)?;
    let theta = PartitionedTheta::new([runs[0].theta, runs[1].theta, runs[2].theta, runs[3].theta]);
    let (per_region_gamma, gamma_bar) =
        gamma_partitioned_avg(&theta, &per_region_ics, &cfg.partition, &cfg.env, &cfg.cost)?;
    Ok(PartitionedTrainOutcome {
        theta,
        runs,
        per_region_ics,
        per_region_gamma,
        gamma_bar,
    })
}

/// The four per-region runs of partitioned restart `restart` when the theta0
/// pool is split into contiguous blocks of `per_region` entries. Restart j of
/// region r consumes pool entry r * per_region + j, so a study with M total
/// restarts uses exactly the pool entries 0..M that a uniform study uses.
fn train_partitioned_restart(
    cfg: &ExperimentConfig,
    per_region_ics: &[Vec<State>; 4],
    restart: u64,
    per_region: u64,
) -> Result<[TrainRun; 4], ExperimentError> {
    let mut runs: Vec<TrainRun> = Vec::with_capacity(4);
    for region in Region::ALL {
        let pool_index = region.index() as u64 * per_region + restart;
        let run = train_single_run(
            cfg,
            &per_region_ics[region.index()],
            derive_seed(cfg.master_seed, SeedStream::Theta0, pool_index),
            derive_seed(cfg.master_seed, SeedStream::Probe, pool_index),
        )
        .map_err(|e| ExperimentError::Region {
            region,
            source: Box::new(e),
        })?;
        runs.push(run);
    }
    Ok(runs.try_into().expect("exactly four regions"))
}

/// Histogram summary statistics over the raw values.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HistogramSummary {
    pub mean: f64,
    pub min: f64,
    pub max: f64,
    /// Centers of the most-populated bins.
    pub modes: Vec<f64>,
}

/// Distribution of final objective values across restarts, with the resolved
/// config embedded for reproducibility.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HistogramReport {
    pub config: ExperimentConfig,
    pub raw_values: Vec<f64>,
    pub bin_edges: Vec<f64>,
    pub counts: Vec<u64>,
    pub summary: Option<HistogramSummary>,
    pub failure_count: u64,
}

impl HistogramReport {
    pub fn validate(&self) -> Result<(), ExperimentError> {
        if self.counts.iter().sum::<u64>() != self.raw_values.len() as u64 {
            return Err(ExperimentError::InvalidConfig(
                "histogram counts do not sum to the number of raw values".into(),
            ));
        }
        if self.bin_edges.windows(2).any(|w| w[0] >= w[1]) {
            return Err(ExperimentError::InvalidConfig(
                "histogram bin edges must be strictly increasing".into(),
            ));
        }
        if !self.raw_values.is_empty() && self.bin_edges.len() != self.counts.len() + 1 {
            return Err(ExperimentError::InvalidConfig(
                "histogram needs one more edge than bins".into(),
            ));
        }
        Ok(())
    }

    /// Fraction of raw values strictly below `threshold`.
    pub fn mass_below(&self, threshold: f64) -> f64 {
        if self.raw_values.is_empty() {
            return 0.0;
        }
        self.raw_values.iter().filter(|&&v| v < threshold).count() as f64
            / self.raw_values.len() as f64
    }
}

/// Unit-width bins aligned to integers spanning [min - 1, max + 1].
fn unit_bins(values: &[f64]) -> (Vec<f64>, Vec<u64>) {
    if values.is_empty() {
        return (Vec::new(), Vec::new());
    }
    let min = values.iter().cloned().fold(f64::INFINITY, f64::min);
    let max = values.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let lo = (min - 1.0).floor();
    let hi = (max + 1.0).ceil();
    let n_bins = (hi - lo) as usize;
    let edges: Vec<f64> = (0..=n_bins).map(|k| lo + k as f64).collect();
    let mut counts = vec![0u64; n_bins];
    for &v in values {
        let idx = ((v - lo).floor() as usize).min(n_bins - 1);
        counts[idx] += 1;
    }
    (edges, counts)
}

fn summarize(values: &[f64], edges: &[f64], counts: &[u64]) -> Option<HistogramSummary> {
    if values.is_empty() {
        return None;
    }
    let mean = values.iter().sum::<f64>() / values.len() as f64;
    let min = values.iter().cloned().fold(f64::INFINITY, f64::min);
    let max = values.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let best = counts.iter().max().copied().unwrap_or(0);
    let modes = counts
        .iter()
        .enumerate()
        .filter(|(_, &c)| c == best && c > 0)
        .map(|(i, _)| (edges[i] + edges[i + 1]) / 2.0)
        .collect();
    Some(HistogramSummary { mean, min, max, modes })
}

/// Multi-restart study: train from `n_restarts` seeded initial parameters
/// and histogram the final objective values (uniform mode) or the final
/// per-restart region-averaged objectives (partitioned mode).
///
/// Restarts run in parallel when a rayon pool is available; results are
/// aggregated in restart order either way. A diverged restart contributes a
/// failure count instead of a value.
pub fn histogram_experiment(cfg: &ExperimentConfig) -> Result<HistogramReport, ExperimentError> {
    cfg.validate()?;

    let outcomes: Vec<Result<f64, ExperimentError>> = match cfg.mode {
        PolicyMode::Uniform => {
            let ics = training_ics(cfg)?;
            (0..cfg.n_restarts as u64)
                .into_par_iter()
                .map(|i| {
                    train_single_run(
                        cfg,
                        &ics.states,
                        derive_seed(cfg.master_seed, SeedStream::Theta0, i),
                        derive_seed(cfg.master_seed, SeedStream::Probe, i),
                    )
                    .map(|run| run.final_gamma)
                })
                .collect()
        }
        PolicyMode::Partitioned => {
            if cfg.n_restarts % 4 != 0 {
                return Err(ExperimentError::InvalidConfig(format!(
                    "partitioned histogram needs n_restarts divisible by 4, got {}",
                    cfg.n_restarts
                )));
            }
            let per_region_ics = per_region_training_ics(cfg)?;
            let per_region = cfg.per_region_restarts() as u64;
            (0..per_region)
                .into_par_iter()
                .map(|j| {
                    let runs = train_partitioned_restart(cfg, &per_region_ics, j, per_region)?;
                    let theta = PartitionedTheta::new([
                        runs[0].theta,
                        runs[1].theta,
                        runs[2].theta,
                        runs[3].theta,
                    ]);
                    let (_, gamma_bar) = gamma_partitioned_avg(
                        &theta,
                        &per_region_ics,
                        &cfg.partition,
                        &cfg.env,
                        &cfg.cost,
                    )?;
                    Ok(gamma_bar)
                })
                .collect()
        }
    };

    let mut raw_values = Vec::with_capacity(outcomes.len());
    let mut failure_count = 0u64;
    for outcome in outcomes {
        match outcome {
            Ok(v) => raw_values.push(v),
            Err(e) if e.is_restart_failure() => failure_count += 1,
            Err(e) => return Err(e),
        }
    }

    let (bin_edges, counts) = unit_bins(&raw_values);
    let summary = summarize(&raw_values, &bin_edges, &counts);
    let report = HistogramReport {
        config: cfg.clone(),
        raw_values,
        bin_edges,
        counts,
        summary,
        failure_count,
    };
    report.validate()?;
    Ok(report)
}

/// Roll a policy out from every test IC; `all_converged` is true when each
/// episode reaches the goal.
pub fn generalization_test<F>(
    policy: F,
    ics: &InitialConditionSet,
    env: &EnvParams,
    cc: &CostConfig,
    record: bool,
) -> Result<(Vec<EpisodeResult>, bool), ExperimentError>
where
    F: Fn(&State) -> f64,
{
    let mut results = Vec::with_capacity(ics.states.len());
    for x0 in &ics.states {
        results.push(rollout(&policy, *x0, env, cc, record)?);
    }
    let all_converged = results.iter().all(|r| r.reached_goal);
    Ok((results, all_converged))
}
