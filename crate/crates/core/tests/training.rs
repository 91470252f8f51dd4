//! Training-level integration tests: statistical behavior over restarts,
//! per-region determinism, and histogram report structure.

use rayon::prelude::*;

use qsa_core::experiment::{
    derive_seed, histogram_experiment, per_region_training_ics, test_ics, train_partitioned,
    train_single_run, train_uniform, training_ics, ExperimentConfig, PolicyMode, SeedStream,
};
use qsa_core::objective::{gamma, partitioned_policy, uniform_policy};
use qsa_core::partition::Region;

fn small_cfg(master: u64) -> ExperimentConfig {
    ExperimentConfig {
        master_seed: master,
        ..ExperimentConfig::default()
    }
}

#[test]
fn uniform_training_completes_with_finite_parameters() {
    let cfg = small_cfg(3);
    let out = train_uniform(&cfg).unwrap();
    assert_eq!(out.run.trace.len(), cfg.qsgd.n_iters);
    assert!(out.run.theta.is_finite());
    assert!(out.run.final_gamma.is_finite());
    assert!(out.run.final_gamma <= cfg.cost.t_max as f64);
    // the sampled probing config travels with the run for reproducibility
    assert_eq!(out.run.probing.dim(), 2);
}

/// Statistical descent check over 100 seeded restarts on one IC set.
///
/// Training reliably rescues bad initial parameters (objective near the
/// timeout cap) and never wanders far uphill, but from a start already
/// inside the good basin the final objective can sit a few steps above the
/// start, so strict improvement holds for a majority rather than for 90%.
#[test]
fn training_repairs_bad_starts_and_rarely_regresses() {
    let cfg = small_cfg(0);
    let ics = training_ics(&cfg).unwrap();
    let stats: Vec<(f64, f64)> = (0..100u64)
        .into_par_iter()
        .map(|i| {
            let run = train_single_run(
                &cfg,
                &ics.states,
                derive_seed(cfg.master_seed, SeedStream::Theta0, i),
                derive_seed(cfg.master_seed, SeedStream::Probe, i),
            )
            .unwrap();
            let start = gamma(uniform_policy(run.theta0), &ics.states, &cfg.env, &cfg.cost).unwrap();
            (start, run.final_gamma)
        })
        .collect();

    let improved = stats.iter().filter(|(start, end)| end <= start).count();
    assert!(improved >= 60, "only {improved}/100 runs improved on their start");

    let within_tolerance = stats.iter().filter(|(start, end)| *end <= start + 10.0).count();
    assert_eq!(within_tolerance, 100, "a run regressed by more than 10 steps");

    let bad_starts: Vec<_> = stats.iter().filter(|(start, _)| *start > 300.0).collect();
    assert!(bad_starts.len() >= 20, "seeded theta0 pool should contain bad starts");
    for (start, end) in &bad_starts {
        assert!(
            *end < 150.0,
            "training left a bad start (gamma {start:.1}) at gamma {end:.1}"
        );
    }

    let worst_final = stats.iter().map(|(_, end)| *end).fold(0.0f64, f64::max);
    assert!(worst_final < 150.0, "a trained policy ended at gamma {worst_final:.1}");
}

#[test]
fn partitioned_training_produces_four_full_traces() {
    let cfg = small_cfg(4);
    let out = train_partitioned(&cfg).unwrap();
    for run in &out.runs {
        assert_eq!(run.trace.len(), cfg.qsgd.n_iters);
    }
    // mean of the per-region objectives never exceeds their max
    let max = out.per_region_gamma.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    assert!(out.gamma_bar <= max);
    assert!(out.theta.is_finite());
}

#[test]
fn identical_ics_and_seeds_give_identical_region_parameters() {
    let cfg = small_cfg(9);
    let ics = training_ics(&cfg).unwrap();
    let runs: Vec<_> = (0..4)
        .map(|_| train_single_run(&cfg, &ics.states, 111, 222).unwrap())
        .collect();
    for r in &runs[1..] {
        assert_eq!(r.theta, runs[0].theta);
        assert_eq!(r.trace, runs[0].trace);
    }
}

#[test]
fn single_value_histogram() {
    let cfg = ExperimentConfig {
        master_seed: 1,
        n_restarts: 1,
        ..ExperimentConfig::default()
    };
    let report = histogram_experiment(&cfg).unwrap();
    assert_eq!(report.raw_values.len(), 1);
    assert_eq!(report.counts.iter().sum::<u64>(), 1);
    assert_eq!(report.failure_count, 0);
    let summary = report.summary.unwrap();
    assert_eq!(summary.min, summary.max);
}

#[test]
fn histogram_reports_are_deterministic_and_embed_config() {
    let cfg = ExperimentConfig {
        master_seed: 12,
        n_restarts: 4,
        ..ExperimentConfig::default()
    };
    let a = histogram_experiment(&cfg).unwrap();
    let b = histogram_experiment(&cfg).unwrap();
    assert_eq!(a, b);
    assert_eq!(a.config, cfg);
    assert_eq!(a.raw_values.len(), 4);
}

#[test]
fn partitioned_histogram_consumes_the_uniform_theta0_pool() {
    // restart j of region r uses pool entry r * (M/4) + j, so a partitioned
    // study and a uniform study with the same master share theta0 draws
    let cfg = ExperimentConfig {
        master_seed: 21,
        mode: PolicyMode::Partitioned,
        n_restarts: 8,
        ..ExperimentConfig::default()
    };
    let report = histogram_experiment(&cfg).unwrap();
    assert_eq!(report.raw_values.len(), 2);

    let region_ics = per_region_training_ics(&cfg).unwrap();
    // reproduce restart 0 by hand from the shared pool
    let per_region = (cfg.n_restarts / 4) as u64;
    let mut total = 0.0;
    let mut thetas = Vec::new();
    for region in Region::ALL {
        let pool = region.index() as u64 * per_region;
        let run = train_single_run(
            &cfg,
            &region_ics[region.index()],
            derive_seed(cfg.master_seed, SeedStream::Theta0, pool),
            derive_seed(cfg.master_seed, SeedStream::Probe, pool),
        )
        .unwrap();
        thetas.push(run.theta);
        total += run.final_gamma;
    }
    let _ = total;
    let pt = qsa_core::partition::PartitionedTheta::new([thetas[0], thetas[1], thetas[2], thetas[3]]);
    let (_, gamma_bar) = qsa_core::objective::gamma_partitioned_avg(
        &pt,
        &region_ics,
        &cfg.partition,
        &cfg.env,
        &cfg.cost,
    )
    .unwrap();
    assert_eq!(report.raw_values[0], gamma_bar);
}

#[test]
fn trained_policies_generalize_to_held_out_starts() {
    let cfg = small_cfg(2);
    let uniform = train_uniform(&cfg).unwrap();
    let partitioned = train_partitioned(&cfg).unwrap();
    let ics = test_ics(&cfg).unwrap();
    assert_eq!(ics.states.len(), cfg.n_test_ics);

    let (results, all_converged) = qsa_core::experiment::generalization_test(
        uniform_policy(uniform.run.theta),
        &ics,
        &cfg.env,
        &cfg.cost,
        true,
    )
    .unwrap();
    assert!(all_converged);
    for r in &results {
        assert_eq!(r.trajectory.as_ref().unwrap().len(), r.steps + 1);
    }

    let (results, all_converged) = qsa_core::experiment::generalization_test(
        partitioned_policy(partitioned.theta, cfg.partition),
        &ics,
        &cfg.env,
        &cfg.cost,
        false,
    )
    .unwrap();
    assert!(all_converged);
    assert!(results.iter().all(|r| r.trajectory.is_none()));
}

#[test]
fn degenerate_policies_fail_generalization_visibly() {
    // the interior equilibrium start cannot move under a zero policy
    let cfg = small_cfg(2);
    let ics = qsa_core::experiment::InitialConditionSet {
        states: vec![qsa_core::State::new(-std::f64::consts::FRAC_PI_6, 0.0)],
        role: qsa_core::experiment::Role::Test,
        regions: None,
    };
    let (results, all_converged) =
        qsa_core::experiment::generalization_test(|_s: &qsa_core::State| 0.0, &ics, &cfg.env, &cfg.cost, false)
            .unwrap();
    assert!(!all_converged);
    assert_eq!(results[0].steps, cfg.cost.t_max);
}
