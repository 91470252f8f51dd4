//! Acceptance suite: one test per criterion, each printing a pass/fail line
//! with the measured values.
//!
//! Criteria 1 and 3 pin absolute performance bands for trained policies.
//! Under the default initial-condition distribution (uniform over the state
//! box) those absolute bands are not reachable — the measured optimum of the
//! uniform sign policy on such ICs is ~46.6 mean steps with per-episode
//! lengths spread over [2, 120], and multi-restart training settles in a
//! broad basin around 60-80 — so those two tests document the gap and fail
//! with the numbers printed. The remaining criteria pass.

use std::sync::OnceLock;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use qsa_core::energy_policy::{
    analytic_feedback, continuous_dynamics, lyapunov_rate, lyapunov_value, total_energy,
    EnergyParams,
};
use qsa_core::env::{step, EnvParams, State};
use qsa_core::experiment::{
    generalization_test, histogram_experiment, test_ics, train_partitioned, train_uniform,
    ExperimentConfig, PolicyMode,
};
use qsa_core::objective::{partitioned_policy, rollout, uniform_policy};
use qsa_core::probing::{probe_value, sample_probing_config, ClockMode, DEFAULT_FREQUENCIES, DEFAULT_PHASES};
use qsa_core::qsgd::{qsgd_update, run_qsgd, step_size, QsgdConfig};

const TRAIN_SEEDS: u64 = 20;

struct SeedOutcome {
    master: u64,
    episode_lengths: Vec<usize>,
    converged: Vec<bool>,
}

/// Criterion 1/2 share the same 20 trained policies; train them once.
fn trained_seed_outcomes() -> &'static Vec<SeedOutcome> {
    static OUTCOMES: OnceLock<Vec<SeedOutcome>> = OnceLock::new();
    OUTCOMES.get_or_init(|| {
        (0..TRAIN_SEEDS)
            .into_par_iter()
            .map(|master| {
                let cfg = ExperimentConfig { master_seed: master, ..ExperimentConfig::default() };
                let out = train_uniform(&cfg).expect("training must complete");
                let mut episode_lengths = Vec::with_capacity(out.ics.states.len());
                let mut converged = Vec::with_capacity(out.ics.states.len());
                for x0 in &out.ics.states {
                    let r = rollout(uniform_policy(out.run.theta), *x0, &cfg.env, &cfg.cost, false)
                        .expect("rollout");
                    episode_lengths.push(r.steps);
                    converged.push(r.reached_goal);
                }
                SeedOutcome { master, episode_lengths, converged }
            })
            .collect()
    })
}

#[test]
fn criterion_1_minimum_time_band() {
    let outcomes = trained_seed_outcomes();
    let mut passing_seeds = 0;
    for o in outcomes.iter() {
        let n = o.episode_lengths.len() as f64;
        let in_band = o.episode_lengths.iter().filter(|&&s| (38..=50).contains(&s)).count() as f64 / n;
        let sub_100 = o.episode_lengths.iter().filter(|&&s| s < 100).count() as f64 / n;
        let ok = in_band >= 0.60 && sub_100 >= 0.95;
        println!(
            "  seed {:2}: in [38,50] {:>5.1}%, below 100 {:>5.1}% -> {}",
            o.master,
            100.0 * in_band,
            100.0 * sub_100,
            if ok { "ok" } else { "out of band" }
        );
        if ok {
            passing_seeds += 1;
        }
    }
    let frac = passing_seeds as f64 / outcomes.len() as f64;
    let pass = frac >= 0.70;
    println!(
        "criterion 1 (minimum-time band): {} — {passing_seeds}/{} seeds within band (need >= 70%)",
        if pass { "PASS" } else { "FAIL" },
        outcomes.len()
    );
    assert!(
        pass,
        "only {passing_seeds}/{} seeds put >= 60% of episode lengths in [38, 50] and >= 95% below 100; \
         with initial conditions uniform over the box, episode lengths of a cost-minimizing policy spread \
         from single digits (near-goal starts) past 100 (deep-valley starts), so the stated clustering is \
         not attainable for this IC distribution",
        outcomes.len()
    );
}

#[test]
fn criterion_2_order_of_magnitude() {
    let outcomes = trained_seed_outcomes();
    let mut worst = 0usize;
    let mut total = 0usize;
    for o in outcomes.iter() {
        for (len, conv) in o.episode_lengths.iter().zip(&o.converged) {
            if *conv {
                worst = worst.max(*len);
                total += 1;
            }
        }
    }
    let pass = worst < 400;
    println!(
        "criterion 2 (order of magnitude): {} — {total} converged episodes over {TRAIN_SEEDS} seeds, longest {worst} steps (need < 400)",
        if pass { "PASS" } else { "FAIL" }
    );
    assert!(pass, "a converged trained episode took {worst} >= 400 steps");
}

#[test]
fn criterion_3_partitioned_superiority() {
    let uniform_cfg = ExperimentConfig {
        master_seed: 0,
        mode: PolicyMode::Uniform,
        n_restarts: 100,
        ..ExperimentConfig::default()
    };
    let partitioned_cfg = ExperimentConfig {
        mode: PolicyMode::Partitioned,
        ..uniform_cfg.clone()
    };
    let uniform = histogram_experiment(&uniform_cfg).expect("uniform study");
    let partitioned = histogram_experiment(&partitioned_cfg).expect("partitioned study");

    let mean = |v: &[f64]| v.iter().sum::<f64>() / v.len() as f64;
    let u_mean = mean(&uniform.raw_values);
    let p_mean = mean(&partitioned.raw_values);
    let u_mass = uniform.mass_below(46.0);
    let p_mass = partitioned.mass_below(46.0);
    let mean_ok = p_mean <= u_mean;
    let mass_ok = p_mass > u_mass;
    println!(
        "  uniform     M={:3}: mean {:.2}, mass below 46 = {:.3}",
        uniform.raw_values.len(),
        u_mean,
        u_mass
    );
    println!(
        "  partitioned M={:3}: mean {:.2}, mass below 46 = {:.3}",
        partitioned.raw_values.len(),
        p_mean,
        p_mass
    );
    let pass = mean_ok && mass_ok;
    println!(
        "criterion 3 (partitioned superiority): {} — mean {} (partitioned {:.2} vs uniform {:.2}), mass<46 {}",
        if pass { "PASS" } else { "FAIL" },
        if mean_ok { "ok" } else { "violated" },
        p_mean,
        u_mean,
        if mass_ok { "ok" } else { "violated" }
    );
    assert!(
        pass,
        "partitioned mean {p_mean:.2} vs uniform mean {u_mean:.2}, partitioned mass<46 {p_mass:.3} vs uniform {u_mass:.3}; \
         with box-uniform per-region ICs both approaches settle in the same broad policy basin (final objectives 60-90), \
         so neither the mean ordering nor mass below the absolute threshold 46 reproduces here"
    );
}

#[test]
fn criterion_4_generalization() {
    let masters: Vec<u64> = (0..10).collect();
    let results: Vec<(u64, bool, bool)> = masters
        .par_iter()
        .map(|&master| {
            let cfg = ExperimentConfig { master_seed: master, ..ExperimentConfig::default() };
            let uniform = train_uniform(&cfg).expect("uniform training");
            let partitioned = train_partitioned(&cfg).expect("partitioned training");
            let ics = test_ics(&cfg).expect("test ICs");
            let (_, u_ok) =
                generalization_test(uniform_policy(uniform.run.theta), &ics, &cfg.env, &cfg.cost, false)
                    .expect("uniform generalization");
            let (_, p_ok) = generalization_test(
                partitioned_policy(partitioned.theta, cfg.partition),
                &ics,
                &cfg.env,
                &cfg.cost,
                false,
            )
            .expect("partitioned generalization");
            (master, u_ok, p_ok)
        })
        .collect();

    let mut passing = 0;
    for (master, u_ok, p_ok) in &results {
        println!("  seed {master}: uniform all-converged {u_ok}, partitioned all-converged {p_ok}");
        if *u_ok && *p_ok {
            passing += 1;
        }
    }
    let pass = passing * 10 >= results.len() * 9;
    println!(
        "criterion 4 (generalization): {} — {passing}/{} seeds with every test IC reaching the goal (need >= 90%)",
        if pass { "PASS" } else { "FAIL" },
        results.len()
    );
    assert!(pass, "only {passing}/{} seeds converged from all 50 test ICs", results.len());
}

#[test]
fn criterion_5_energy_identity() {
    let ep = EnergyParams::default();
    let env = EnvParams::default();
    let mut rng = ChaCha8Rng::seed_from_u64(0xE7E26);
    let mut worst = 0.0f64;
    for _ in 0..10_000 {
        let s = State::new(
            rng.gen_range(env.z_min..=env.z_goal),
            rng.gen_range(env.v_min..=env.v_max),
        );
        let lhs = analytic_feedback(s, &ep).unwrap();
        let rhs = -(ep.k / ep.r) * s.v * total_energy(s, &ep).unwrap();
        worst = worst.max((lhs - rhs).abs());
    }
    let pass = worst < 1e-12;
    println!(
        "criterion 5 (energy identity): {} — max |feedback + (k/R) v E| = {worst:.3e} over 10^4 states (need < 1e-12)",
        if pass { "PASS" } else { "FAIL" }
    );
    assert!(pass);
}

#[test]
fn criterion_6_lyapunov_rate_first_order_decay() {
    let ep = EnergyParams::default();
    let max_fd_error = |dt: f64| {
        let mut s = State::new(-0.5, 0.04);
        let mut worst = 0.0f64;
        let n = (1.0 / dt) as usize;
        for k in 0..n {
            let t = k as f64 * dt;
            let u = 0.8 * (2.0 * t).sin();
            let (dz, dv) = continuous_dynamics(s, u, &ep, 3.0);
            let next = State::new(s.z + dt * dz, s.v + dt * dv);
            let fd = (lyapunov_value(next, &ep).unwrap() - lyapunov_value(s, &ep).unwrap()) / dt;
            let analytic = lyapunov_rate(s, u, &ep, 3.0).unwrap();
            worst = worst.max((fd - analytic).abs());
            s = next;
        }
        worst
    };
    let e1 = max_fd_error(1e-3);
    let e2 = max_fd_error(5e-4);
    let e3 = max_fd_error(2.5e-4);
    let r1 = e1 / e2;
    let r2 = e2 / e3;
    let pass = (1.7..=2.3).contains(&r1) && (1.7..=2.3).contains(&r2);
    println!(
        "criterion 6 (lyapunov-rate decay): {} — errors {e1:.3e} / {e2:.3e} / {e3:.3e}, halving ratios {r1:.3}, {r2:.3} (need within [1.7, 2.3])",
        if pass { "PASS" } else { "FAIL" }
    );
    assert!(pass);
}

#[test]
fn criterion_7_update_rule_oracle() {
    let cfg = QsgdConfig::default();
    let mut rng = ChaCha8Rng::seed_from_u64(0x09D4);
    let mut worst_rel = 0.0f64;
    for _ in 0..1000 {
        let theta = [rng.gen_range(-2.0..2.0), rng.gen_range(-2.0..2.0)];
        let xi = [rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)];
        let gamma_value = rng.gen_range(0.0..500.0);
        let a_n = rng.gen_range(1e-4..0.08);
        let next = qsgd_update(&theta, &xi, gamma_value, a_n, &cfg).unwrap();
        // independent scalar arithmetic path; deviations are measured against
        // the operand scale, the meaningful base for a subtraction
        for i in 0..2 {
            let displacement = (a_n * gamma_value / cfg.probe_scale) * xi[i];
            let oracle = theta[i] - displacement;
            let scale = theta[i].abs().max(displacement.abs()).max(f64::MIN_POSITIVE);
            let rel = (next[i] - oracle).abs() / scale;
            worst_rel = worst_rel.max(rel);
        }
    }
    let oracle_ok = worst_rel < 1e-15;

    // full-trace replay must reproduce the theta sequence bit-exactly
    let pc = sample_probing_config(
        &mut ChaCha8Rng::seed_from_u64(31),
        2,
        &DEFAULT_FREQUENCIES,
        &DEFAULT_PHASES,
        ClockMode::OdeTime,
    )
    .unwrap();
    let run_cfg = QsgdConfig { n_iters: 50, ..QsgdConfig::default() };
    let objective = |psi: &[f64]| Ok(60.0 + 30.0 * (psi[0] * 0.7).sin().abs() + psi[1].abs());
    let (final_theta, trace) = run_qsgd(objective, &[0.4, -0.9], &run_cfg, &pc).unwrap();
    let mut replay_ok = true;
    for w in trace.records.windows(2) {
        let xi = probe_value(&pc, w[0].time);
        let next = qsgd_update(&w[0].theta, &xi, w[0].gamma_value, w[0].gain, &run_cfg).unwrap();
        if next != w[1].theta {
            replay_ok = false;
        }
    }
    let last = trace.records.last().unwrap();
    let xi = probe_value(&pc, last.time);
    let next = qsgd_update(&last.theta, &xi, last.gamma_value, last.gain, &run_cfg).unwrap();
    replay_ok &= next == final_theta;
    // gains follow the schedule and strictly decrease
    for rec in &trace.records {
        assert_eq!(rec.gain, step_size(rec.iteration, &run_cfg));
    }

    let pass = oracle_ok && replay_ok;
    println!(
        "criterion 7 (update-rule oracle): {} — max relative deviation {worst_rel:.3e} over 10^3 updates (need < 1e-15), trace replay bit-exact: {replay_ok}",
        if pass { "PASS" } else { "FAIL" }
    );
    assert!(pass);
}

#[test]
fn criterion_8_determinism_and_parallel_equivalence() {
    let cfg = ExperimentConfig {
        master_seed: 5,
        n_restarts: 8,
        ..ExperimentConfig::default()
    };
    let a = histogram_experiment(&cfg).unwrap();
    let b = histogram_experiment(&cfg).unwrap();
    let json_a = serde_json::to_string(&a).unwrap();
    let json_b = serde_json::to_string(&b).unwrap();
    let rerun_identical = json_a == json_b;

    let serial_pool = rayon::ThreadPoolBuilder::new().num_threads(1).build().unwrap();
    let parallel_pool = rayon::ThreadPoolBuilder::new().num_threads(4).build().unwrap();
    let serial = serial_pool.install(|| histogram_experiment(&cfg).unwrap());
    let parallel = parallel_pool.install(|| histogram_experiment(&cfg).unwrap());
    let pools_identical = serial.raw_values == parallel.raw_values
        && serde_json::to_string(&serial).unwrap() == serde_json::to_string(&parallel).unwrap()
        && serial.raw_values == a.raw_values;

    let pass = rerun_identical && pools_identical;
    println!(
        "criterion 8 (determinism & parallel equivalence): {} — rerun byte-identical: {rerun_identical}, 1-thread vs 4-thread identical: {pools_identical}",
        if pass { "PASS" } else { "FAIL" }
    );
    assert!(pass);
}

#[test]
fn criterion_9_dynamics_closure() {
    let env = EnvParams::default();
    let mut rng = ChaCha8Rng::seed_from_u64(0xC10);
    let mut wall_violations = 0u64;
    let mut escapes = 0u64;
    for _ in 0..100_000 {
        let s = State::new(
            rng.gen_range(env.z_min..=env.z_goal),
            rng.gen_range(env.v_min..=env.v_max),
        );
        let u = rng.gen_range(-1.0..=1.0);
        let out = step(s, u, &env).unwrap();
        if !env.contains(&out.next) {
            escapes += 1;
        }
        if out.next.z == env.z_min && out.next.v < 0.0 {
            wall_violations += 1;
        }
    }
    let pass = escapes == 0 && wall_violations == 0;
    println!(
        "criterion 9 (dynamics closure): {} — 10^5 random transitions, box escapes {escapes}, wall-rule violations {wall_violations}",
        if pass { "PASS" } else { "FAIL" }
    );
    assert!(pass);
}
