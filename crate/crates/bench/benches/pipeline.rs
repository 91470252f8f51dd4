use criterion::{criterion_group, criterion_main, BatchSize, Criterion};
use std::hint::black_box;

use qsa_bench::{bench_config, bench_ics, decent_theta};
use qsa_core::experiment::{train_uniform, ExperimentConfig};
use qsa_core::objective::{gamma, rollout, uniform_policy};
use qsa_core::probing::{probe_value, ClockMode, ProbingConfig, SinusoidMixture, SinusoidTerm};
use qsa_core::qsgd::{qsgd_update, QsgdConfig};
use qsa_core::{step, EnvParams, State};

fn bench_env_step(c: &mut Criterion) {
    let env = EnvParams::default();
    let s = State::new(-0.52, 0.031);
    c.bench_function("env_step", |b| {
        b.iter(|| step(black_box(s), black_box(0.7), &env).unwrap())
    });
}

fn bench_rollout(c: &mut Criterion) {
    let env = EnvParams::default();
    let cost = bench_config().cost;
    let theta = decent_theta();
    c.bench_function("rollout_mid_valley", |b| {
        b.iter(|| {
            rollout(
                uniform_policy(theta),
                black_box(State::new(-0.5, 0.01)),
                &env,
                &cost,
                false,
            )
            .unwrap()
        })
    });
}

fn bench_gamma(c: &mut Criterion) {
    let cfg = bench_config();
    let ics = bench_ics();
    let theta = decent_theta();
    c.bench_function("gamma_80_ics", |b| {
        b.iter(|| gamma(uniform_policy(theta), black_box(&ics), &cfg.env, &cfg.cost).unwrap())
    });
}

fn bench_probe(c: &mut Criterion) {
    let dim = |a1: f64, a2: f64| SinusoidMixture {
        terms: vec![
            SinusoidTerm { amplitude: a1, frequency: 0.3, phase: 0.0 },
            SinusoidTerm { amplitude: a2, frequency: 50.0, phase: 0.0 },
        ],
    };
    let pc = ProbingConfig {
        dims: vec![dim(0.62, 0.17), dim(0.31, 0.88)],
        clock_mode: ClockMode::OdeTime,
    };
    c.bench_function("probe_value", |b| b.iter(|| probe_value(&pc, black_box(0.173))));
}

fn bench_update(c: &mut Criterion) {
    let cfg = QsgdConfig::default();
    c.bench_function("qsgd_update", |b| {
        b.iter(|| {
            qsgd_update(
                black_box(&[0.4, -0.9]),
                black_box(&[0.3, 0.8]),
                black_box(57.0),
                black_box(0.04),
                &cfg,
            )
            .unwrap()
        })
    });
}

fn bench_training(c: &mut Criterion) {
    let mut group = c.benchmark_group("training");
    group.sample_size(10);
    group.bench_function("train_uniform_50_iters", |b| {
        b.iter_batched(
            || ExperimentConfig { master_seed: 23, ..bench_config() },
            |cfg| train_uniform(&cfg).unwrap(),
            BatchSize::LargeInput,
        )
    });
    group.finish();
}

criterion_group!(
    benches,
    bench_env_step,
    bench_rollout,
    bench_gamma,
    bench_probe,
    bench_update,
    bench_training
);
criterion_main!(benches);
