//! Shared fixtures for the criterion benchmarks.

use qsa_core::experiment::{training_ics, ExperimentConfig};
use qsa_core::{State, Theta};

/// Default experiment config with a fixed master seed.
pub fn bench_config() -> ExperimentConfig {
    ExperimentConfig {
        master_seed: 17,
        ..ExperimentConfig::default()
    }
}

/// The 80 seeded training starts of the bench config.
pub fn bench_ics() -> Vec<State> {
    training_ics(&bench_config()).expect("valid defaults").states
}

/// A parameter from the interior of the converged basin; episodes from the
/// box interior finish in well under the step budget.
pub fn decent_theta() -> Theta {
    Theta::new(-4.0, -6.0)
}
