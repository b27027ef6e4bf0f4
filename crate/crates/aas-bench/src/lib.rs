//! Shared fixtures for the criterion benches.

use aas_core::synth::{generate_dataset, SynthBundle, SynthConfig};

/// A deterministic synthetic dataset sized for benchmarking.
pub fn bench_bundle(num_episodes: usize) -> SynthBundle {
    let cfg = SynthConfig { num_episodes, seed: 7, ..SynthConfig::default() };
    generate_dataset(&cfg).expect("bench dataset generates")
}
