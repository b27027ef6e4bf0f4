//! Criterion benches: boundary projection, the metric kernels, and the
//! per-episode validation pipeline on synthetic data.

use std::collections::BTreeMap;
use std::hint::black_box;
use std::sync::Arc;

use aas_bench::bench_bundle;
use aas_core::metrics::{edit_sim, kendalls_w, LabeledSpan};
use aas_core::planner::discover_plan;
use aas_core::segmenter::{project_to_valid, HeuristicBackend};
use aas_core::synth::{NoiseConfig, OracleBackend};
use aas_core::validator::{validate_episode, ValidationConfig};
use criterion::{criterion_group, criterion_main, Criterion};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn bench_projection(c: &mut Criterion) {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let t = 300u32;
    let raw: Vec<Vec<(i64, i64)>> = (0..64)
        .map(|_| {
            (0..8)
                .map(|_| {
                    let s = rng.random_range(-20i64..=t as i64 + 20);
                    let e = rng.random_range(-20i64..=t as i64 + 20);
                    (s, e)
                })
                .collect()
        })
        .collect();
    c.bench_function("project_to_valid/8x300", |b| {
        b.iter(|| {
            for spans in &raw {
                black_box(project_to_valid(black_box(spans), t).unwrap());
            }
        })
    });
}

fn bench_metric_kernels(c: &mut Criterion) {
    let seq = |labels: &[&str]| -> Vec<LabeledSpan> {
        labels
            .iter()
            .enumerate()
            .map(|(i, l)| LabeledSpan::new(l, 1 + 10 * i as u32, 10 + 10 * i as u32))
            .collect()
    };
    let a = seq(&["grasp", "lift", "transfer", "place", "release", "push", "pull", "align"]);
    let b = seq(&["grasp", "lift", "place", "transfer", "release", "pull", "push", "align"]);
    c.bench_function("edit_sim/8", |bch| {
        bch.iter(|| black_box(edit_sim(black_box(&a), black_box(&b)).unwrap()))
    });

    let mut rng = ChaCha8Rng::seed_from_u64(13);
    let ratings: Vec<Vec<f64>> =
        (0..6).map(|_| (0..40).map(|_| rng.random_range(0..12) as f64).collect()).collect();
    c.bench_function("kendalls_w/6x40", |bch| {
        bch.iter(|| black_box(kendalls_w(black_box(&ratings)).unwrap()))
    });
}

fn bench_validate_episode(c: &mut Criterion) {
    let bundle = bench_bundle(8);
    let schema = Arc::new(bundle.schema.clone());
    let cfg = ValidationConfig::default();
    let plans: BTreeMap<&str, _> = bundle
        .episodes
        .iter()
        .map(|ep| {
            let plan = discover_plan(&bundle.schema, &bundle.registry, ep).expect("plan grounds");
            (ep.episode_id.as_str(), plan)
        })
        .collect();

    let oracle = OracleBackend::new(bundle.references.clone(), NoiseConfig::default());
    c.bench_function("validate_episode/oracle", |b| {
        b.iter(|| {
            for ep in &bundle.episodes {
                let out = validate_episode(&bundle.schema, ep, &plans[ep.episode_id.as_str()], &oracle, &cfg);
                black_box(out.result.status.is_accepted());
            }
        })
    });

    let heuristic = HeuristicBackend::new(schema.clone());
    c.bench_function("validate_episode/heuristic", |b| {
        b.iter(|| {
            for ep in &bundle.episodes {
                let out = validate_episode(&bundle.schema, ep, &plans[ep.episode_id.as_str()], &heuristic, &cfg);
                black_box(out.result.status.is_accepted());
            }
        })
    });
}

criterion_group!(benches, bench_projection, bench_metric_kernels, bench_validate_episode);
criterion_main!(benches);
