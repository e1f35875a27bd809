use std::hint::black_box;

use criterion::{criterion_group, criterion_main, Criterion};
use tabletask_bench::{request, scenario, solved};
use tabletask_core::layout::construct_layout;
use tabletask_core::relations::scene_relations;
use tabletask_core::scene::TaskType;
use tabletask_core::sim::{plan_demonstration, run_episode, OraclePolicy};
use tabletask_core::taskgen::GenerationConfig;

fn relations(c: &mut Criterion) {
    let cfg = GenerationConfig::default();
    let cases = solved(&cfg);
    c.bench_function("scene_relations", |b| {
        b.iter(|| {
            for (_, layout) in &cases {
                black_box(scene_relations(layout, &cfg.thresholds));
            }
        })
    });
}

fn layout(c: &mut Criterion) {
    let cfg = GenerationConfig::default();
    let cases = solved(&cfg);
    c.bench_function("construct_layout", |b| {
        b.iter(|| {
            for (s, _) in &cases {
                black_box(construct_layout(s, &cfg.table, s.seed, &cfg.layout, &cfg.thresholds).unwrap());
            }
        })
    });
}

fn generation(c: &mut Criterion) {
    let cfg = GenerationConfig::default();
    let reqs: Vec<_> = TaskType::ALL.iter().enumerate().map(|(i, t)| request(*t, i as u64)).collect();
    c.bench_function("mock_generate", |b| {
        b.iter(|| {
            for req in &reqs {
                black_box(scenario(req, &cfg));
            }
        })
    });
}

fn oracle(c: &mut Criterion) {
    let cfg = GenerationConfig::default();
    let cases = solved(&cfg);
    c.bench_function("plan_demonstration", |b| {
        b.iter(|| {
            for (s, layout) in &cases {
                black_box(plan_demonstration(s, layout, &cfg.sim, &cfg.thresholds).unwrap());
            }
        })
    });
    c.bench_function("oracle_episode", |b| {
        b.iter(|| {
            for (s, layout) in &cases {
                let mut policy = OraclePolicy::new(s, layout, &cfg.sim, &cfg.thresholds);
                black_box(run_episode(s, layout, &mut policy, &cfg.sim, &cfg.thresholds));
            }
        })
    });
}

criterion_group!(benches, relations, layout, generation, oracle);
criterion_main!(benches);
