use std::hint::black_box;

use criterion::{criterion_group, criterion_main, Criterion};
use vmpc_bench::recorded_sets;
use vmpc_core::extract::detect::detect;
use vmpc_core::extract::{extract_set, extract_stream};
use vmpc_core::scenario::ScenarioId;
use vmpc_core::sim::presets::builtin_config;
use vmpc_core::sim::{run_simulation, Simulator};

fn simulate(c: &mut Criterion) {
    let mut cfg = builtin_config(ScenarioId::HOT, 1);
    cfg.duration = 0.5;
    c.bench_function("simulate HOT 0.5 s", |b| b.iter(|| run_simulation(black_box(cfg.clone())).unwrap()));
}

fn detection(c: &mut Criterion) {
    for id in [ScenarioId::HOT, ScenarioId::UOT] {
        let (sets, pulse, cfg) = recorded_sets(id, 4, 25);
        let snapshot = &sets[2].snapshots[0];
        c.bench_function(&format!("detect one {id} snapshot"), |b| {
            b.iter(|| detect(black_box(snapshot), &pulse, &cfg.detect))
        });
        c.bench_function(&format!("extract one {id} set"), |b| {
            b.iter(|| extract_set(black_box(&sets[2]), &pulse, &cfg))
        });
    }
}

fn tracking(c: &mut Criterion) {
    let mut sim_cfg = builtin_config(ScenarioId::HOT, 1);
    sim_cfg.duration = 0.5;
    let header = Simulator::new(sim_cfg.clone()).unwrap().header();
    let (sets, _) = run_simulation(sim_cfg).unwrap();
    let (_, _, cfg) = recorded_sets(ScenarioId::HOT, 1, 1);
    let mut group = c.benchmark_group("tracking");
    group.sample_size(10);
    group.bench_function("extract HOT 0.5 s", |b| {
        b.iter(|| extract_stream(header, sets.iter().cloned().map(Ok), &cfg, 1).unwrap())
    });
    group.finish();
}

criterion_group!(benches, simulate, detection, tracking);
criterion_main!(benches);
