use std::hint::black_box;

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use regret_audit_bench::neural_fixture;
use regret_audit_core::{
    exhaustive_regret, guided_refinement, item_wise_regret, random_restart_pga, GridSpec, PgaConfig,
    PortfolioConfig,
};

fn grid_estimators(c: &mut Criterion) {
    let mut group = c.benchmark_group("grid");
    for items in [1usize, 2, 3] {
        let (mech, profile) = neural_fixture(2, items, 42);
        let grid = GridSpec::new(20).unwrap();
        group.bench_with_input(BenchmarkId::new("exhaustive_q20", items), &items, |b, _| {
            b.iter(|| exhaustive_regret(&mech, black_box(&profile), 0, &grid).unwrap())
        });
        group.bench_with_input(BenchmarkId::new("item_wise_q20", items), &items, |b, _| {
            b.iter(|| item_wise_regret(&mech, black_box(&profile), 0, &grid).unwrap())
        });
    }
    group.finish();
}

fn optimizers(c: &mut Criterion) {
    let (mech, profile) = neural_fixture(3, 5, 42);
    let grid = GridSpec::new(1000).unwrap();
    let mut group = c.benchmark_group("optimizer_3x5");
    group.sample_size(10);
    group.bench_function("pga_L50_R200", |b| {
        let cfg = PgaConfig::new(0.1, 50, 200).unwrap();
        b.iter(|| random_restart_pga(&mech, black_box(&profile), 0, &cfg, 7).unwrap())
    });
    group.bench_function("guided_k0_R200", |b| {
        let cfg = PortfolioConfig::deterministic();
        b.iter(|| guided_refinement(&mech, black_box(&profile), 0, &grid, &cfg, 7).unwrap())
    });
    group.finish();
}

criterion_group!(benches, grid_estimators, optimizers);
criterion_main!(benches);
