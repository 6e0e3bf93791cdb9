//! Benchmarks for the four hot paths: power-law fitting, bootstrap
//! resampling, a full simulator sweep, and a short calibration run.

use criterion::{criterion_group, criterion_main, Criterion};
use std::hint::black_box;
use tcsl_core::{
    bootstrap_ci, calibrate, fit_optimal_size_law, fit_power_law, fit_throughput,
    load_reference_dataset, rtx4090, sweep, SimParams, TiePolicy, REFERENCE_BUDGETS,
};

fn bench_fit_power_law(c: &mut Criterion) {
    let ds = load_reference_dataset();
    let (_, anchors) = fit_optimal_size_law(&ds.grid, TiePolicy::default()).unwrap();
    c.bench_function("fit_power_law_8pt", |b| {
        b.iter(|| fit_power_law(black_box(&anchors)).unwrap())
    });
}

fn bench_bootstrap(c: &mut Criterion) {
    let ds = load_reference_dataset();
    let (_, anchors) = fit_optimal_size_law(&ds.grid, TiePolicy::default()).unwrap();
    c.bench_function("bootstrap_ci_1000", |b| {
        b.iter(|| bootstrap_ci(black_box(&anchors), 1000, 7).unwrap())
    });
}

fn bench_sweep(c: &mut Criterion) {
    let ds = load_reference_dataset();
    let profile = fit_throughput(&rtx4090()).unwrap();
    let sim = SimParams::shipped_defaults();
    c.bench_function("sweep_10x8", |b| {
        b.iter(|| sweep(black_box(&sim), &profile, &REFERENCE_BUDGETS, &ds.configs).unwrap())
    });
}

fn bench_calibrate_short(c: &mut Criterion) {
    let ds = load_reference_dataset();
    let profile = fit_throughput(&rtx4090()).unwrap();
    let initial = SimParams::initial_guess();
    c.bench_function("calibrate_10_sweeps", |b| {
        b.iter(|| calibrate(black_box(&initial), &ds.grid, &profile, 10, 7).unwrap())
    });
}

criterion_group!(
    benches,
    bench_fit_power_law,
    bench_bootstrap,
    bench_sweep,
    bench_calibrate_short
);
criterion_main!(benches);
