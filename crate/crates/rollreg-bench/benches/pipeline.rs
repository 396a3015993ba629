//! Benchmarks for the three heavy paths: integrating one learning cycle,
//! discretizing the closed loop over a revolution, and the Riccati design.

use criterion::{criterion_group, criterion_main, Criterion};
use rollreg::analysis::{discretize_closed_loop, run_recursions};
use rollreg::lqr::{design_gain, LqrWeights};
use rollreg::{run_experiment, ControllerSpec, SimConfig, SystemParams};

fn one_learning_cycle(c: &mut Criterion) {
    let p = SystemParams::default();
    let spec = ControllerSpec::preset("stilc-pid").unwrap();
    let cfg = SimConfig {
        iterations: 1,
        ..SimConfig::default()
    };
    c.bench_function("one_learning_cycle", |b| {
        b.iter(|| run_experiment(&p, &cfg, &spec).unwrap());
    });
}

fn discretize_one_revolution(c: &mut Criterion) {
    let p = SystemParams::default();
    let spec = ControllerSpec::preset("stilc-pid").unwrap();
    c.bench_function("discretize_and_recurse_360_bins", |b| {
        b.iter(|| {
            let profile = discretize_closed_loop(&p, &spec, 360).unwrap();
            run_recursions(&profile)
        });
    });
}

fn riccati_design(c: &mut Criterion) {
    let p = SystemParams::default();
    let w = LqrWeights::default();
    c.bench_function("riccati_design", |b| {
        b.iter(|| design_gain(&p, &w).unwrap());
    });
}

criterion_group!(benches, one_learning_cycle, discretize_one_revolution, riccati_design);
criterion_main!(benches);
