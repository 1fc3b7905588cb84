use std::hint::black_box;

use criterion::{criterion_group, criterion_main, Criterion};
use nonfick_bench::{glassy, line, sine_state, square};
use nonfick_core::estimates::compute_thresholds;
use nonfick_core::evolution::{simulate, SimulateOptions};
use nonfick_core::grid_ops::{friedrichs_constant, inv_laplacian, laplacian};
use nonfick_core::{BackgroundField, BoundsCertificate};

fn operators(c: &mut Criterion) {
    for (name, grid) in [("line_400", line(400)), ("square_40", square(40))] {
        let s = sine_state(&grid);
        let zeros = vec![0.0; grid.boundary().len()];
        c.bench_function(&format!("laplacian/{name}"), |b| {
            b.iter(|| laplacian(&grid, black_box(&s.u), &zeros).unwrap())
        });
        c.bench_function(&format!("inv_laplacian/{name}"), |b| b.iter(|| inv_laplacian(&grid, black_box(&s.u)).unwrap()));
    }
    let grid = line(200);
    c.bench_function("friedrichs_constant/line_200", |b| b.iter(|| friedrichs_constant(black_box(&grid)).unwrap()));
}

fn evolution(c: &mut Criterion) {
    let tc = glassy();
    let opts = SimulateOptions::default();
    for (name, grid) in [("line_200", line(200)), ("square_24", square(24))] {
        let s0 = sine_state(&grid);
        let phi = BackgroundField::Zero;
        c.bench_function(&format!("simulate_50_steps/{name}"), |b| {
            b.iter(|| simulate(&grid, black_box(&s0), &tc, &phi, 0.05, 1e-3, &opts).unwrap())
        });
    }
}

fn thresholds(c: &mut Criterion) {
    let cert = BoundsCertificate::from_constants(1.0, 0.5, 0.5, 1.0, 0.2, 0.3, 0.8);
    c.bench_function("compute_thresholds", |b| b.iter(|| compute_thresholds(black_box(&cert), 0.3).unwrap()));
}

criterion_group!(benches, operators, evolution, thresholds);
criterion_main!(benches);
