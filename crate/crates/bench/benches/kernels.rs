use std::hint::black_box;

use bscatter_bench::{ball_fixture, hilbert_fixture};
use bscatter_core::bound_lab::{free_evolution_kernel, oscillatory_decay_probe, truncated_hilbert_suite};
use bscatter_core::free_resolvent::free_resolvent_kernel;
use bscatter_core::geometry::logspace;
use bscatter_core::m_matrix::{expand_m_inverse, perturbed_resolvent, ExpansionOptions, Route};
use bscatter_core::wave_operator::{a00_direct, SpectralCutoff};
use bscatter_core::{Point3, Sign, C64};
use criterion::{criterion_group, criterion_main, Criterion};

fn free_kernels(c: &mut Criterion) {
    let (x, y) = (Point3::new(0.3, -1.2, 2.0), Point3::new(-0.7, 0.4, 0.1));
    c.bench_function("free_resolvent_kernel", |b| b.iter(|| free_resolvent_kernel(black_box(0.8), x, y, Sign::Plus)));
    c.bench_function("free_evolution_kernel", |b| b.iter(|| free_evolution_kernel(black_box(3.0), black_box(2.0))));
}

fn systems(c: &mut Criterion) {
    let (grid, split) = ball_fixture(2);
    let mut g = c.benchmark_group("ball_res2");
    g.sample_size(10);
    g.bench_function("perturbed_resolvent_symmetric", |b| {
        b.iter(|| perturbed_resolvent(black_box(0.7), Sign::Plus, &split, &grid, Route::Symmetric))
    });
    g.bench_function("expand_m_inverse", |b| {
        b.iter(|| expand_m_inverse(&split, &grid, &logspace(1e-3, 1e-1, 8), ExpansionOptions::default()))
    });
    g.finish();
}

fn integrals(c: &mut Criterion) {
    let cut = SpectralCutoff::new(0.1).unwrap();
    c.bench_function("a00_direct", |b| b.iter(|| a00_direct(black_box(3.0), black_box(0.5), &cut)));
    let unit = SpectralCutoff::new(1.0).unwrap();
    let r = logspace(10.0, 1000.0, 16);
    c.bench_function("oscillatory_probe", |b| b.iter(|| oscillatory_decay_probe(&|l| C64::new(l, 0.0), &unit, black_box(&r))));
    let (grid, u) = hilbert_fixture(600, 0);
    let mut g = c.benchmark_group("hilbert");
    g.sample_size(10);
    g.bench_function("truncated_hilbert_suite", |b| b.iter(|| truncated_hilbert_suite(&grid, black_box(&u), 2.0)));
    g.finish();
}

criterion_group!(benches, free_kernels, systems, integrals);
criterion_main!(benches);
