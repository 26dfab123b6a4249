//! Rayon vs sequential on the data-parallel hot paths.

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use std::hint::black_box;

use qpower_twin::bench::{self, BenchSettings};
use qpower_twin::noise::{synthesize_noise, AsdModel};
use qpower_twin::par::{map_parallel, map_sequential};
use qpower_twin::qubit::{coherence_population, fit_ramsey, CoherenceKind, QubitModel};

fn ripple_seeds(c: &mut Criterion) {
    let seeds: Vec<u64> = (0..16).collect();
    let run = |s: &u64| bench::ripple(&BenchSettings::new(*s)).unwrap().0;
    let mut g = c.benchmark_group("ripple_monte_carlo");
    g.sample_size(10);
    g.bench_function("sequential", |b| {
        b.iter(|| map_sequential(black_box(&seeds), run))
    });
    g.bench_function("parallel", |b| {
        b.iter(|| map_parallel(black_box(&seeds), run))
    });
    g.finish();
}

fn ramsey_fits(c: &mut Criterion) {
    let m = QubitModel::default();
    let t: Vec<f64> = (0..41).map(|i| 10e-6 * i as f64 / 40.0).collect();
    let scans: Vec<Vec<f64>> = (0..64)
        .map(|k| {
            let f = 200e3 + 1e3 * k as f64;
            t.iter()
                .map(|&x| coherence_population(CoherenceKind::Ramsey, x, &m, f, 0.0).unwrap())
                .collect()
        })
        .collect();
    let fit = |y: &Vec<f64>| fit_ramsey(&t, y).unwrap().fringe_hz;
    let mut g = c.benchmark_group("ramsey_fits");
    g.bench_function("sequential", |b| {
        b.iter(|| map_sequential(black_box(&scans), fit))
    });
    g.bench_function("parallel", |b| {
        b.iter(|| map_parallel(black_box(&scans), fit))
    });
    g.finish();
}

fn synthesis(c: &mut Criterion) {
    let model = AsdModel::default_output();
    let mut g = c.benchmark_group("noise_records");
    g.sample_size(10);
    for n in [1usize << 14, 1 << 18] {
        let seeds: Vec<u64> = (0..8).collect();
        let run = |s: &u64| synthesize_noise(&model, 50e6, n, *s).unwrap().len();
        g.bench_with_input(BenchmarkId::new("sequential", n), &seeds, |b, s| {
            b.iter(|| map_sequential(s, run))
        });
        g.bench_with_input(BenchmarkId::new("parallel", n), &seeds, |b, s| {
            b.iter(|| map_parallel(s, run))
        });
    }
    g.finish();
}

criterion_group!(benches, ripple_seeds, ramsey_fits, synthesis);
criterion_main!(benches);
