use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use gowerslab_core::fourier::box_slice_spectrum;
use gowerslab_core::gowers::{uk_power_streaming, MemoryBudget};
use gowerslab_core::grid_measure::{build_cantor, build_random_salem, mollify};
use gowerslab_core::interp::Interpolation;
use gowerslab_core::maximal::restricted_maximal;
use gowerslab_core::{GridFunction, MollifierFamily, TorusGrid};
use rayon::{ThreadPool, ThreadPoolBuilder};
use std::hint::black_box;

fn pools() -> Vec<(&'static str, ThreadPool)> {
    vec![
        ("one_thread", ThreadPoolBuilder::new().num_threads(1).build().unwrap()),
        ("default", ThreadPoolBuilder::new().build().unwrap()),
    ]
}

fn noise(grid: TorusGrid) -> GridFunction {
    GridFunction::from_fn(grid, |x| {
        x.iter()
            .enumerate()
            .map(|(a, v)| (7.0 * v + a as f64).sin() + (31.0 * v).cos())
            .sum()
    })
}

fn mollifier(c: &mut Criterion) {
    let mut group = c.benchmark_group("mollify");
    let fam = MollifierFamily::bump();
    let cases = [
        ("d1_n4096", build_cantor(TorusGrid::line(4096).unwrap(), 1.0 / 3.0, 7).unwrap()),
        ("d2_n256", build_random_salem(TorusGrid::new(2, 256).unwrap(), 5, 4, 4, 1).unwrap()),
    ];
    for (name, pool) in pools() {
        for (case, mu) in &cases {
            group.bench_with_input(BenchmarkId::new(name, case), mu, |b, mu| {
                b.iter(|| pool.install(|| mollify(black_box(mu), 6, &fam).unwrap()))
            });
        }
    }
    group.finish();
}

fn gowers(c: &mut Criterion) {
    let mut group = c.benchmark_group("uk_streaming");
    let f1 = noise(TorusGrid::line(256).unwrap());
    let f2 = noise(TorusGrid::new(2, 16).unwrap());
    for (name, pool) in pools() {
        group.bench_function(BenchmarkId::new(name, "d1_n256_k3"), |b| {
            b.iter(|| pool.install(|| uk_power_streaming(black_box(&f1), 3).unwrap()))
        });
        group.bench_function(BenchmarkId::new(name, "d2_n16_k3"), |b| {
            b.iter(|| pool.install(|| uk_power_streaming(black_box(&f2), 3).unwrap()))
        });
    }
    group.finish();
}

fn slice(c: &mut Criterion) {
    let mut group = c.benchmark_group("box_slice_spectrum");
    let f = noise(TorusGrid::line(128).unwrap());
    for (name, pool) in pools() {
        group.bench_function(BenchmarkId::new(name, "d1_n128_j2"), |b| {
            b.iter(|| pool.install(|| box_slice_spectrum(black_box(&f), 2, MemoryBudget::default()).unwrap()))
        });
    }
    group.finish();
}

fn maximal(c: &mut Criterion) {
    let mut group = c.benchmark_group("restricted_maximal");
    group.sample_size(20);
    let g = TorusGrid::line(1024).unwrap();
    let mu_n = mollify(&build_cantor(g, 1.0 / 3.0, 6).unwrap(), 5, &MollifierFamily::bump()).unwrap();
    let f = noise(g);
    for (name, pool) in pools() {
        group.bench_function(BenchmarkId::new(name, "d1_n1024_t16"), |b| {
            b.iter(|| {
                pool.install(|| restricted_maximal(black_box(&f), &mu_n, 16, Interpolation::Multilinear).unwrap())
            })
        });
    }
    group.finish();
}

criterion_group!(benches, mollifier, gowers, slice, maximal);
criterion_main!(benches);
