use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use std::hint::black_box;
use twfilm::bvp::{picard_solve, BvpConfig};
use twfilm::series::compute_g;
use twfilm::shoot::shoot_b;
use twfilm::ShootConfig;
use twfilm_bench::cases;

fn series(c: &mut Criterion) {
    let mut g = c.benchmark_group("compute_g");
    for (name, p) in cases() {
        for deg in [8, 12] {
            g.bench_with_input(BenchmarkId::new(name, deg), &deg, |b, &d| b.iter(|| compute_g::<f64>(black_box(&p), d).unwrap()));
        }
    }
    g.finish();
}

fn shooting(c: &mut Criterion) {
    let mut g = c.benchmark_group("shoot_b");
    g.sample_size(10);
    let cfg = ShootConfig { h_max: 1e5, ..Default::default() };
    for (name, p) in cases() {
        g.bench_function(name, |b| b.iter(|| shoot_b(black_box(&p), &cfg).unwrap().b_cg));
    }
    g.finish();
}

fn picard(c: &mut Criterion) {
    let mut g = c.benchmark_group("picard_solve");
    g.sample_size(10);
    for (name, p) in cases() {
        for size in [1024, 4096] {
            let cfg = BvpConfig { grid_size: size, ..Default::default() };
            g.bench_with_input(BenchmarkId::new(name, size), &cfg, |b, cfg| b.iter(|| picard_solve(black_box(&p), cfg).unwrap().iterations));
        }
    }
    g.finish();
}

criterion_group!(benches, series, shooting, picard);
criterion_main!(benches);
