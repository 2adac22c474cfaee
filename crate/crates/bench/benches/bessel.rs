use std::hint::black_box;

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use hyperfa::specfun::{dlogk_dnu, log_bessel_k, log_bessel_k_pair};

const ARGS: [f64; 5] = [0.05, 0.8, 3.0, 40.0, 600.0];

fn log_k(c: &mut Criterion) {
    let mut group = c.benchmark_group("log_bessel_k");
    for nu in [0.3, 4.5, 60.0, 450.0] {
        group.bench_with_input(BenchmarkId::from_parameter(nu), &nu, |b, &nu| {
            b.iter(|| ARGS.iter().map(|&x| log_bessel_k(black_box(nu), black_box(x)).unwrap()).sum::<f64>())
        });
    }
    group.finish();
}

fn pair_and_order_derivative(c: &mut Criterion) {
    c.bench_function("log_bessel_k_pair", |b| {
        b.iter(|| ARGS.iter().map(|&x| log_bessel_k_pair(black_box(-2.5), x).unwrap().1).sum::<f64>())
    });
    c.bench_function("dlogk_dnu", |b| {
        b.iter(|| ARGS.iter().map(|&x| dlogk_dnu(black_box(-2.5), x).unwrap()).sum::<f64>())
    });
}

criterion_group!(benches, log_k, pair_and_order_derivative);
criterion_main!(benches);
