use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use hyperfa::mghfa::{e_step, EStepOptions};
use hyperfa_bench::fitted_gh;

fn e_step_by_dimension(c: &mut Criterion) {
    let mut group = c.benchmark_group("e_step");
    group.sample_size(20);
    for p in [10, 100] {
        let (data, model) = fitted_gh(p, 3, 2);
        group.bench_with_input(BenchmarkId::from_parameter(p), &p, |b, _| {
            b.iter(|| e_step(&data, &model, None, EStepOptions::ALL).unwrap().loglik)
        });
    }
    group.finish();
}

criterion_group!(benches, e_step_by_dimension);
criterion_main!(benches);
