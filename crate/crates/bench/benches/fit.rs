use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use minirocket::{fit, BiasVariant, DEFAULT_MAX_DILATIONS_PER_KERNEL, DEFAULT_NUM_FEATURES};
use minirocket_bench::workloads;

fn bench_fit(c: &mut Criterion) {
    let mut group = c.benchmark_group("fit");
    group.sample_size(10);
    for (data, _) in workloads().expect("workload") {
        let length = data.series_length();
        for (name, variant) in [
            ("default", BiasVariant::Default { seed: 0 }),
            ("deterministic", BiasVariant::Deterministic),
        ] {
            group.bench_with_input(BenchmarkId::new(name, length), &length, |b, _| {
                b.iter(|| fit(&data, DEFAULT_NUM_FEATURES, DEFAULT_MAX_DILATIONS_PER_KERNEL, variant).unwrap())
            });
        }
    }
    group.finish();
}

criterion_group!(benches, bench_fit);
criterion_main!(benches);
