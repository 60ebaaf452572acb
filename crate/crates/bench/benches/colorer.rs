use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use lovasz_bench::{comp_stream, set_stream};
use lovasz_core::{color_prefix, validate_sparsity};

fn colorer(c: &mut Criterion) {
    let mut group = c.benchmark_group("color_prefix");
    group.sample_size(10);
    for horizon in [1usize << 12, 1 << 14] {
        group.bench_with_input(BenchmarkId::new("sets", horizon), &horizon, |b, &h| {
            b.iter(|| color_prefix(&set_stream(3, 2048), h, 3).unwrap())
        });
    }
    group.bench_function("comp_translates/4096", |b| {
        b.iter(|| color_prefix(&comp_stream(5, 20, 4096), 4096, 5).unwrap())
    });
    group.finish();

    let mut group = c.benchmark_group("validate_sparsity");
    group.sample_size(10);
    group.bench_function("sets/16384", |b| {
        b.iter(|| validate_sparsity(&set_stream(3, 2048), 1 << 14).unwrap())
    });
    group.bench_function("comp_translates/4096", |b| {
        b.iter(|| validate_sparsity(&comp_stream(5, 20, 4096), 4096).unwrap())
    });
    group.finish();
}

criterion_group!(benches, colorer);
criterion_main!(benches);
