use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use lovasz_bench::random_instance;

fn resample(c: &mut Criterion) {
    let mut group = c.benchmark_group("resample");
    for vars in [1_000usize, 10_000] {
        // sparse enough for resampling to converge quickly
        let inst = random_instance(7, vars, vars / 2, 8);
        let init = vec![None; vars];
        group.bench_with_input(BenchmarkId::new("moser_tardos", vars), &inst, |b, inst| {
            b.iter(|| inst.solve(1, u64::MAX, &init).unwrap())
        });
        group.bench_with_input(BenchmarkId::new("walk", vars), &inst, |b, inst| {
            b.iter(|| inst.walk(1, u64::MAX, &init).unwrap())
        });
    }
    // dense enough that plain resampling stalls; the walk still converges
    let vars = 2_000;
    let dense = random_instance(9, vars, 2 * vars, 5);
    let init = vec![None; vars];
    group.bench_function("walk_dense/2000", |b| {
        b.iter(|| dense.walk(1, 10_000_000, &init).unwrap())
    });
    group.finish();
}

criterion_group!(benches, resample);
criterion_main!(benches);
