use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use std::hint::black_box;

use idsim_bench::workload;
use idsim_core::{classify_raw, cluster, reduce_training, ClusterConfig, DuplicatePolicy, Idsim};

fn pair_similarity(c: &mut Criterion) {
    let ds = workload(2);
    let m = Idsim::default();
    let (a, b) = (ds.process(0).values(), ds.process(1).values());
    c.bench_function("pair_similarity/50", |bench| {
        bench.iter(|| m.similarity(black_box(a), black_box(b)).unwrap())
    });
}

fn clustering(c: &mut Criterion) {
    let mut group = c.benchmark_group("cluster_k2");
    group.sample_size(10);
    for n in [1_000, 5_000] {
        let ds = workload(n);
        group.bench_with_input(BenchmarkId::from_parameter(n), &ds, |bench, ds| {
            bench.iter(|| cluster(ds, &ClusterConfig::default()).unwrap())
        });
    }
    group.finish();
}

fn reduction(c: &mut Criterion) {
    let mut group = c.benchmark_group("reduce_training");
    group.sample_size(10);
    let ds = workload(2_000);
    let model = cluster(&ds, &ClusterConfig::default()).unwrap();
    group.bench_function("2000", |bench| {
        bench.iter(|| reduce_training(&model, &ds, DuplicatePolicy::Skip).unwrap())
    });
    group.finish();
}

fn classification(c: &mut Criterion) {
    let ds = workload(5_000);
    let probe = workload(1);
    let m = Idsim::default();
    c.bench_function("classify_raw/5000", |bench| {
        bench.iter(|| classify_raw(black_box(probe.process(0)), &ds, &m).unwrap())
    });
}

criterion_group!(benches, pair_similarity, clustering, reduction, classification);
criterion_main!(benches);
