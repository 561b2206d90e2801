use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use jsdknn_bench::timing_fixture;
use jsdknn_core::{impute, impute_baseline_aitchison, Aggregation, Alpha, ImputerConfig};

fn knn(c: &mut Criterion) {
    let mut group = c.benchmark_group("impute");
    group.sample_size(10);
    for (n, d) in [(500, 10), (2000, 10), (2000, 20)] {
        let table = timing_fixture(n, d, 7);
        let id = format!("{n}x{d}");
        let config = ImputerConfig::new(5, Alpha::ONE).unwrap();
        group.bench_with_input(BenchmarkId::new("jsd", &id), &table, |b, t| b.iter(|| impute(t, &config)));
        group.bench_with_input(BenchmarkId::new("aitchison", &id), &table, |b, t| {
            b.iter(|| impute_baseline_aitchison(t, 5, Aggregation::Mean))
        });
    }
    group.finish();
}

criterion_group!(benches, knn);
criterion_main!(benches);
