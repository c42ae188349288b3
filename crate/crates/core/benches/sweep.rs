use criterion::{criterion_group, criterion_main, Criterion};
use polylink::sweep::{run_parallel, run_sequential, sweep_cells};

fn bench(c: &mut Criterion) {
    let cells = sweep_cells(3);
    let mut g = c.benchmark_group("sweep");
    g.sample_size(10);
    g.bench_function("sequential", |b| b.iter(|| run_sequential(&cells, 4)));
    g.bench_function("parallel", |b| b.iter(|| run_parallel(&cells, 4)));
    g.finish();
}

criterion_group!(benches, bench);
criterion_main!(benches);
