use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use sch_core::parallel::{worker_count, Execution};
use sch_core::sde::{run_records, InitialSpec, SigmaSpec, SimConfig};

fn config(n_paths: usize) -> SimConfig {
    let mut c = SimConfig::new(64, 0.05, 1e-3, 0.05, SigmaSpec::Sin(1), InitialSpec::sine());
    c.n_paths = n_paths;
    c.record_every = 10;
    c
}

fn ensemble(c: &mut Criterion) {
    eprintln!("workers: {}", worker_count());
    let mut group = c.benchmark_group("ensemble");
    group.sample_size(10);
    for paths in [8usize, 32] {
        let cfg = config(paths);
        for exec in [Execution::Sequential, Execution::Parallel] {
            let name = if exec == Execution::Sequential { "sequential" } else { "parallel" };
            group.bench_with_input(BenchmarkId::new(name, paths), &cfg, |b, cfg| {
                b.iter(|| run_records(cfg, exec).unwrap())
            });
        }
    }
    group.finish();
}

criterion_group!(benches, ensemble);
criterion_main!(benches);
