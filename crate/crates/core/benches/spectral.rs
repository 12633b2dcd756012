use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use sch_core::grid::{dealias, derivative};
use sch_core::kernel::{helmholtz_solve, nonlocal_pressure, KernelTable};
use sch_core::{Field, Grid};

fn spectral_ops(c: &mut Criterion) {
    let mut group = c.benchmark_group("spectral");
    for n in [256usize, 1024, 4096] {
        let grid = Grid::new(n).unwrap();
        let u = Field::from_fn(grid, |x| x.sin() + 0.3 * (5.0 * x).cos());
        let q = derivative(&u, 1).unwrap();
        group.bench_with_input(BenchmarkId::new("derivative", n), &u, |b, u| {
            b.iter(|| derivative(u, 1).unwrap())
        });
        group.bench_with_input(BenchmarkId::new("dealias", n), &u, |b, u| b.iter(|| dealias(u)));
        group.bench_with_input(BenchmarkId::new("helmholtz", n), &u, |b, u| {
            b.iter(|| helmholtz_solve(u).unwrap())
        });
        group.bench_with_input(BenchmarkId::new("pressure", n), &(&u, &q), |b, (u, q)| {
            b.iter(|| nonlocal_pressure(u, q).unwrap())
        });
    }
    group.finish();
}

// O(n²) physical-space convolution against the FFT path.
fn kernel_paths(c: &mut Criterion) {
    let mut group = c.benchmark_group("kernel");
    let grid = Grid::new(512).unwrap();
    let f = Field::from_fn(grid, |x| (2.0 * x).cos());
    let table = KernelTable::new(grid);
    group.bench_function("direct", |b| b.iter(|| table.convolve_direct(&f).unwrap()));
    group.bench_function("fft", |b| b.iter(|| helmholtz_solve(&f).unwrap()));
    group.finish();
}

criterion_group!(benches, spectral_ops, kernel_paths);
criterion_main!(benches);
