//! Parallel-versus-sequential throughput on the two data-parallel workloads:
//! Monte Carlo sampling (independent trials) and the spectral sweep (two
//! independent warm-start chains).
//!
//! With the default `parallel` feature the "sequential" series runs inside a
//! one-thread rayon pool, so one `cargo bench` produces both series. Built
//! with `--no-default-features`, only the sequential series exists.

use criterion::{criterion_group, criterion_main, Criterion};

use opval_core::oracle::{empirical_spectrum, BlockProfile};
use opval_core::solver::Method;
use opval_core::sweep::{sweep, SweepConfig};
use opval_core::EtaMap;

fn sample_workload() -> usize {
    let profile = BlockProfile::toeplitz3(60);
    let sample = empirical_spectrum(&profile, 8, 42, 20);
    sample.eigenvalues.len()
}

fn sweep_workload() -> usize {
    let mut config = SweepConfig::new(EtaMap::toeplitz3(), -3.2, 3.2, 0.1);
    config.im_offset = 1e-4;
    config.solver.method = Method::Hybrid;
    let curve = sweep(&config).expect("sweep");
    curve.rows.len()
}

#[cfg(feature = "parallel")]
fn run_single_threaded<T: Send>(f: impl Fn() -> T + Sync + Send) -> T {
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(1)
        .build()
        .expect("single-thread pool");
    pool.install(f)
}

fn bench_sample(c: &mut Criterion) {
    let mut group = c.benchmark_group("sample_toeplitz3");
    group.sample_size(10);
    #[cfg(feature = "parallel")]
    {
        group.bench_function("parallel", |b| b.iter(sample_workload));
        group.bench_function("sequential", |b| {
            b.iter(|| run_single_threaded(sample_workload))
        });
    }
    #[cfg(not(feature = "parallel"))]
    group.bench_function("sequential", |b| b.iter(sample_workload));
    group.finish();
}

fn bench_sweep(c: &mut Criterion) {
    let mut group = c.benchmark_group("sweep_toeplitz3");
    group.sample_size(10);
    #[cfg(feature = "parallel")]
    {
        group.bench_function("parallel", |b| b.iter(sweep_workload));
        group.bench_function("sequential", |b| {
            b.iter(|| run_single_threaded(sweep_workload))
        });
    }
    #[cfg(not(feature = "parallel"))]
    group.bench_function("sequential", |b| b.iter(sweep_workload));
    group.finish();
}

criterion_group!(benches, bench_sample, bench_sweep);
criterion_main!(benches);
