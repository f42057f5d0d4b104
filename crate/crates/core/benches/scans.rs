//! Sequential vs parallel execution of the scan kernels.
//!
//! With `--no-default-features` both variants run the sequential path.

use std::hint::black_box;

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use num_complex::Complex64;

use qbc_core::deformation::{limit_study, Regime};
use qbc_core::folding::{evolve_series, gaussian_component, Folding, SpinorState};
use qbc_core::grids::Grid;
use qbc_core::numerics::{hermitian_eigenvalues_with, EigenOptions};
use qbc_core::operators::{build_circle_laplacian, PhysicalConstants};
use qbc_core::{ComplexVector, Execution};

const MODES: [(&str, Execution); 2] = [("sequential", Execution::Sequential), ("parallel", Execution::Parallel)];

fn epsilon_scan(c: &mut Criterion) {
    let mut group = c.benchmark_group("limit_study");
    group.sample_size(10);
    let eps: Vec<f64> = (0..16).map(|i| 0.2 * 0.8f64.powi(i)).collect();
    let consts = PhysicalConstants::default();
    for n in [2000, 8000] {
        let grid = Grid::interval(n).unwrap();
        for (name, exec) in MODES {
            group.bench_with_input(BenchmarkId::new(name, n), &grid, |b, g| {
                b.iter(|| limit_study(1.0, black_box(&eps), Regime::Robin, g, &consts, exec).unwrap())
            });
        }
    }
    group.finish();
}

fn time_series(c: &mut Criterion) {
    let mut group = c.benchmark_group("evolve_series");
    group.sample_size(10);
    let times: Vec<f64> = (0..64).map(|i| 0.02 * i as f64).collect();
    for m in [400, 4000] {
        let grid = Grid::truncated_line(m, 20.0).unwrap();
        let folding = Folding::new(&grid).unwrap();
        let phi = gaussian_component(&folding, 2.0, 0.3).unwrap();
        let half = ComplexVector::new(phi.as_array() * Complex64::new(0.5f64.sqrt(), 0.0)).unwrap();
        let start = SpinorState::new(half.clone(), half, folding.weights().to_vec()).unwrap();
        for (name, exec) in MODES {
            group.bench_with_input(BenchmarkId::new(name, m), &start, |b, s| {
                b.iter(|| evolve_series(s, black_box(&times), &folding, exec).unwrap())
            });
        }
    }
    group.finish();
}

fn dense_eigen(c: &mut Criterion) {
    let mut group = c.benchmark_group("hermitian_eigenvalues");
    group.sample_size(10);
    for n in [256, 512] {
        let op = build_circle_laplacian(&Grid::circle(n).unwrap(), &PhysicalConstants::default()).unwrap();
        for (name, exec) in MODES {
            let opts = EigenOptions { execution: exec, ..EigenOptions::default() };
            group.bench_with_input(BenchmarkId::new(name, n), &op, |b, op| {
                b.iter(|| hermitian_eigenvalues_with(black_box(op), &opts).unwrap())
            });
        }
    }
    group.finish();
}

criterion_group!(benches, epsilon_scan, time_series, dense_eigen);
criterion_main!(benches);
