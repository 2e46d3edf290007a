//! Parallel-vs-sequential throughput on the sweep workloads, plus a single
//! block diagonalization to track eigensolver performance. Build with
//! `--no-default-features` to measure the sequential-only configuration.

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};

use schmid_lab::bare_junction::{nu_grid, solve_bloch};
use schmid_lab::circuit_modes::{decompose_modes, LineSpec};
use schmid_lab::fock_basis::generate;
use schmid_lab::lanczos::{lowest_eigenpairs, DEFAULT_TOL};
use schmid_lab::par::{maybe_par_map, seq_map};
use schmid_lab::renormalization::log_grid;
use schmid_lab::spectrum::{assemble, solve_block, SolverConfig};

fn mode_decompositions(c: &mut Criterion) {
    let jobs: Vec<LineSpec> = log_grid(0.05, 2.0, 64)
        .into_iter()
        .map(|z| LineSpec::new(0.5, 2.0, 32, z).unwrap())
        .collect();
    let mut group = c.benchmark_group("mode_decompositions");
    group.bench_with_input(BenchmarkId::new("seq", jobs.len()), &jobs, |b, jobs| {
        b.iter(|| seq_map(jobs, |spec| decompose_modes(spec).unwrap()));
    });
    group.bench_with_input(BenchmarkId::new("par", jobs.len()), &jobs, |b, jobs| {
        b.iter(|| maybe_par_map(jobs, |spec| decompose_modes(spec).unwrap()));
    });
    group.finish();
}

fn junction_blocks(c: &mut Criterion) {
    let grid = nu_grid(51);
    let mut group = c.benchmark_group("junction_blocks");
    group.bench_with_input(BenchmarkId::new("seq", grid.len()), &grid, |b, grid| {
        b.iter(|| seq_map(grid, |&nu| solve_bloch(0.5, nu, 5, 30).unwrap()));
    });
    group.bench_with_input(BenchmarkId::new("par", grid.len()), &grid, |b, grid| {
        b.iter(|| maybe_par_map(grid, |&nu| solve_bloch(0.5, nu, 5, 30).unwrap()));
    });
    group.finish();
}

fn small_band_sweep(c: &mut Criterion) {
    let cfg = SolverConfig {
        e_cut: 8.0,
        n_bands: 3,
        k: 6,
        ..Default::default()
    };
    let jobs: Vec<(f64, f64)> = [0.5, 1.0, 1.5]
        .into_iter()
        .flat_map(|z| [0.0, 0.25, 0.5].into_iter().map(move |nu| (z, nu)))
        .collect();
    let mut group = c.benchmark_group("band_sweep_9pts");
    group.sample_size(10);
    group.bench_with_input(BenchmarkId::new("seq", jobs.len()), &jobs, |b, jobs| {
        b.iter(|| {
            seq_map(jobs, |&(z, nu)| {
                let spec = LineSpec::new(0.5, 2.0, 3, z).unwrap();
                solve_block(&spec, nu, &cfg).unwrap().eig.eigenvalues
            })
        });
    });
    group.bench_with_input(BenchmarkId::new("par", jobs.len()), &jobs, |b, jobs| {
        b.iter(|| {
            maybe_par_map(jobs, |&(z, nu)| {
                let spec = LineSpec::new(0.5, 2.0, 3, z).unwrap();
                solve_block(&spec, nu, &cfg).unwrap().eig.eigenvalues
            })
        });
    });
    group.finish();
}

fn block_diagonalization(c: &mut Criterion) {
    let spec = LineSpec::new(0.5, 2.0, 4, 1.0).unwrap();
    let md = decompose_modes(&spec).unwrap();
    let block = solve_bloch(spec.ej, 0.0, 4, 30).unwrap();
    let basis = generate(&md.omega, 9.0, 4).unwrap();
    let h = assemble(&block, &md, &basis).unwrap();
    let mut group = c.benchmark_group("block_diagonalization");
    group.sample_size(10);
    group.bench_function(BenchmarkId::new("lowest_12", h.dim), |b| {
        b.iter(|| lowest_eigenpairs(&h, 12, DEFAULT_TOL).unwrap().eigenvalues);
    });
    group.finish();
}

criterion_group!(
    benches,
    mode_decompositions,
    junction_blocks,
    small_band_sweep,
    block_diagonalization
);
criterion_main!(benches);
