use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use std::hint::black_box;

use qdos_core::casci::{solve_casci, HamiltonianRows, SolverOptions};
use qdos_core::cc::{ccsd_solve, triples_correction, CcOptions, SpinOrbitalSystem};
use qdos_core::driver::{run_workflow, RunConfig};
use qdos_core::fock_space::{build_active_hamiltonian, ActiveSpacePartition, CasSpace, Determinant};
use qdos_core::model_io::{canonical_orbitals, hubbard_chain, IntegralSet, RhfOptions};
use qdos_core::mrmp::{standard_mrmp2, H0Density, ZerothOrderOperator};
use qdos_core::Execution;

const MODES: [(&str, Execution); 2] = [("sequential", Execution::Sequential), ("parallel", Execution::Parallel)];

fn chain(n: usize, u: f64) -> IntegralSet {
    canonical_orbitals(&hubbard_chain(n, 1.0, u, false).unwrap(), &RhfOptions::default()).unwrap().0
}

fn hamiltonian_kernels(c: &mut Criterion) {
    let ints = chain(8, 4.0);
    let part = ActiveSpacePartition::full_space(8, 8).unwrap();
    let h = build_active_hamiltonian(&ints, &part).unwrap();
    let space = CasSpace::new(8, 4, 4).unwrap();
    let rows = HamiltonianRows::new(&h, space.clone());
    let v: Vec<f64> = (0..space.len()).map(|i| ((i * 37 % 101) as f64 - 50.0) / 50.0).collect();

    let mut g = c.benchmark_group("sigma_8x8");
    g.sample_size(10);
    for (name, exec) in MODES {
        g.bench_with_input(BenchmarkId::from_parameter(name), &exec, |b, &exec| {
            b.iter(|| black_box(rows.sigma(&v, exec)))
        });
    }
    g.finish();

    let small = chain(6, 4.0);
    let h6 = build_active_hamiltonian(&small, &ActiveSpacePartition::full_space(6, 6).unwrap()).unwrap();
    let rows6 = HamiltonianRows::new(&h6, CasSpace::new(6, 3, 3).unwrap());
    let mut g = c.benchmark_group("dense_build_6x6");
    for (name, exec) in MODES {
        g.bench_with_input(BenchmarkId::from_parameter(name), &exec, |b, &exec| {
            b.iter(|| black_box(rows6.dense(exec)))
        });
    }
    g.finish();
}

fn correction_kernels(c: &mut Criterion) {
    let ints = chain(8, 3.0);
    let rcas = ActiveSpacePartition::fermi_window(&ints, 6, 6).unwrap();
    let h = build_active_hamiltonian(&ints, &rcas).unwrap();
    let psi = solve_casci(&h, 3, 3, &SolverOptions::default()).unwrap();
    let h0 = ZerothOrderOperator::for_state(&ints, &psi, H0Density::CappDensity).unwrap();

    let mut g = c.benchmark_group("mrmp2_8_sites_cas66");
    g.sample_size(10);
    for (name, exec) in MODES {
        g.bench_with_input(BenchmarkId::from_parameter(name), &exec, |b, &exec| {
            b.iter(|| black_box(standard_mrmp2(&psi, &rcas, &ints, &h0, exec).unwrap()))
        });
    }
    g.finish();

    let sys = SpinOrbitalSystem::new(&ints, &Determinant::aufbau(4, 4)).unwrap();
    let (t, _, _) = ccsd_solve(&sys, None, &CcOptions::default()).unwrap();
    let mut g = c.benchmark_group("triples_8_sites");
    g.sample_size(10);
    for (name, exec) in MODES {
        g.bench_with_input(BenchmarkId::from_parameter(name), &exec, |b, &exec| {
            b.iter(|| black_box(triples_correction(&sys, &t, exec).unwrap()))
        });
    }
    g.finish();
}

fn workflow(c: &mut Criterion) {
    let base = RunConfig::from_toml(
        r#"
methods = ["rcasci", "qdos", "qsci", "subspace-mrmp2", "subspace-tccsd"]
[input]
kind = "hubbard"
sites = 6
u = [1.0, 2.0, 3.0, 4.0, 5.0, 6.0, 7.0, 8.0]
[rcas]
n_active = 4
n_active_electrons = 4
[scas]
n_active = 2
n_active_electrons = 2
"#,
    )
    .unwrap();
    let mut g = c.benchmark_group("workflow_8_geometries");
    g.sample_size(10);
    for (name, exec) in MODES {
        let mut cfg = base.clone();
        cfg.solver.execution = exec;
        cfg.cc.execution = exec;
        g.bench_function(name, |b| b.iter(|| black_box(run_workflow(&cfg).unwrap())));
    }
    g.finish();
}

criterion_group!(benches, hamiltonian_kernels, correction_kernels, workflow);
criterion_main!(benches);
