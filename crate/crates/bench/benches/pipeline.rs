use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use sdg_bench::{loads, Fixture};
use sdg_core::assembly::assemble_operators;
use sdg_core::solver::{solve_system, SolverKind};
use sdg_core::spaces::{build_scalar_space, build_vector_space};

const KAPPA: f64 = 10.0;
const CASES: [(usize, usize); 4] = [(1, 8), (1, 16), (2, 8), (2, 16)];

fn label(fx: &Fixture, n: usize) -> String {
    format!("m{}_n{}_dofs{}", fx.m, n, fx.dofs())
}

fn assembly(c: &mut Criterion) {
    let mut group = c.benchmark_group("assembly");
    group.sample_size(10);
    for (m, n) in CASES {
        let fx = Fixture::example1(KAPPA, m, n).unwrap();
        group.bench_function(BenchmarkId::new("spaces", label(&fx, n)), |b| {
            b.iter(|| (build_scalar_space(&fx.mesh, m).unwrap(), build_vector_space(&fx.mesh, m).unwrap()))
        });
        group.bench_function(BenchmarkId::new("operators", label(&fx, n)), |b| {
            b.iter(|| assemble_operators(&fx.mesh, &fx.scalar, &fx.vector).unwrap())
        });
        group.bench_function(BenchmarkId::new("loads", label(&fx, n)), |b| {
            b.iter(|| loads(&fx.mesh, &fx.scalar, &fx.solution, m).unwrap())
        });
    }
    group.finish();
}

fn solves(c: &mut Criterion) {
    let mut group = c.benchmark_group("solve");
    group.sample_size(10);
    for (m, n) in CASES {
        let fx = Fixture::example1(KAPPA, m, n).unwrap();
        for kind in [SolverKind::Direct, SolverKind::Condensed] {
            group.bench_function(BenchmarkId::new(kind.to_string(), label(&fx, n)), |b| {
                b.iter(|| solve_system(&fx.ops, &fx.system, kind).unwrap())
            });
        }
    }
    group.finish();
}

criterion_group!(benches, assembly, solves);
criterion_main!(benches);
