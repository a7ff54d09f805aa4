//! Shared fixtures for the benchmarks.

use sdg_core::analytic::{example1, ManufacturedSolution};
use sdg_core::assembly::{
    assemble_loads, assemble_operators, build_helmholtz_system, AssembledOperators, ComplexSparseSystem,
};
use sdg_core::mesh::{build_square_mesh, StaggeredMesh};
use sdg_core::polyquad::Integrator;
use sdg_core::spaces::{build_scalar_space, build_vector_space, DofMap};
use sdg_core::{Result, C64};

/// Everything needed to time one stage of the pipeline in isolation.
pub struct Fixture {
    pub solution: ManufacturedSolution,
    pub mesh: StaggeredMesh,
    pub scalar: DofMap,
    pub vector: DofMap,
    pub ops: AssembledOperators,
    pub system: ComplexSparseSystem,
    pub m: usize,
}

impl Fixture {
    /// The smooth radial problem on an `n × n` square grid.
    pub fn example1(kappa: f64, m: usize, n: usize) -> Result<Self> {
        let solution = example1(kappa)?;
        let mesh = build_square_mesh(n, solution.domain)?;
        let scalar = build_scalar_space(&mesh, m)?;
        let vector = build_vector_space(&mesh, m)?;
        let ops = assemble_operators(&mesh, &scalar, &vector)?;
        let (f, g) = loads(&mesh, &scalar, &solution, m)?;
        let system = build_helmholtz_system(&ops, kappa, &f, &g)?;
        Ok(Fixture { solution, mesh, scalar, vector, ops, system, m })
    }

    pub fn dofs(&self) -> usize {
        self.scalar.dim + self.vector.dim
    }
}

/// Source and boundary load vectors with the default load quadrature.
pub fn loads(
    mesh: &StaggeredMesh,
    scalar: &DofMap,
    solution: &ManufacturedSolution,
    m: usize,
) -> Result<(Vec<C64>, Vec<C64>)> {
    let quad = Integrator::new(2 * m + 2, solution.kappa)?;
    assemble_loads(mesh, scalar, &quad, |p| solution.mixed_source(p), |p, nrm| solution.boundary_datum(p, nrm))
}
