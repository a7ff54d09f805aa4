//! Discrete operators and block systems.
//!
//! All bilinear forms are integrated triangle by triangle with rules exact
//! for their polynomial degree, then mapped to global DOFs through the local
//! shape matrices. Load vectors use the oscillation-resolving rules of an
//! [`Integrator`](crate::polyquad::Integrator).

mod operators;
mod sparse;
mod system;

pub use operators::{
    assemble_bh, assemble_bh_star, assemble_boundary_load, assemble_boundary_mass, assemble_loads, assemble_mass,
    assemble_operators, assemble_volume_load, cell_blocks, AssembledOperators,
};
pub use sparse::{CooBuilder, Scalar, SparseMatrix};
pub use system::{
    build_elliptic_projection_system, build_helmholtz_system, system_matrix, ComplexSparseSystem, ProjectionSign,
    SystemVariant,
};
