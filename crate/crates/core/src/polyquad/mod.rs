//! Polynomial bases on triangles and edges, and quadrature rules.

mod basis;
mod integrator;
mod quadrature;

pub use basis::{
    dim_p, eval_basis, legendre_values, project_onto, AffineMap, Basis, BasisValues, EdgeBasis, TriBasis, INSIDE_TOL,
};
pub use integrator::{Integrator, DEFAULT_GRADING};
pub use quadrature::{
    composite_tri_quadrature, gauss_legendre, graded_tri_quadrature, tri_quadrature, unit_interval_rule, EdgeRule,
    QuadratureRule, MAX_TRI_DEGREE,
};
