//! Staggered discontinuous Galerkin discretization of the Helmholtz equation
//! `-Δu - κ²u = f` with the impedance condition `∇u·n + iκu = g`.

pub mod analytic;
pub mod assembly;
pub mod error;
pub mod mesh;
pub mod polyquad;
pub mod solver;
pub mod spaces;
pub mod study;
pub mod verify;

pub use error::{Error, Result};

/// Complex scalar used throughout.
pub type C64 = num_complex::Complex64;
