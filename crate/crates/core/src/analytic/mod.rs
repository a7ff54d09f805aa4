//! Bessel functions and manufactured solutions.

pub mod bessel;
pub mod solutions;

pub use bessel::{bessel_j, bessel_j_prime, BesselEval, SERIES_LIMIT};
pub use solutions::{example1, example2, ManufacturedSolution};
