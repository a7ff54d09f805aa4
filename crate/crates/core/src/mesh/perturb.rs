use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::{validate_regularity, CellSpec, StaggeredMesh};
use crate::error::{Error, Result};

/// Displacement amplitude, as a fraction of `h`, used for distorted grids.
pub const DEFAULT_PERTURBATION: f64 = 0.2;

const MAX_ATTEMPTS: usize = 8;
const SHRINK: f64 = 0.75;

/// Result of [`perturb_mesh`].
#[derive(Debug, Clone)]
pub struct Perturbation {
    pub mesh: StaggeredMesh,
    /// Amplitude actually applied; smaller than requested if regularity
    /// forced a retry.
    pub delta: f64,
    pub attempts: usize,
}

/// Moves every interior primal vertex by a uniform random offset in
/// `[-delta*h, delta*h]²` and re-centers the cells at their centroids.
///
/// If the result violates the regularity threshold `rho`, the draw is
/// repeated with a smaller amplitude, up to a fixed number of attempts.
/// A zero amplitude returns the input unchanged.
pub fn perturb_mesh(mesh: &StaggeredMesh, delta: f64, seed: u64, rho: f64) -> Result<Perturbation> {
    if !(0.0..0.5).contains(&delta) {
        return Err(Error::InvalidArgument(format!("perturbation {delta} outside [0, 0.5)")));
    }
    if delta == 0.0 {
        return Ok(Perturbation { mesh: mesh.clone(), delta, attempts: 0 });
    }
    let on_boundary = mesh.boundary_vertices();
    let base = mesh.primal_points();
    let cells: Vec<CellSpec> = mesh.cells.iter().map(|c| CellSpec::new(c.vertex_ids.clone())).collect();
    let mut amplitude = delta;
    for attempt in 0..MAX_ATTEMPTS {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(attempt as u64);
        let step = amplitude * mesh.h;
        let points: Vec<_> = base
            .iter()
            .zip(&on_boundary)
            .map(|(p, &fixed)| {
                // Draw for every vertex so the sequence does not depend on
                // which vertices happen to be interior.
                let dx: f64 = rng.random_range(-1.0..=1.0);
                let dy: f64 = rng.random_range(-1.0..=1.0);
                if fixed {
                    *p
                } else {
                    [p[0] + step * dx, p[1] + step * dy]
                }
            })
            .collect();
        if let Ok(m) = StaggeredMesh::from_primal(&points, &cells) {
            if validate_regularity(&m, rho).pass {
                return Ok(Perturbation { mesh: m, delta: amplitude, attempts: attempt + 1 });
            }
        }
        amplitude *= SHRINK;
    }
    Err(Error::RegularityNotMet { attempts: MAX_ATTEMPTS })
}
