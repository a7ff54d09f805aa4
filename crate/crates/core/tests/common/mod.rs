#![allow(dead_code)]

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use sdg_core::mesh::{build_polygonal_mesh, build_square_mesh, CellSpec, Point, Rect, StaggeredMesh};
use sdg_core::study::GridSpec;
use sdg_core::C64;

pub fn unit_square() -> Rect {
    Rect::new(-0.5, 0.5, -0.5, 0.5)
}

pub fn c(re: f64, im: f64) -> C64 {
    C64::new(re, im)
}

/// Two rectangles, the left one with a hanging node on the shared edge.
pub fn hanging_node_mesh() -> StaggeredMesh {
    let pts = [[0.0, 0.0], [1.0, 0.0], [2.0, 0.0], [2.0, 1.0], [1.0, 1.0], [0.0, 1.0], [1.0, 0.5]];
    let cells = [CellSpec::new(vec![0, 1, 6, 4, 5]), CellSpec::new(vec![1, 2, 3, 4, 6])];
    build_polygonal_mesh(&cells, &pts).unwrap()
}

/// Named meshes most structural checks run on.
pub fn fixtures() -> Vec<(&'static str, StaggeredMesh)> {
    vec![
        ("square-4", build_square_mesh(4, unit_square()).unwrap()),
        ("perturbed-4", GridSpec::Perturbed { delta: 0.2, seed: 7 }.build(unit_square(), 4).unwrap()),
        ("hanging-node", hanging_node_mesh()),
    ]
}

pub fn centroid(mesh: &StaggeredMesh, t: usize) -> Point {
    let [a, b, c] = mesh.triangle_points(t);
    [(a[0] + b[0] + c[0]) / 3.0, (a[1] + b[1] + c[1]) / 3.0]
}

pub fn random_complex(rng: &mut ChaCha8Rng, n: usize) -> Vec<C64> {
    (0..n).map(|_| c(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0))).collect()
}

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Hermitian inner product `aᴴ b`.
pub fn dot(a: &[C64], b: &[C64]) -> C64 {
    a.iter().zip(b).map(|(x, y)| x.conj() * y).sum()
}

pub fn max_abs(v: &[C64]) -> f64 {
    v.iter().map(|x| x.norm()).fold(0.0, f64::max)
}
