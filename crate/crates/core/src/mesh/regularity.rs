use super::{cross3, dist, polygon_diameter, Point, StaggeredMesh};

/// Threshold used when callers do not configure one.
pub const DEFAULT_RHO: f64 = 0.1;

/// Shape-regularity measures of a mesh.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RegularityReport {
    /// min over cells of (shortest side / cell diameter).
    pub rho_edge: f64,
    /// min over cells of (radius of the largest ball around the center that
    /// stays inside the cell's kernel / cell diameter).
    pub rho_star: f64,
    /// min over triangles of inradius / diameter; informational.
    pub triangle_quality: f64,
    pub threshold: f64,
    pub pass: bool,
}

/// Measures edge-length and star-shapedness ratios against `rho`.
///
/// A ball centered at a cell's center lies in the kernel exactly when its
/// radius does not exceed the distance from the center to every side's
/// supporting line, so `rho_star` is computed from those distances.
pub fn validate_regularity(mesh: &StaggeredMesh, rho: f64) -> RegularityReport {
    let mut rho_edge = f64::INFINITY;
    let mut rho_star = f64::INFINITY;
    for cell in &mesh.cells {
        let pts: Vec<Point> = cell.vertex_ids.iter().map(|&v| mesh.point(v)).collect();
        let diam = polygon_diameter(&pts);
        let k = pts.len();
        for i in 0..k {
            let (a, b) = (pts[i], pts[(i + 1) % k]);
            let len = dist(a, b);
            rho_edge = rho_edge.min(len / diam);
            // Signed distance: negative when the center is on the wrong side.
            let d = if len > 0.0 { cross3(a, b, cell.center) / len } else { 0.0 };
            rho_star = rho_star.min(d / diam);
        }
    }
    let mut triangle_quality = f64::INFINITY;
    for t in 0..mesh.triangles.len() {
        let [a, b, c] = mesh.triangle_points(t);
        let area = 0.5 * cross3(a, b, c);
        let semi = 0.5 * (dist(a, b) + dist(b, c) + dist(c, a));
        triangle_quality = triangle_quality.min(area / semi / mesh.triangles[t].diameter);
    }
    RegularityReport { rho_edge, rho_star, triangle_quality, threshold: rho, pass: rho_edge >= rho && rho_star >= rho }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mesh::{build_polygonal_mesh, build_square_mesh, CellSpec, Rect};

    #[test]
    fn uniform_square_mesh_ratios() {
        let m = build_square_mesh(4, Rect::new(-0.5, 0.5, -0.5, 0.5)).unwrap();
        let r = validate_regularity(&m, 0.3);
        assert!((r.rho_edge - 0.5f64.sqrt()).abs() < 1e-12);
        // ball of radius s/2 in a square of diameter s*sqrt(2)
        assert!((r.rho_star - 0.5 / 2f64.sqrt()).abs() < 1e-12);
        assert!(r.pass);
        assert!(!validate_regularity(&m, 0.8).pass);
    }

    #[test]
    fn collapsed_edge_fails() {
        let eps = 1e-12;
        let pts = [[0.0, 0.0], [1.0, 0.0], [1.0, 1.0], [eps, 1.0], [0.0, 1.0]];
        let m = build_polygonal_mesh(&[CellSpec::new(vec![0, 1, 2, 3, 4])], &pts).unwrap();
        let r = validate_regularity(&m, 0.3);
        assert!(r.rho_edge < 1e-11);
        assert!(!r.pass);
    }
}
