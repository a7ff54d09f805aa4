use crate::error::{Error, Result};
use crate::mesh::Point;

/// Highest polynomial degree supported by [`tri_quadrature`].
pub const MAX_TRI_DEGREE: usize = 20;

/// Gauss–Legendre nodes and weights on `[-1, 1]`.
pub fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    assert!(n >= 1, "at least one node");
    let mut x = vec![0.0; n];
    let mut w = vec![0.0; n];
    let nf = n as f64;
    for i in 0..n.div_ceil(2) {
        let mut z = (std::f64::consts::PI * (i as f64 + 0.75) / (nf + 0.5)).cos();
        for _ in 0..100 {
            let (p, d) = legendre_with_derivative(n, z);
            let dz = p / d;
            z -= dz;
            if dz.abs() < 1e-16 {
                break;
            }
        }
        let dp = legendre_with_derivative(n, z).1;
        let wi = 2.0 / ((1.0 - z * z) * dp * dp);
        x[i] = -z;
        x[n - 1 - i] = z;
        w[i] = wi;
        w[n - 1 - i] = wi;
    }
    if n % 2 == 1 {
        x[n / 2] = 0.0;
    }
    (x, w)
}

/// `(P_n(z), P_n'(z))` by the three-term recurrence.
fn legendre_with_derivative(n: usize, z: f64) -> (f64, f64) {
    let (mut p0, mut p1) = (1.0, z);
    if n == 0 {
        return (1.0, 0.0);
    }
    for k in 2..=n {
        let kf = k as f64;
        let p2 = ((2.0 * kf - 1.0) * z * p1 - (kf - 1.0) * p0) / kf;
        p0 = p1;
        p1 = p2;
    }
    let d = n as f64 * (z * p1 - p0) / (z * z - 1.0);
    (p1, d)
}

/// Gauss–Legendre rule on `[0, 1]` with `n` nodes.
pub fn unit_interval_rule(n: usize) -> Vec<(f64, f64)> {
    let (x, w) = gauss_legendre(n);
    x.iter().zip(&w).map(|(&x, &w)| (0.5 * (x + 1.0), 0.5 * w)).collect()
}

/// Quadrature on the reference triangle with vertices `(0,0)`, `(1,0)`, `(0,1)`.
///
/// A point `(ξ, η)` maps to `a + ξ(b - a) + η(c - a)` on a physical triangle
/// `(a, b, c)`. Weights sum to the reference area `1/2`.
#[derive(Debug, Clone, PartialEq)]
pub struct QuadratureRule {
    pub points: Vec<[f64; 2]>,
    pub weights: Vec<f64>,
    pub exact_degree: usize,
}

impl QuadratureRule {
    pub fn len(&self) -> usize {
        self.weights.len()
    }

    pub fn is_empty(&self) -> bool {
        self.weights.is_empty()
    }

    /// Physical points and weights on triangle `tri` (weights sum to its area).
    pub fn map(&self, tri: &[Point; 3]) -> Vec<(Point, f64)> {
        let [a, b, c] = *tri;
        let (e1, e2) = ([b[0] - a[0], b[1] - a[1]], [c[0] - a[0], c[1] - a[1]]);
        let jac = (e1[0] * e2[1] - e1[1] * e2[0]).abs();
        self.points
            .iter()
            .zip(&self.weights)
            .map(|(p, &w)| {
                let x = [a[0] + p[0] * e1[0] + p[1] * e2[0], a[1] + p[0] * e1[1] + p[1] * e2[1]];
                (x, w * jac)
            })
            .collect()
    }

    /// Copies the rule onto the reference sub-triangle `sub`, scaling weights by its area.
    fn push_onto(&self, sub: &[Point; 3], out: &mut QuadratureRule) {
        for (x, w) in self.map(sub) {
            out.points.push(x);
            out.weights.push(w);
        }
    }
}

/// Collapsed Gauss rule exact for total degree `degree` on any triangle.
pub fn tri_quadrature(degree: usize) -> Result<QuadratureRule> {
    if !(1..=MAX_TRI_DEGREE).contains(&degree) {
        return Err(Error::InvalidArgument(format!(
            "triangle quadrature degree {degree} outside 1..={MAX_TRI_DEGREE}"
        )));
    }
    // ξ = s(1 - t), η = t with Jacobian (1 - t): the t-integrand gains one degree.
    let rs = unit_interval_rule((degree + 1).div_ceil(2));
    let rt = unit_interval_rule((degree + 2).div_ceil(2));
    let mut points = Vec::with_capacity(rs.len() * rt.len());
    let mut weights = Vec::with_capacity(rs.len() * rt.len());
    for &(t, wt) in &rt {
        for &(s, ws) in &rs {
            points.push([s * (1.0 - t), t]);
            weights.push(ws * wt * (1.0 - t));
        }
    }
    Ok(QuadratureRule { points, weights, exact_degree: degree })
}

const REFERENCE: [Point; 3] = [[0.0, 0.0], [1.0, 0.0], [0.0, 1.0]];

fn midpoint_split(t: &[Point; 3]) -> [[Point; 3]; 4] {
    let mid = |p: Point, q: Point| [0.5 * (p[0] + q[0]), 0.5 * (p[1] + q[1])];
    let (m01, m12, m20) = (mid(t[0], t[1]), mid(t[1], t[2]), mid(t[2], t[0]));
    [[t[0], m01, m20], [m01, t[1], m12], [m20, m12, t[2]], [m12, m20, m01]]
}

fn subdivide(level: usize) -> Vec<[Point; 3]> {
    let mut tris = vec![REFERENCE];
    for _ in 0..level {
        tris = tris.iter().flat_map(midpoint_split).collect();
    }
    tris
}

/// Applies `base` on each of the `4^level` congruent midpoint sub-triangles.
pub fn composite_tri_quadrature(base: &QuadratureRule, level: usize) -> QuadratureRule {
    if level == 0 {
        return base.clone();
    }
    let mut out = QuadratureRule {
        points: Vec::with_capacity(base.len() << (2 * level)),
        weights: Vec::with_capacity(base.len() << (2 * level)),
        exact_degree: base.exact_degree,
    };
    for sub in subdivide(level) {
        base.push_onto(&sub, &mut out);
    }
    out
}

/// Composite rule refined geometrically towards reference vertex `corner`.
///
/// Every sub-triangle away from the corner gets the `level` composite rule;
/// the corner piece is halved `grading` more times. Suited to integrands
/// with an algebraic singularity at that vertex.
pub fn graded_tri_quadrature(base: &QuadratureRule, level: usize, corner: usize, grading: usize) -> QuadratureRule {
    assert!(corner < 3, "corner must be 0, 1 or 2");
    let fine = composite_tri_quadrature(base, level);
    let mut out = QuadratureRule { points: Vec::new(), weights: Vec::new(), exact_degree: base.exact_degree };
    let mut tri = REFERENCE;
    // Rotate so the singular vertex comes first; `midpoint_split` keeps it at index 0 of piece 0.
    tri.rotate_left(corner);
    for _ in 0..grading {
        let pieces = midpoint_split(&tri);
        for piece in &pieces[1..] {
            fine.push_onto(&orient(piece), &mut out);
        }
        tri = pieces[0];
    }
    fine.push_onto(&orient(&tri), &mut out);
    out
}

/// Reorders to counter-clockwise so the mapped weights stay positive.
fn orient(t: &[Point; 3]) -> [Point; 3] {
    let area2 = (t[1][0] - t[0][0]) * (t[2][1] - t[0][1]) - (t[1][1] - t[0][1]) * (t[2][0] - t[0][0]);
    if area2 < 0.0 {
        [t[0], t[2], t[1]]
    } else {
        *t
    }
}

/// Gauss–Legendre rule on a segment, as `(t, weight)` pairs with `t ∈ [0, 1]`
/// and weights summing to 1.
#[derive(Debug, Clone, PartialEq)]
pub struct EdgeRule {
    pub nodes: Vec<(f64, f64)>,
    pub exact_degree: usize,
}

impl EdgeRule {
    pub fn new(degree: usize) -> Self {
        EdgeRule { nodes: unit_interval_rule(degree / 2 + 1), exact_degree: degree }
    }

    /// Repeats the rule on `2^level` equal pieces.
    pub fn composite(degree: usize, level: usize) -> Self {
        let base = unit_interval_rule(degree / 2 + 1);
        let k = 1usize << level;
        let h = 1.0 / k as f64;
        let nodes = (0..k).flat_map(|i| base.iter().map(move |&(t, w)| ((i as f64 + t) * h, w * h))).collect();
        EdgeRule { nodes, exact_degree: degree }
    }

    /// Like [`Self::composite`] but with pieces halving towards `t = 0`
    /// for `grading` extra steps.
    pub fn graded(degree: usize, level: usize, grading: usize) -> Self {
        let fine = Self::composite(degree, level);
        let mut nodes = Vec::new();
        let mut hi = 1.0;
        for _ in 0..grading {
            let lo = 0.5 * hi;
            nodes.extend(fine.nodes.iter().map(|&(t, w)| (lo + t * (hi - lo), w * (hi - lo))));
            hi = lo;
        }
        nodes.extend(fine.nodes.iter().map(|&(t, w)| (t * hi, w * hi)));
        EdgeRule { nodes, exact_degree: degree }
    }

    /// Reverses the parametrization, moving a graded end from `t = 0` to `t = 1`.
    /// Nodes too close to `t = 0` to survive the reflection are dropped so no
    /// node lands exactly on the endpoint.
    pub fn reversed(mut self) -> Self {
        self.nodes.retain(|n| 1.0 - n.0 < 1.0);
        for n in &mut self.nodes {
            n.0 = 1.0 - n.0;
        }
        self
    }
}
