use nalgebra::{DMatrix, DVector};

use super::quadrature::tri_quadrature;
use crate::error::{Error, Result};
use crate::mesh::Point;

/// Tolerance, in barycentric coordinates, for a point to count as inside.
pub const INSIDE_TOL: f64 = 1e-12;

/// Affine map from the reference triangle `(0,0), (1,0), (0,1)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AffineMap {
    pub origin: Point,
    /// Columns are `b - a` and `c - a`.
    pub jacobian: [[f64; 2]; 2],
    pub inverse: [[f64; 2]; 2],
    pub det: f64,
}

impl AffineMap {
    pub fn new(tri: &[Point; 3]) -> Self {
        let [a, b, c] = *tri;
        let j = [[b[0] - a[0], c[0] - a[0]], [b[1] - a[1], c[1] - a[1]]];
        let det = j[0][0] * j[1][1] - j[0][1] * j[1][0];
        let inverse = [[j[1][1] / det, -j[0][1] / det], [-j[1][0] / det, j[0][0] / det]];
        AffineMap { origin: a, jacobian: j, inverse, det }
    }

    pub fn to_physical(&self, r: [f64; 2]) -> Point {
        let j = &self.jacobian;
        [self.origin[0] + j[0][0] * r[0] + j[0][1] * r[1], self.origin[1] + j[1][0] * r[0] + j[1][1] * r[1]]
    }

    pub fn to_reference(&self, p: Point) -> [f64; 2] {
        let d = [p[0] - self.origin[0], p[1] - self.origin[1]];
        let m = &self.inverse;
        [m[0][0] * d[0] + m[0][1] * d[1], m[1][0] * d[0] + m[1][1] * d[1]]
    }

    pub fn barycentric(&self, p: Point) -> [f64; 3] {
        let [s, t] = self.to_reference(p);
        [1.0 - s - t, s, t]
    }
}

/// Number of polynomials of total degree `<= m` in two variables.
pub const fn dim_p(m: usize) -> usize {
    (m + 1) * (m + 2) / 2
}

/// `(a, b)` exponent pairs in graded order: degree 0, then 1, ...
fn exponents(m: usize) -> Vec<(i32, i32)> {
    (0..=m as i32).flat_map(|d| (0..=d).map(move |b| (d - b, b))).collect()
}

/// Orthonormal basis of `P^m(τ)` on one physical triangle.
///
/// Built from scaled monomials `((x - c_x)/s)^a ((y - c_y)/s)^b` centered at
/// the centroid, orthonormalized in the mean inner product
/// `(1/|τ|) ∫_τ u v`. Because the ordering is graded, the first `dim_p(k)`
/// functions span `P^k(τ)` for every `k <= m`, and `φ_0 ≡ 1`.
#[derive(Debug, Clone, PartialEq)]
pub struct TriBasis {
    pub degree: usize,
    pub vertices: [Point; 3],
    pub map: AffineMap,
    pub area: f64,
    center: Point,
    scale: f64,
    exps: Vec<(i32, i32)>,
    /// Row `k` holds the monomial coefficients of `φ_k`; lower triangular.
    coef: Vec<f64>,
}

impl TriBasis {
    pub fn new(vertices: [Point; 3], degree: usize) -> Result<Self> {
        let map = AffineMap::new(&vertices);
        let area = 0.5 * map.det;
        if area.is_nan() || area <= 0.0 {
            return Err(Error::InvalidArgument(format!("triangle {vertices:?} is not positively oriented")));
        }
        let center = [
            (vertices[0][0] + vertices[1][0] + vertices[2][0]) / 3.0,
            (vertices[0][1] + vertices[1][1] + vertices[2][1]) / 3.0,
        ];
        let scale = (0..3)
            .map(|i| {
                let (p, q) = (vertices[i], vertices[(i + 1) % 3]);
                (p[0] - q[0]).hypot(p[1] - q[1])
            })
            .fold(0.0, f64::max);
        let exps = exponents(degree);
        let n = exps.len();
        let mut basis = TriBasis { degree, vertices, map, area, center, scale, exps, coef: identity(n) };
        // Two passes of Cholesky orthonormalization; the second cleans up
        // rounding left by the first.
        let rule = tri_quadrature((2 * degree).max(1))?.map(&vertices);
        for _ in 0..2 {
            let mut gram = DMatrix::<f64>::zeros(n, n);
            let mut v = vec![0.0; n];
            for (p, w) in &rule {
                basis.eval(*p, &mut v);
                for i in 0..n {
                    for j in 0..=i {
                        gram[(i, j)] += w * v[i] * v[j] / area;
                    }
                }
            }
            gram.fill_upper_triangle_with_lower_triangle();
            let chol = gram
                .cholesky()
                .ok_or_else(|| Error::InvalidArgument("basis Gram matrix is not positive definite".into()))?;
            let linv = chol
                .l()
                .solve_lower_triangular(&DMatrix::identity(n, n))
                .ok_or_else(|| Error::InvalidArgument("singular Cholesky factor".into()))?;
            let old = DMatrix::from_row_slice(n, n, &basis.coef);
            let new = linv * old;
            basis.coef = new.transpose().as_slice().to_vec();
        }
        // Fix the sign of φ_0 so it is the constant +1.
        if basis.coef[0] < 0.0 {
            for c in &mut basis.coef[..n] {
                *c = -*c;
            }
        }
        Ok(basis)
    }

    pub fn n_funcs(&self) -> usize {
        self.exps.len()
    }

    /// Largest edge of the triangle, used as the monomial scale.
    pub fn diameter(&self) -> f64 {
        self.scale
    }

    fn monomials(&self, p: Point, vals: &mut [f64], grads: Option<&mut [[f64; 2]]>) {
        let x = (p[0] - self.center[0]) / self.scale;
        let y = (p[1] - self.center[1]) / self.scale;
        let m = self.degree;
        let mut px = [1.0; 8];
        let mut py = [1.0; 8];
        for k in 1..=m {
            px[k] = px[k - 1] * x;
            py[k] = py[k - 1] * y;
        }
        for (i, &(a, b)) in self.exps.iter().enumerate() {
            vals[i] = px[a as usize] * py[b as usize];
        }
        if let Some(g) = grads {
            for (i, &(a, b)) in self.exps.iter().enumerate() {
                let (a, b) = (a as usize, b as usize);
                let dx = if a > 0 { a as f64 * px[a - 1] * py[b] } else { 0.0 };
                let dy = if b > 0 { b as f64 * px[a] * py[b - 1] } else { 0.0 };
                g[i] = [dx / self.scale, dy / self.scale];
            }
        }
    }

    /// Values of all basis functions at `p` (no inside check).
    pub fn eval(&self, p: Point, out: &mut [f64]) {
        let n = self.n_funcs();
        let mut mono = [0.0; 64];
        self.monomials(p, &mut mono[..n], None);
        for (k, o) in out[..n].iter_mut().enumerate() {
            let row = &self.coef[k * n..k * n + k + 1];
            *o = row.iter().zip(&mono).map(|(c, m)| c * m).sum();
        }
    }

    /// Values and physical gradients of all basis functions at `p`.
    pub fn eval_with_grad(&self, p: Point, vals: &mut [f64], grads: &mut [[f64; 2]]) {
        let n = self.n_funcs();
        let mut mono = [0.0; 64];
        let mut mg = [[0.0; 2]; 64];
        self.monomials(p, &mut mono[..n], Some(&mut mg[..n]));
        for k in 0..n {
            let row = &self.coef[k * n..k * n + k + 1];
            let (mut v, mut gx, mut gy) = (0.0, 0.0, 0.0);
            for (j, c) in row.iter().enumerate() {
                v += c * mono[j];
                gx += c * mg[j][0];
                gy += c * mg[j][1];
            }
            vals[k] = v;
            grads[k] = [gx, gy];
        }
    }

    pub fn values(&self, p: Point) -> Vec<f64> {
        let mut v = vec![0.0; self.n_funcs()];
        self.eval(p, &mut v);
        v
    }

    pub fn contains(&self, p: Point, tol: f64) -> bool {
        self.map.barycentric(p).iter().all(|&l| l >= -tol)
    }

    /// Monomial coefficients (in the scaled, centered monomials) of `φ_k`.
    pub fn coefficients(&self, k: usize) -> &[f64] {
        let n = self.n_funcs();
        &self.coef[k * n..(k + 1) * n]
    }
}

fn identity(n: usize) -> Vec<f64> {
    let mut m = vec![0.0; n * n];
    for i in 0..n {
        m[i * n + i] = 1.0;
    }
    m
}

/// Legendre polynomials `P_0..P_m` on an edge, in the coordinate
/// `s ∈ [-1, 1]` running from `start` to `end`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EdgeBasis {
    pub degree: usize,
    pub start: Point,
    pub end: Point,
    pub length: f64,
}

impl EdgeBasis {
    pub fn new(start: Point, end: Point, degree: usize) -> Self {
        let length = (end[0] - start[0]).hypot(end[1] - start[1]);
        EdgeBasis { degree, start, end, length }
    }

    pub fn n_funcs(&self) -> usize {
        self.degree + 1
    }

    /// Physical point at parameter `t ∈ [0, 1]`.
    pub fn point_at(&self, t: f64) -> Point {
        [self.start[0] + t * (self.end[0] - self.start[0]), self.start[1] + t * (self.end[1] - self.start[1])]
    }

    /// Legendre values at `s = 2t - 1`.
    pub fn eval_param(&self, t: f64, out: &mut [f64]) {
        legendre_values(2.0 * t - 1.0, out);
    }

    /// Parameter `t` of the orthogonal projection of `p` and its distance
    /// from the supporting line.
    pub fn locate(&self, p: Point) -> (f64, f64) {
        let d = [self.end[0] - self.start[0], self.end[1] - self.start[1]];
        let r = [p[0] - self.start[0], p[1] - self.start[1]];
        let l2 = self.length * self.length;
        ((r[0] * d[0] + r[1] * d[1]) / l2, (d[0] * r[1] - d[1] * r[0]).abs() / self.length)
    }
}

/// `P_0(s)..P_{n-1}(s)` into `out`.
pub fn legendre_values(s: f64, out: &mut [f64]) {
    if out.is_empty() {
        return;
    }
    out[0] = 1.0;
    if out.len() > 1 {
        out[1] = s;
    }
    for k in 2..out.len() {
        let kf = k as f64;
        out[k] = ((2.0 * kf - 1.0) * s * out[k - 1] - (kf - 1.0) * out[k - 2]) / kf;
    }
}

/// Basis values (and, for triangles, gradients) at a set of points.
#[derive(Debug, Clone, PartialEq)]
pub struct BasisValues {
    /// `values[i][k]`: function `k` at point `i`.
    pub values: Vec<Vec<f64>>,
    /// Physical gradients; empty for edge bases.
    pub gradients: Vec<Vec<[f64; 2]>>,
}

/// Either kind of basis, for [`eval_basis`].
#[derive(Debug, Clone, Copy)]
pub enum Basis<'a> {
    Triangle(&'a TriBasis),
    Edge(&'a EdgeBasis),
}

/// Evaluates a basis at points that must lie in its element.
pub fn eval_basis(basis: Basis<'_>, points: &[Point]) -> Result<BasisValues> {
    let outside = |p: Point| Error::PointOutside { element: usize::MAX, x: p[0], y: p[1] };
    match basis {
        Basis::Triangle(b) => {
            let n = b.n_funcs();
            let mut values = Vec::with_capacity(points.len());
            let mut gradients = Vec::with_capacity(points.len());
            for &p in points {
                if !b.contains(p, INSIDE_TOL) {
                    return Err(outside(p));
                }
                let mut v = vec![0.0; n];
                let mut g = vec![[0.0; 2]; n];
                b.eval_with_grad(p, &mut v, &mut g);
                values.push(v);
                gradients.push(g);
            }
            Ok(BasisValues { values, gradients })
        }
        Basis::Edge(b) => {
            let mut values = Vec::with_capacity(points.len());
            for &p in points {
                let (t, off) = b.locate(p);
                if off > INSIDE_TOL * b.length || !(-INSIDE_TOL..=1.0 + INSIDE_TOL).contains(&t) {
                    return Err(outside(p));
                }
                let mut v = vec![0.0; b.n_funcs()];
                b.eval_param(t, &mut v);
                values.push(v);
            }
            Ok(BasisValues { values, gradients: Vec::new() })
        }
    }
}

/// Coefficients of `f` in an orthonormal [`TriBasis`], by exact-degree quadrature.
pub fn project_onto(basis: &TriBasis, degree: usize, f: impl Fn(Point) -> f64) -> Result<Vec<f64>> {
    let rule = tri_quadrature(degree.clamp(1, super::MAX_TRI_DEGREE))?.map(&basis.vertices);
    let n = basis.n_funcs();
    let mut c = DVector::<f64>::zeros(n);
    let mut v = vec![0.0; n];
    for (p, w) in rule {
        basis.eval(p, &mut v);
        let fp = f(p);
        for k in 0..n {
            c[k] += w * fp * v[k] / basis.area;
        }
    }
    Ok(c.as_slice().to_vec())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::polyquad::{tri_quadrature, EdgeRule};

    const TRI: [Point; 3] = [[0.1, -0.2], [0.9, 0.05], [0.3, 0.7]];

    fn combine(basis: &TriBasis, c: &[f64], p: Point) -> (f64, [f64; 2]) {
        let n = basis.n_funcs();
        let mut v = vec![0.0; n];
        let mut g = vec![[0.0; 2]; n];
        basis.eval_with_grad(p, &mut v, &mut g);
        let val = c.iter().zip(&v).map(|(a, b)| a * b).sum();
        let gx = c.iter().zip(&g).map(|(a, b)| a * b[0]).sum();
        let gy = c.iter().zip(&g).map(|(a, b)| a * b[1]).sum();
        (val, [gx, gy])
    }

    fn inside_points() -> Vec<Point> {
        let map = AffineMap::new(&TRI);
        [[0.2, 0.3], [0.6, 0.1], [0.1, 0.1], [0.25, 0.5], [0.45, 0.45]].iter().map(|&r| map.to_physical(r)).collect()
    }

    #[test]
    fn orthonormal_and_constant_first() {
        for m in 0..=4 {
            let b = TriBasis::new(TRI, m).unwrap();
            assert_eq!(b.n_funcs(), dim_p(m));
            let rule = tri_quadrature(2 * m + 1).unwrap().map(&TRI);
            let n = b.n_funcs();
            let mut gram = vec![0.0; n * n];
            let mut v = vec![0.0; n];
            for (p, w) in &rule {
                b.eval(*p, &mut v);
                for i in 0..n {
                    for j in 0..n {
                        gram[i * n + j] += w * v[i] * v[j] / b.area;
                    }
                }
            }
            for i in 0..n {
                for j in 0..n {
                    let want = if i == j { 1.0 } else { 0.0 };
                    assert!((gram[i * n + j] - want).abs() < 1e-12, "m={m} ({i},{j})");
                }
            }
            let v0 = b.values([0.4, 0.2])[0];
            assert!((v0 - 1.0).abs() < 1e-13);
        }
    }

    #[test]
    fn monomial_reproduction() {
        for m in 0..=4 {
            let b = TriBasis::new(TRI, m).unwrap();
            for a in 0..=m as i32 {
                for c in 0..=(m as i32 - a) {
                    let f = |p: Point| p[0].powi(a) * p[1].powi(c);
                    let coef = project_onto(&b, 2 * m, f).unwrap();
                    for p in inside_points() {
                        let (v, _) = combine(&b, &coef, p);
                        let scale = f(p).abs().max(1.0);
                        assert!((v - f(p)).abs() <= 1e-12 * scale, "m={m} x^{a} y^{c}");
                    }
                }
            }
        }
    }

    #[test]
    fn reproduces_quadratic_and_gradient() {
        let b = TriBasis::new(TRI, 2).unwrap();
        let f = |p: Point| p[0] * p[0] - 3.0 * p[0] * p[1];
        let coef = project_onto(&b, 4, f).unwrap();
        for p in inside_points() {
            let (v, g) = combine(&b, &coef, p);
            assert!((v - f(p)).abs() < 1e-12);
            assert!((g[0] - (2.0 * p[0] - 3.0 * p[1])).abs() < 1e-11);
            assert!((g[1] + 3.0 * p[0]).abs() < 1e-11);
        }
    }

    #[test]
    fn gradients_match_finite_differences() {
        let b = TriBasis::new(TRI, 3).unwrap();
        let p = inside_points()[0];
        let n = b.n_funcs();
        let mut v = vec![0.0; n];
        let mut g = vec![[0.0; 2]; n];
        b.eval_with_grad(p, &mut v, &mut g);
        let fd_err = |h: f64| -> f64 {
            let mut worst: f64 = 0.0;
            for dir in 0..2 {
                let mut pp = p;
                let mut pm = p;
                pp[dir] += h;
                pm[dir] -= h;
                let (vp, vm) = (b.values(pp), b.values(pm));
                for k in 0..n {
                    worst = worst.max(((vp[k] - vm[k]) / (2.0 * h) - g[k][dir]).abs());
                }
            }
            worst
        };
        let steps = [1e-2, 5e-3, 2.5e-3];
        let errs: Vec<f64> = steps.iter().map(|&h| fd_err(h)).collect();
        for w in errs.windows(2) {
            assert!((w[0] / w[1]).log2() >= 1.9, "{errs:?}");
        }
    }

    #[test]
    fn constant_mode_is_constant() {
        let b = TriBasis::new(TRI, 2).unwrap();
        let vals = eval_basis(Basis::Triangle(&b), &inside_points()).unwrap();
        let first = vals.values[0][0];
        assert!(vals.values.iter().all(|v| (v[0] - first).abs() < 1e-14));
    }

    #[test]
    fn outside_point_rejected() {
        let b = TriBasis::new(TRI, 1).unwrap();
        assert!(eval_basis(Basis::Triangle(&b), &[[5.0, 5.0]]).is_err());
        let e = EdgeBasis::new([0.0, 0.0], [1.0, 0.0], 2);
        assert!(eval_basis(Basis::Edge(&e), &[[0.5, 0.1]]).is_err());
        assert!(eval_basis(Basis::Edge(&e), &[[1.5, 0.0]]).is_err());
        assert!(eval_basis(Basis::Edge(&e), &[[0.5, 0.0], [1.0, 0.0]]).is_ok());
    }

    #[test]
    fn edge_basis_is_orthogonal() {
        let e = EdgeBasis::new([0.2, 0.1], [0.7, 0.9], 4);
        let rule = EdgeRule::new(8);
        let n = e.n_funcs();
        let mut v = vec![0.0; n];
        let mut gram = vec![0.0; n * n];
        for &(t, w) in &rule.nodes {
            e.eval_param(t, &mut v);
            for i in 0..n {
                for j in 0..n {
                    gram[i * n + j] += w * e.length * v[i] * v[j];
                }
            }
        }
        for i in 0..n {
            for j in 0..n {
                let want = if i == j { e.length / (2 * i + 1) as f64 } else { 0.0 };
                assert!((gram[i * n + j] - want).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn rejects_clockwise_triangle() {
        assert!(TriBasis::new([TRI[0], TRI[2], TRI[1]], 1).is_err());
    }
}
