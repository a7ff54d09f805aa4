//! Staggered finite element spaces with moment degrees of freedom.
//!
//! The scalar space holds piecewise `P^m` functions that are continuous
//! across interior primal edges; the vector space holds piecewise `P^m`
//! fields whose normal component is continuous across dual edges. Both are
//! realised through moment functionals:
//!
//! - scalar: `(1/|e|) ∫_e w P_j` on primal edges and `(1/|τ|) ∫_τ w φ_k` for
//!   `φ_k` spanning `P^{m-1}(τ)`,
//! - vector: `(1/|e|) ∫_e (v·n_e) P_j` on dual edges and
//!   `(1/|τ|) ∫_τ v_c φ_k` per component.
//!
//! Edge functionals use the global edge orientation, so the two triangles
//! sharing an edge agree on what each global DOF means.

use nalgebra::DMatrix;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::mesh::{Point, StaggeredMesh};
use crate::polyquad::{dim_p, EdgeBasis, EdgeRule, Integrator, TriBasis, INSIDE_TOL};
use crate::C64;

/// Highest supported polynomial degree.
pub const MAX_DEGREE: usize = 4;
/// Local DOF matrices with a larger condition number are rejected.
pub const MAX_LOCAL_CONDITION: f64 = 1e10;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum SpaceKind {
    Scalar,
    Vector,
}

/// Per-triangle data of a space.
#[derive(Debug, Clone, PartialEq)]
pub struct LocalSpace {
    pub basis: TriBasis,
    /// Column `j` holds the orthonormal-basis coefficients of local shape
    /// function `j`. For vector spaces the first half of each column is the
    /// x-component, the second half the y-component.
    pub shape: DMatrix<f64>,
    /// Global DOF of each local DOF.
    pub dofs: Vec<usize>,
    pub condition: f64,
}

/// Degrees of freedom of a scalar or vector space on a mesh.
#[derive(Debug, Clone, PartialEq)]
pub struct DofMap {
    pub kind: SpaceKind,
    pub degree: usize,
    pub dim: usize,
    /// DOFs living on edges come first: `0..n_edge_dofs`.
    pub n_edge_dofs: usize,
    pub locals: Vec<LocalSpace>,
}

impl DofMap {
    /// Interior moments per triangle (per component for vectors).
    pub fn interior_per_triangle(&self) -> usize {
        dim_p(self.degree) - self.degree - 1
    }

    pub fn edge_dof(&self, edge_index: usize, j: usize) -> usize {
        edge_index * (self.degree + 1) + j
    }

    /// Basis coefficients of `field` on triangle `t` (length `n` or `2n`).
    pub fn local_coefficients(&self, t: usize, field: &[C64]) -> Vec<C64> {
        let loc = &self.locals[t];
        let rows = loc.shape.nrows();
        let mut out = vec![C64::new(0.0, 0.0); rows];
        for (j, &g) in loc.dofs.iter().enumerate() {
            let v = field[g];
            if v == C64::new(0.0, 0.0) {
                continue;
            }
            for (i, o) in out.iter_mut().enumerate() {
                *o += v * loc.shape[(i, j)];
            }
        }
        out
    }

    pub fn max_condition(&self) -> f64 {
        self.locals.iter().map(|l| l.condition).fold(0.0, f64::max)
    }
}

/// Global coefficient vector of a discrete field.
#[derive(Debug, Clone, PartialEq)]
pub struct FieldVector {
    pub kind: SpaceKind,
    pub values: Vec<C64>,
}

impl FieldVector {
    pub fn zeros(space: &DofMap) -> Self {
        FieldVector { kind: space.kind, values: vec![C64::new(0.0, 0.0); space.dim] }
    }

    pub fn new(space: &DofMap, values: Vec<C64>) -> Result<Self> {
        if values.len() != space.dim {
            return Err(Error::DimensionMismatch { expected: space.dim, found: values.len() });
        }
        Ok(FieldVector { kind: space.kind, values })
    }

    fn check(&self, space: &DofMap) -> Result<()> {
        if self.kind != space.kind {
            return Err(Error::InvalidArgument(format!("{:?} field used with a {:?} space", self.kind, space.kind)));
        }
        if self.values.len() != space.dim {
            return Err(Error::DimensionMismatch { expected: space.dim, found: self.values.len() });
        }
        Ok(())
    }
}

fn check_degree(m: usize) -> Result<()> {
    if m > MAX_DEGREE {
        return Err(Error::InvalidArgument(format!("polynomial degree {m} exceeds {MAX_DEGREE}")));
    }
    Ok(())
}

/// Edge rule exact for the `2m`-degree products in the DOF matrices.
fn moment_rule(m: usize) -> EdgeRule {
    EdgeRule::new(2 * m)
}

fn condition_number(d: &DMatrix<f64>) -> f64 {
    let sv = d.clone().svd(false, false).singular_values;
    let (smax, smin) = sv.iter().fold((0.0f64, f64::INFINITY), |(a, b), &s| (a.max(s), b.min(s)));
    if smin > 0.0 {
        smax / smin
    } else {
        f64::INFINITY
    }
}

fn invert_local(d: DMatrix<f64>, triangle: usize) -> Result<(DMatrix<f64>, f64)> {
    let condition = condition_number(&d);
    if condition.is_nan() || condition > MAX_LOCAL_CONDITION {
        return Err(Error::SingularLocalMatrix { triangle, condition });
    }
    let inv = d.try_inverse().ok_or(Error::SingularLocalMatrix { triangle, condition })?;
    Ok((inv, condition))
}

/// Feeds `(j, φ values, weight · P_j)` at each edge quadrature node to `emit`.
fn edge_moment_rows(basis: &TriBasis, edge: &EdgeBasis, m: usize, mut emit: impl FnMut(usize, &[f64], f64)) {
    let n = basis.n_funcs();
    let mut phi = vec![0.0; n];
    let mut leg = vec![0.0; m + 1];
    for &(t, w) in &moment_rule(m).nodes {
        basis.eval(edge.point_at(t), &mut phi);
        edge.eval_param(t, &mut leg);
        for (j, &l) in leg.iter().enumerate() {
            emit(j, &phi, w * l);
        }
    }
}

/// Scalar space: continuous across interior primal edges.
pub fn build_scalar_space(mesh: &StaggeredMesh, m: usize) -> Result<DofMap> {
    check_degree(m)?;
    let n_edge_dofs = (m + 1) * mesh.n_primal_edges;
    let n_int = dim_p(m) - m - 1;
    let locals: Vec<LocalSpace> = (0..mesh.triangles.len())
        .into_par_iter()
        .map(|t| {
            let tri = &mesh.triangles[t];
            let basis = TriBasis::new(mesh.triangle_points(t), m)?;
            let n = basis.n_funcs();
            let e = &mesh.edges[tri.primal_edge_id];
            let [a, b] = mesh.edge_points(e.id);
            let edge = EdgeBasis::new(a, b, m);
            let mut d = DMatrix::<f64>::zeros(n, n);
            edge_moment_rows(&basis, &edge, m, |j, phi, w| {
                for k in 0..n {
                    d[(j, k)] += w * phi[k];
                }
            });
            // Interior moments against the leading (P^{m-1}) basis functions;
            // orthonormality makes these rows the identity.
            for k in 0..n_int {
                d[(m + 1 + k, k)] = 1.0;
            }
            let (shape, condition) = invert_local(d, t)?;
            let mut dofs: Vec<usize> = (0..=m).map(|j| e.id * (m + 1) + j).collect();
            dofs.extend((0..n_int).map(|k| n_edge_dofs + t * n_int + k));
            Ok(LocalSpace { basis, shape, dofs, condition })
        })
        .collect::<Result<_>>()?;
    Ok(DofMap {
        kind: SpaceKind::Scalar,
        degree: m,
        dim: n_edge_dofs + n_int * mesh.triangles.len(),
        n_edge_dofs,
        locals,
    })
}

/// Vector space: normal component continuous across dual edges.
pub fn build_vector_space(mesh: &StaggeredMesh, m: usize) -> Result<DofMap> {
    check_degree(m)?;
    let n_edge_dofs = (m + 1) * mesh.n_dual_edges();
    let n_int = dim_p(m) - m - 1;
    let locals: Vec<LocalSpace> = (0..mesh.triangles.len())
        .into_par_iter()
        .map(|t| {
            let tri = &mesh.triangles[t];
            let basis = TriBasis::new(mesh.triangle_points(t), m)?;
            let n = basis.n_funcs();
            let mut d = DMatrix::<f64>::zeros(2 * n, 2 * n);
            let mut dofs = Vec::with_capacity(2 * n);
            for (slot, &eid) in tri.dual_edge_ids.iter().enumerate() {
                let e = &mesh.edges[eid];
                let [a, b] = mesh.edge_points(eid);
                let edge = EdgeBasis::new(a, b, m);
                let row0 = slot * (m + 1);
                edge_moment_rows(&basis, &edge, m, |j, phi, w| {
                    for k in 0..n {
                        d[(row0 + j, k)] += w * e.normal[0] * phi[k];
                        d[(row0 + j, n + k)] += w * e.normal[1] * phi[k];
                    }
                });
                let di = mesh.dual_index(eid);
                dofs.extend((0..=m).map(|j| di * (m + 1) + j));
            }
            let row0 = 2 * (m + 1);
            for c in 0..2 {
                for k in 0..n_int {
                    d[(row0 + c * n_int + k, c * n + k)] = 1.0;
                }
            }
            dofs.extend((0..2 * n_int).map(|k| n_edge_dofs + t * 2 * n_int + k));
            let (shape, condition) = invert_local(d, t)?;
            Ok(LocalSpace { basis, shape, dofs, condition })
        })
        .collect::<Result<_>>()?;
    Ok(DofMap {
        kind: SpaceKind::Vector,
        degree: m,
        dim: n_edge_dofs + 2 * n_int * mesh.triangles.len(),
        n_edge_dofs,
        locals,
    })
}

/// Value and gradient of a scalar field at a point.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ScalarSample {
    pub value: C64,
    pub grad: [C64; 2],
}

/// Value and divergence of a vector field at a point.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct VectorSample {
    pub value: [C64; 2],
    pub div: C64,
}

#[derive(Debug, Clone, PartialEq)]
pub enum FieldValues {
    Scalar(Vec<ScalarSample>),
    Vector(Vec<VectorSample>),
}

/// Evaluates a field from its basis coefficients on one triangle, without
/// an inside check; used in hot loops.
pub fn sample_scalar(
    basis: &TriBasis,
    coef: &[C64],
    p: Point,
    vals: &mut [f64],
    grads: &mut [[f64; 2]],
) -> ScalarSample {
    basis.eval_with_grad(p, vals, grads);
    let mut s = ScalarSample { value: C64::new(0.0, 0.0), grad: [C64::new(0.0, 0.0); 2] };
    for k in 0..coef.len() {
        s.value += coef[k] * vals[k];
        s.grad[0] += coef[k] * grads[k][0];
        s.grad[1] += coef[k] * grads[k][1];
    }
    s
}

/// Vector counterpart of [`sample_scalar`]; `coef` has length `2n`.
pub fn sample_vector(
    basis: &TriBasis,
    coef: &[C64],
    p: Point,
    vals: &mut [f64],
    grads: &mut [[f64; 2]],
) -> VectorSample {
    basis.eval_with_grad(p, vals, grads);
    let n = basis.n_funcs();
    let zero = C64::new(0.0, 0.0);
    let mut s = VectorSample { value: [zero; 2], div: zero };
    for k in 0..n {
        s.value[0] += coef[k] * vals[k];
        s.value[1] += coef[n + k] * vals[k];
        s.div += coef[k] * grads[k][0] + coef[n + k] * grads[k][1];
    }
    s
}

/// Evaluates a discrete field at points of triangle `t`.
pub fn evaluate_field(space: &DofMap, field: &FieldVector, t: usize, points: &[Point]) -> Result<FieldValues> {
    field.check(space)?;
    let loc = space.locals.get(t).ok_or_else(|| Error::InvalidArgument(format!("no triangle {t}")))?;
    let coef = space.local_coefficients(t, &field.values);
    let n = loc.basis.n_funcs();
    let (mut vals, mut grads) = (vec![0.0; n], vec![[0.0; 2]; n]);
    for &p in points {
        if !loc.basis.contains(p, INSIDE_TOL) {
            return Err(Error::PointOutside { element: t, x: p[0], y: p[1] });
        }
    }
    Ok(match space.kind {
        SpaceKind::Scalar => FieldValues::Scalar(
            points.iter().map(|&p| sample_scalar(&loc.basis, &coef, p, &mut vals, &mut grads)).collect(),
        ),
        SpaceKind::Vector => FieldValues::Vector(
            points.iter().map(|&p| sample_vector(&loc.basis, &coef, p, &mut vals, &mut grads)).collect(),
        ),
    })
}

/// Applies the scalar DOF functionals to `u`.
pub fn interpolate_scalar(
    mesh: &StaggeredMesh,
    space: &DofMap,
    quad: &Integrator,
    u: impl Fn(Point) -> C64 + Sync,
) -> Result<FieldVector> {
    if space.kind != SpaceKind::Scalar {
        return Err(Error::InvalidArgument("scalar interpolation needs a scalar space".into()));
    }
    let m = space.degree;
    let mut values = vec![C64::new(0.0, 0.0); space.dim];
    let edge_vals: Vec<Vec<C64>> = mesh.edges[..mesh.n_primal_edges]
        .par_iter()
        .map(|e| {
            let [a, b] = mesh.edge_points(e.id);
            edge_moments(&EdgeBasis::new(a, b, m), quad, &u)
        })
        .collect();
    for (e, mom) in edge_vals.into_iter().enumerate() {
        values[e * (m + 1)..(e + 1) * (m + 1)].copy_from_slice(&mom);
    }
    let n_int = space.interior_per_triangle();
    let int_vals: Vec<Vec<C64>> = (0..mesh.triangles.len())
        .into_par_iter()
        .map(|t| interior_moments(&space.locals[t].basis, n_int, quad, &u))
        .collect();
    for (t, mom) in int_vals.into_iter().enumerate() {
        let start = space.n_edge_dofs + t * n_int;
        values[start..start + n_int].copy_from_slice(&mom);
    }
    Ok(FieldVector { kind: SpaceKind::Scalar, values })
}

/// Applies the vector DOF functionals to `q`.
pub fn interpolate_vector(
    mesh: &StaggeredMesh,
    space: &DofMap,
    quad: &Integrator,
    q: impl Fn(Point) -> [C64; 2] + Sync,
) -> Result<FieldVector> {
    if space.kind != SpaceKind::Vector {
        return Err(Error::InvalidArgument("vector interpolation needs a vector space".into()));
    }
    let m = space.degree;
    let mut values = vec![C64::new(0.0, 0.0); space.dim];
    let edge_vals: Vec<Vec<C64>> = mesh.edges[mesh.n_primal_edges..]
        .par_iter()
        .map(|e| {
            let [a, b] = mesh.edge_points(e.id);
            let n = e.normal;
            edge_moments(&EdgeBasis::new(a, b, m), quad, |p| {
                let v = q(p);
                v[0] * n[0] + v[1] * n[1]
            })
        })
        .collect();
    for (d, mom) in edge_vals.into_iter().enumerate() {
        values[d * (m + 1)..(d + 1) * (m + 1)].copy_from_slice(&mom);
    }
    let n_int = space.interior_per_triangle();
    let int_vals: Vec<Vec<C64>> = (0..mesh.triangles.len())
        .into_par_iter()
        .map(|t| {
            let b = &space.locals[t].basis;
            let mut x = interior_moments(b, n_int, quad, |p| q(p)[0]);
            x.extend(interior_moments(b, n_int, quad, |p| q(p)[1]));
            x
        })
        .collect();
    for (t, mom) in int_vals.into_iter().enumerate() {
        let start = space.n_edge_dofs + t * 2 * n_int;
        values[start..start + 2 * n_int].copy_from_slice(&mom);
    }
    Ok(FieldVector { kind: SpaceKind::Vector, values })
}

fn edge_moments(edge: &EdgeBasis, quad: &Integrator, f: impl Fn(Point) -> C64) -> Vec<C64> {
    let mut leg = vec![0.0; edge.n_funcs()];
    let mut out = vec![C64::new(0.0, 0.0); edge.n_funcs()];
    for &(t, w) in &quad.edge_rule(edge.start, edge.end).nodes {
        edge.eval_param(t, &mut leg);
        let v = f(edge.point_at(t)) * w;
        for (o, l) in out.iter_mut().zip(&leg) {
            *o += v * *l;
        }
    }
    out
}

fn interior_moments(basis: &TriBasis, n_int: usize, quad: &Integrator, f: impl Fn(Point) -> C64) -> Vec<C64> {
    let mut phi = vec![0.0; basis.n_funcs()];
    let mut out = vec![C64::new(0.0, 0.0); n_int];
    if n_int == 0 {
        return out;
    }
    for (p, w) in quad.triangle_rule(&basis.vertices) {
        basis.eval(p, &mut phi);
        let v = f(p) * (w / basis.area);
        for (o, ph) in out.iter_mut().zip(&phi) {
            *o += v * *ph;
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mesh::{build_square_mesh, Rect};

    fn mesh(n: usize) -> StaggeredMesh {
        build_square_mesh(n, Rect::new(-0.5, 0.5, -0.5, 0.5)).unwrap()
    }

    #[test]
    fn dimension_formulas() {
        let m = mesh(2);
        assert_eq!(build_scalar_space(&m, 1).unwrap().dim, 40);
        assert_eq!(build_scalar_space(&m, 2).unwrap().dim, 84);
        assert_eq!(build_scalar_space(&m, 0).unwrap().dim, m.n_primal_edges);
        assert_eq!(build_vector_space(&m, 1).unwrap().dim, 64);
        assert_eq!(build_vector_space(&m, 0).unwrap().dim, m.n_dual_edges());
        for deg in 0..=MAX_DEGREE {
            let v = build_vector_space(&m, deg).unwrap();
            assert_eq!(2 * (deg + 1) + deg * (deg + 1), (deg + 1) * (deg + 2));
            assert_eq!(v.locals[0].dofs.len(), (deg + 1) * (deg + 2));
        }
        assert!(build_scalar_space(&m, 5).is_err());
    }

    #[test]
    fn degree_zero_scalar_basis_is_dual_element_indicator() {
        let m = mesh(2);
        let s = build_scalar_space(&m, 0).unwrap();
        for (t, loc) in s.locals.iter().enumerate() {
            assert_eq!(loc.dofs, vec![m.triangles[t].primal_edge_id]);
            assert!((loc.shape[(0, 0)] - 1.0).abs() < 1e-14);
        }
    }

    #[test]
    fn congruent_triangles_share_conditioning() {
        let m = mesh(4);
        for deg in 1..=3 {
            let s = build_scalar_space(&m, deg).unwrap();
            let c0 = s.locals[0].condition;
            assert!(s.locals.iter().all(|l| (l.condition - c0).abs() < 1e-6 * c0));
            let v = build_vector_space(&m, deg).unwrap();
            let c0 = v.locals[0].condition;
            assert!(v.locals.iter().all(|l| (l.condition - c0).abs() < 1e-6 * c0));
        }
    }

    #[test]
    fn zero_field_evaluates_to_zero() {
        let m = mesh(2);
        let s = build_scalar_space(&m, 2).unwrap();
        let f = FieldVector::zeros(&s);
        let centroid = {
            let [a, b, c] = m.triangle_points(3);
            [(a[0] + b[0] + c[0]) / 3.0, (a[1] + b[1] + c[1]) / 3.0]
        };
        match evaluate_field(&s, &f, 3, &[centroid]).unwrap() {
            FieldValues::Scalar(v) => assert_eq!(v[0].value, C64::new(0.0, 0.0)),
            _ => unreachable!(),
        }
    }

    #[test]
    fn mismatched_field_rejected() {
        let m = mesh(2);
        let s = build_scalar_space(&m, 1).unwrap();
        let v = build_vector_space(&m, 1).unwrap();
        assert!(FieldVector::new(&s, vec![C64::new(0.0, 0.0); 3]).is_err());
        let fv = FieldVector::zeros(&v);
        assert!(evaluate_field(&s, &fv, 0, &[]).is_err());
    }
}
