//! Interpolation operators, error norms, observed rates and discrete identities.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::analytic::ManufacturedSolution;
use crate::assembly::{
    assemble_loads, build_elliptic_projection_system, AssembledOperators, ComplexSparseSystem, ProjectionSign,
    SystemVariant,
};
use crate::error::{Error, Result};
use crate::mesh::{Point, StaggeredMesh};
use crate::polyquad::Integrator;
use crate::solver::{solve_system, SolveReport, SolverKind};
use crate::spaces::{
    interpolate_scalar, interpolate_vector, sample_scalar, sample_vector, DofMap, FieldVector, LocalSpace, SpaceKind,
};
use crate::C64;

/// Extra polynomial degree of the error quadrature over the discrete fields.
const ERROR_DEGREE_SURPLUS: usize = 6;

/// Quadrature for error norms of degree-`m` fields: degree `2m + 6`,
/// oscillation-resolving in `kappa`, graded towards `singular_point`.
pub fn error_integrator(m: usize, kappa: f64, singular_point: Option<Point>) -> Result<Integrator> {
    Ok(Integrator::new(2 * m + ERROR_DEGREE_SURPLUS, kappa)?.with_singular_point(singular_point))
}

/// Compensated running sum.
#[derive(Debug, Default, Clone, Copy)]
pub struct NeumaierSum {
    sum: f64,
    comp: f64,
}

impl NeumaierSum {
    pub fn add(&mut self, v: f64) {
        let t = self.sum + v;
        if self.sum.abs() >= v.abs() {
            self.comp += (self.sum - t) + v;
        } else {
            self.comp += (v - t) + self.sum;
        }
        self.sum = t;
    }

    pub fn value(&self) -> f64 {
        self.sum + self.comp
    }
}

/// Sum in the given order with compensation.
pub fn compensated_sum(values: impl IntoIterator<Item = f64>) -> f64 {
    let mut s = NeumaierSum::default();
    values.into_iter().for_each(|v| s.add(v));
    s.value()
}

/// `I_h u`: the scalar DOF functionals applied to `u`.
pub fn project_ih(
    mesh: &StaggeredMesh,
    scalar: &DofMap,
    quad: &Integrator,
    u: impl Fn(Point) -> C64 + Sync,
) -> Result<FieldVector> {
    interpolate_scalar(mesh, scalar, quad, u)
}

/// `J_h q`: the vector DOF functionals applied to `q`.
pub fn project_jh(
    mesh: &StaggeredMesh,
    vector: &DofMap,
    quad: &Integrator,
    q: impl Fn(Point) -> [C64; 2] + Sync,
) -> Result<FieldVector> {
    interpolate_vector(mesh, vector, quad, q)
}

fn check_field(mesh: &StaggeredMesh, space: &DofMap, field: &FieldVector, kind: SpaceKind) -> Result<()> {
    if space.kind != kind || field.kind != kind {
        return Err(Error::InvalidArgument(format!("expected a {kind:?} field and space")));
    }
    if field.values.len() != space.dim {
        return Err(Error::DimensionMismatch { expected: space.dim, found: field.values.len() });
    }
    if space.locals.len() != mesh.triangles.len() {
        return Err(Error::DimensionMismatch { expected: mesh.triangles.len(), found: space.locals.len() });
    }
    Ok(())
}

fn finite(v: f64, p: Point) -> Result<f64> {
    if v.is_finite() {
        Ok(v)
    } else {
        Err(Error::NonFiniteData { x: p[0], y: p[1] })
    }
}

/// Per-triangle integrals reduced in triangle order.
fn reduce_sqrt(parts: Vec<f64>) -> f64 {
    compensated_sum(parts).max(0.0).sqrt()
}

/// `‖exact - field‖₀` for a scalar field.
pub fn l2_error_scalar(
    mesh: &StaggeredMesh,
    space: &DofMap,
    field: &FieldVector,
    quad: &Integrator,
    exact: impl Fn(Point) -> C64 + Sync,
) -> Result<f64> {
    check_field(mesh, space, field, SpaceKind::Scalar)?;
    let parts = (0..mesh.triangles.len())
        .into_par_iter()
        .map(|t| {
            let loc = &space.locals[t];
            let coef = space.local_coefficients(t, &field.values);
            let n = loc.basis.n_funcs();
            let (mut v, mut g) = (vec![0.0; n], vec![[0.0; 2]; n]);
            let mut s = NeumaierSum::default();
            for (p, w) in quad.triangle_rule(&loc.basis.vertices) {
                let d = exact(p) - sample_scalar(&loc.basis, &coef, p, &mut v, &mut g).value;
                s.add(w * finite(d.norm_sqr(), p)?);
            }
            Ok(s.value())
        })
        .collect::<Result<Vec<f64>>>()?;
    Ok(reduce_sqrt(parts))
}

/// `‖exact - field‖₀` for a vector field.
pub fn l2_error_vector(
    mesh: &StaggeredMesh,
    space: &DofMap,
    field: &FieldVector,
    quad: &Integrator,
    exact: impl Fn(Point) -> [C64; 2] + Sync,
) -> Result<f64> {
    check_field(mesh, space, field, SpaceKind::Vector)?;
    let parts = (0..mesh.triangles.len())
        .into_par_iter()
        .map(|t| {
            let loc = &space.locals[t];
            let coef = space.local_coefficients(t, &field.values);
            let n = loc.basis.n_funcs();
            let (mut v, mut g) = (vec![0.0; n], vec![[0.0; 2]; n]);
            let mut s = NeumaierSum::default();
            for (p, w) in quad.triangle_rule(&loc.basis.vertices) {
                let e = exact(p);
                let h = sample_vector(&loc.basis, &coef, p, &mut v, &mut g).value;
                let d = (e[0] - h[0]).norm_sqr() + (e[1] - h[1]).norm_sqr();
                s.add(w * finite(d, p)?);
            }
            Ok(s.value())
        })
        .collect::<Result<Vec<f64>>>()?;
    Ok(reduce_sqrt(parts))
}

/// Errors of one discrete solution.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ErrorReport {
    /// Subdivisions per unit length.
    pub n: usize,
    pub h: f64,
    pub kappa: f64,
    pub m: usize,
    pub dof_u: usize,
    pub dof_p: usize,
    pub err_u_l2: f64,
    pub err_p_l2: f64,
    /// `‖I_h u - u_h‖₀`.
    pub err_ihu_uh: f64,
    pub residual: f64,
    pub wall_ms: f64,
}

/// A refinement sequence with rates between consecutive levels.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConvergenceRecord {
    pub levels: Vec<ErrorReport>,
    /// `rate_u[i]` compares level `i - 1` with level `i`; `None` on the first level.
    pub rate_u: Vec<Option<f64>>,
    pub rate_p: Vec<Option<f64>>,
}

/// `ln(e_coarse/e_fine) / ln(n_fine/n_coarse)`; undefined for zero errors.
pub fn observed_rate(e_coarse: f64, e_fine: f64, n_coarse: usize, n_fine: usize) -> Option<f64> {
    if !(e_coarse > 0.0 && e_fine > 0.0) || n_fine == n_coarse {
        return None;
    }
    Some((e_coarse / e_fine).ln() / (n_fine as f64 / n_coarse as f64).ln())
}

fn rates(levels: &[ErrorReport], err: impl Fn(&ErrorReport) -> f64) -> Vec<Option<f64>> {
    let mut out = vec![None; levels.len().min(1)];
    for w in levels.windows(2) {
        out.push(observed_rate(err(&w[0]), err(&w[1]), w[0].n, w[1].n));
    }
    out
}

pub fn compute_rates(levels: Vec<ErrorReport>) -> ConvergenceRecord {
    let rate_u = rates(&levels, |r| r.err_u_l2);
    let rate_p = rates(&levels, |r| r.err_p_l2);
    ConvergenceRecord { levels, rate_u, rate_p }
}

/// `xᴴ A x` for a real symmetric `A`.
fn quadratic_form(a: &crate::assembly::SparseMatrix<f64>, x: &[C64]) -> f64 {
    let ax = a.mul_vec(x);
    x.iter().zip(&ax).map(|(xi, yi)| (xi.conj() * yi).re).sum()
}

/// Discrete energy balance of a block-system solution.
///
/// Testing the second block row with `U` and eliminating `B` with the first
/// gives `Uᴴ rhs = ±UᴴRU + iκ(UᴴM_uU - PᴴM_pP)`, the `M_u` term present only
/// for the Helmholtz variant.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EnergyCheck {
    pub real_defect: f64,
    pub imag_defect: f64,
    /// Largest term in the balance; defects are relative to it.
    pub scale: f64,
}

impl EnergyCheck {
    pub fn relative(&self) -> f64 {
        if self.scale == 0.0 {
            self.real_defect.max(self.imag_defect)
        } else {
            self.real_defect.max(self.imag_defect) / self.scale
        }
    }
}

pub fn energy_identities(ops: &AssembledOperators, system: &ComplexSparseSystem, x: &[C64]) -> Result<EnergyCheck> {
    if x.len() != system.dim() {
        return Err(Error::DimensionMismatch { expected: system.dim(), found: x.len() });
    }
    let (p, u) = system.split(x);
    let rhs = &system.rhs[system.n_vector..];
    let work: C64 = u.iter().zip(rhs).map(|(a, b)| a.conj() * b).sum();
    let r = quadratic_form(&ops.boundary, u);
    let mp = quadratic_form(&ops.mass_p, p);
    let mu = if system.variant == SystemVariant::Helmholtz { quadratic_form(&ops.mass_u, u) } else { 0.0 };
    let rsign = if system.variant == SystemVariant::EllipticMinus { -1.0 } else { 1.0 };
    let k = system.kappa;
    Ok(EnergyCheck {
        real_defect: (work.re - rsign * r).abs(),
        imag_defect: (work.im - k * (mu - mp)).abs(),
        scale: work.norm().max(r.abs()).max(k * mu.abs()).max(k * mp.abs()),
    })
}

fn distribute(loc: &LocalSpace, local: &[C64], out: &mut Vec<(usize, C64)>) {
    for (j, &g) in loc.dofs.iter().enumerate() {
        let v = (0..local.len()).fold(C64::new(0.0, 0.0), |acc, i| acc + local[i] * loc.shape[(i, j)]);
        out.push((g, v));
    }
}

fn accumulate(dim: usize, parts: Vec<Vec<(usize, C64)>>) -> Vec<C64> {
    let mut out = vec![C64::new(0.0, 0.0); dim];
    for part in parts {
        for (g, v) in part {
            out[g] += v;
        }
    }
    out
}

fn edge_points_weights(quad: &Integrator, a: Point, b: Point) -> Vec<(Point, f64)> {
    let len = (b[0] - a[0]).hypot(b[1] - a[1]);
    quad.edge_rule(a, b)
        .nodes
        .iter()
        .map(|&(t, w)| ([a[0] + t * (b[0] - a[0]), a[1] + t * (b[1] - a[1])], w * len))
        .collect()
}

/// `b_h(q, φ_i)` for every scalar basis function, with `q` a given vector field.
pub fn b_moments(
    mesh: &StaggeredMesh,
    scalar: &DofMap,
    quad: &Integrator,
    q: impl Fn(Point) -> [C64; 2] + Sync,
) -> Result<Vec<C64>> {
    if scalar.kind != SpaceKind::Scalar {
        return Err(Error::InvalidArgument("expected a scalar space".into()));
    }
    let parts = (0..mesh.triangles.len())
        .into_par_iter()
        .map(|t| {
            let loc = &scalar.locals[t];
            let n = loc.basis.n_funcs();
            let (mut v, mut g) = (vec![0.0; n], vec![[0.0; 2]; n]);
            let mut local = vec![C64::new(0.0, 0.0); n];
            for (p, w) in quad.triangle_rule(&loc.basis.vertices) {
                let qv = q(p);
                loc.basis.eval_with_grad(p, &mut v, &mut g);
                for a in 0..n {
                    local[a] -= (qv[0] * g[a][0] + qv[1] * g[a][1]) * w;
                }
            }
            for &eid in &mesh.triangles[t].dual_edge_ids {
                let sign = mesh.edge_sign(eid, t);
                let nrm = mesh.edges[eid].normal;
                let [pa, pb] = mesh.edge_points(eid);
                for (p, w) in edge_points_weights(quad, pa, pb) {
                    let qv = q(p);
                    loc.basis.eval(p, &mut v);
                    let qn = qv[0] * nrm[0] + qv[1] * nrm[1];
                    for a in 0..n {
                        local[a] += qn * (sign * w * v[a]);
                    }
                }
            }
            let mut out = Vec::new();
            distribute(loc, &local, &mut out);
            out
        })
        .collect();
    Ok(accumulate(scalar.dim, parts))
}

/// `b_h*(u, ψ_i) = (∇·ψ_i, u) - Σ_{F_u} <[ψ_i·n], u>` for every vector basis
/// function, with `u` a given scalar field.
pub fn bstar_moments(
    mesh: &StaggeredMesh,
    vector: &DofMap,
    quad: &Integrator,
    u: impl Fn(Point) -> C64 + Sync,
) -> Result<Vec<C64>> {
    if vector.kind != SpaceKind::Vector {
        return Err(Error::InvalidArgument("expected a vector space".into()));
    }
    let parts = (0..mesh.triangles.len())
        .into_par_iter()
        .map(|t| {
            let loc = &vector.locals[t];
            let n = loc.basis.n_funcs();
            let (mut v, mut g) = (vec![0.0; n], vec![[0.0; 2]; n]);
            let mut local = vec![C64::new(0.0, 0.0); 2 * n];
            for (p, w) in quad.triangle_rule(&loc.basis.vertices) {
                let uw = u(p) * w;
                loc.basis.eval_with_grad(p, &mut v, &mut g);
                for b in 0..n {
                    local[b] += uw * g[b][0];
                    local[n + b] += uw * g[b][1];
                }
            }
            let eid = mesh.triangles[t].primal_edge_id;
            let sign = mesh.edge_sign(eid, t);
            let nrm = mesh.edges[eid].normal;
            let [pa, pb] = mesh.edge_points(eid);
            for (p, w) in edge_points_weights(quad, pa, pb) {
                let uv = u(p) * (sign * w);
                loc.basis.eval(p, &mut v);
                for b in 0..n {
                    local[b] -= uv * (v[b] * nrm[0]);
                    local[n + b] -= uv * (v[b] * nrm[1]);
                }
            }
            let mut out = Vec::new();
            distribute(loc, &local, &mut out);
            out
        })
        .collect();
    Ok(accumulate(vector.dim, parts))
}

/// Elliptic projection `(u_h^±, p_h^±)` of a solution: the discrete first-order
/// problem without the `iκ(u, v)` term, with source `∇·p = f/(iκ) - iκu` and
/// boundary datum `∓p·n + u`. Returns the solve report and the system that was solved.
pub fn elliptic_projection(
    mesh: &StaggeredMesh,
    scalar: &DofMap,
    ops: &AssembledOperators,
    quad: &Integrator,
    solution: &ManufacturedSolution,
    sign: ProjectionSign,
    solver: SolverKind,
) -> Result<(SolveReport, ComplexSparseSystem)> {
    let k = solution.kappa;
    let ik = C64::new(0.0, k);
    let source = |p: Point| solution.mixed_source(p) - ik * solution.u(p);
    let (f_vec, g_vec) = match sign {
        ProjectionSign::Plus => assemble_loads(mesh, scalar, quad, source, |p, n| solution.boundary_datum(p, n))?,
        ProjectionSign::Minus => {
            assemble_loads(mesh, scalar, quad, source, |p, n| solution.boundary_datum_minus(p, n))?
        }
    };
    let system = build_elliptic_projection_system(ops, k, sign, &f_vec, &g_vec)?;
    let report = solve_system(ops, &system, solver)?;
    Ok((report, system))
}
