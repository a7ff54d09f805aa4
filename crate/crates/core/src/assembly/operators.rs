use nalgebra::DMatrix;
use rayon::prelude::*;

use super::sparse::{CooBuilder, SparseMatrix};
use crate::error::{Error, Result};
use crate::mesh::{Point, StaggeredMesh};
use crate::polyquad::{tri_quadrature, EdgeRule, Integrator, TriBasis};
use crate::spaces::{DofMap, LocalSpace, SpaceKind};
use crate::C64;

/// All matrices of the discrete scheme.
#[derive(Debug, Clone, PartialEq)]
pub struct AssembledOperators {
    /// `B[i, j] = b_h(ψ_j, φ_i)`: scalar test rows, vector trial columns.
    pub b: SparseMatrix<f64>,
    /// `B*[i, j] = b_h*(φ_j, ψ_i)`: vector test rows, scalar trial columns.
    pub bstar: SparseMatrix<f64>,
    /// Vector mass `(ψ_j, ψ_i)`.
    pub mass_p: SparseMatrix<f64>,
    /// Scalar mass `(φ_j, φ_i)`.
    pub mass_u: SparseMatrix<f64>,
    /// Boundary mass `<φ_j, φ_i>` over `∂Ω`.
    pub boundary: SparseMatrix<f64>,
    /// Vector DOFs of each primal cell; `mass_p` is block diagonal on these.
    pub cell_blocks: Vec<Vec<usize>>,
}

impl AssembledOperators {
    pub fn dim_p(&self) -> usize {
        self.mass_p.nrows
    }

    pub fn dim_u(&self) -> usize {
        self.mass_u.nrows
    }
}

fn check_pair(mesh: &StaggeredMesh, scalar: &DofMap, vector: &DofMap) -> Result<()> {
    if scalar.kind != SpaceKind::Scalar || vector.kind != SpaceKind::Vector {
        return Err(Error::InvalidArgument("expected a scalar and a vector space".into()));
    }
    if scalar.degree != vector.degree {
        return Err(Error::InvalidArgument(format!(
            "degree mismatch: scalar {} vs vector {}",
            scalar.degree, vector.degree
        )));
    }
    check_space(mesh, scalar)?;
    check_space(mesh, vector)
}

fn check_space(mesh: &StaggeredMesh, space: &DofMap) -> Result<()> {
    if space.locals.len() != mesh.triangles.len() {
        return Err(Error::DimensionMismatch { expected: mesh.triangles.len(), found: space.locals.len() });
    }
    Ok(())
}

fn volume_rule(m: usize, tri: &[Point; 3]) -> Vec<(Point, f64)> {
    tri_quadrature(2 * m + 2).expect("supported degree").map(tri)
}

fn edge_nodes(m: usize, a: Point, b: Point) -> Vec<(Point, f64)> {
    let len = (b[0] - a[0]).hypot(b[1] - a[1]);
    EdgeRule::new(2 * m + 1)
        .nodes
        .iter()
        .map(|&(t, w)| ([a[0] + t * (b[0] - a[0]), a[1] + t * (b[1] - a[1])], w * len))
        .collect()
}

/// `Sₗᵀ K Sᵣ` scattered to global indices, in row-major local order.
fn scatter(left: &LocalSpace, k: &DMatrix<f64>, right: &LocalSpace) -> Vec<(usize, usize, f64)> {
    let local = left.shape.transpose() * k * &right.shape;
    let mut out = Vec::with_capacity(local.len());
    for (a, &i) in left.dofs.iter().enumerate() {
        for (b, &j) in right.dofs.iter().enumerate() {
            out.push((i, j, local[(a, b)]));
        }
    }
    out
}

fn gather(nrows: usize, ncols: usize, parts: Vec<Vec<(usize, usize, f64)>>) -> SparseMatrix<f64> {
    let mut b = CooBuilder::with_capacity(nrows, ncols, parts.iter().map(Vec::len).sum());
    for p in parts {
        b.extend(p);
    }
    b.finalize()
}

/// Orthonormal-basis values and gradients at a point.
fn eval(basis: &TriBasis, p: Point) -> (Vec<f64>, Vec<[f64; 2]>) {
    let n = basis.n_funcs();
    let (mut v, mut g) = (vec![0.0; n], vec![[0.0; 2]; n]);
    basis.eval_with_grad(p, &mut v, &mut g);
    (v, g)
}

/// Local `b_h` on one triangle: rows scalar basis, columns vector basis.
fn local_b(mesh: &StaggeredMesh, t: usize, basis: &TriBasis, m: usize) -> DMatrix<f64> {
    let n = basis.n_funcs();
    let mut k = DMatrix::zeros(n, 2 * n);
    for (p, w) in volume_rule(m, &basis.vertices) {
        let (v, g) = eval(basis, p);
        for a in 0..n {
            for b in 0..n {
                k[(a, b)] -= w * v[b] * g[a][0];
                k[(a, n + b)] -= w * v[b] * g[a][1];
            }
        }
    }
    for &eid in &mesh.triangles[t].dual_edge_ids {
        let sign = mesh.edge_sign(eid, t);
        let nrm = mesh.edges[eid].normal;
        let [pa, pb] = mesh.edge_points(eid);
        for (p, w) in edge_nodes(m, pa, pb) {
            let (v, _) = eval(basis, p);
            for a in 0..n {
                for b in 0..n {
                    let c = sign * w * v[a] * v[b];
                    k[(a, b)] += c * nrm[0];
                    k[(a, n + b)] += c * nrm[1];
                }
            }
        }
    }
    k
}

/// Local `b_h*` on one triangle: rows vector basis, columns scalar basis.
fn local_bstar(mesh: &StaggeredMesh, t: usize, basis: &TriBasis, m: usize) -> DMatrix<f64> {
    let n = basis.n_funcs();
    let mut k = DMatrix::zeros(2 * n, n);
    for (p, w) in volume_rule(m, &basis.vertices) {
        let (v, g) = eval(basis, p);
        for b in 0..n {
            for a in 0..n {
                k[(b, a)] += w * g[b][0] * v[a];
                k[(n + b, a)] += w * g[b][1] * v[a];
            }
        }
    }
    let eid = mesh.triangles[t].primal_edge_id;
    let sign = mesh.edge_sign(eid, t);
    let nrm = mesh.edges[eid].normal;
    let [pa, pb] = mesh.edge_points(eid);
    for (p, w) in edge_nodes(m, pa, pb) {
        let (v, _) = eval(basis, p);
        for b in 0..n {
            for a in 0..n {
                let c = sign * w * v[a] * v[b];
                k[(b, a)] -= c * nrm[0];
                k[(n + b, a)] -= c * nrm[1];
            }
        }
    }
    k
}

fn local_mass(basis: &TriBasis, m: usize, components: usize) -> DMatrix<f64> {
    let n = basis.n_funcs();
    let mut k = DMatrix::zeros(components * n, components * n);
    for (p, w) in volume_rule(m, &basis.vertices) {
        let (v, _) = eval(basis, p);
        for a in 0..n {
            for b in 0..n {
                let c = w * v[a] * v[b];
                for comp in 0..components {
                    k[(comp * n + a, comp * n + b)] += c;
                }
            }
        }
    }
    k
}

/// Matrix of `b_h(q, v) = -(q, ∇v) + Σ_{dual e} <q·n, [v]>_e`.
pub fn assemble_bh(mesh: &StaggeredMesh, scalar: &DofMap, vector: &DofMap) -> Result<SparseMatrix<f64>> {
    check_pair(mesh, scalar, vector)?;
    let m = scalar.degree;
    let parts = (0..mesh.triangles.len())
        .into_par_iter()
        .map(|t| {
            let k = local_b(mesh, t, &scalar.locals[t].basis, m);
            scatter(&scalar.locals[t], &k, &vector.locals[t])
        })
        .collect();
    Ok(gather(scalar.dim, vector.dim, parts))
}

/// Matrix of `b_h*(v, q) = (∇·q, v) - Σ_{primal e} <[q·n], v>_e`.
pub fn assemble_bh_star(mesh: &StaggeredMesh, scalar: &DofMap, vector: &DofMap) -> Result<SparseMatrix<f64>> {
    check_pair(mesh, scalar, vector)?;
    let m = scalar.degree;
    let parts = (0..mesh.triangles.len())
        .into_par_iter()
        .map(|t| {
            let k = local_bstar(mesh, t, &scalar.locals[t].basis, m);
            scatter(&vector.locals[t], &k, &scalar.locals[t])
        })
        .collect();
    Ok(gather(vector.dim, scalar.dim, parts))
}

/// `L²(Ω)` mass matrix of either space.
pub fn assemble_mass(mesh: &StaggeredMesh, space: &DofMap) -> Result<SparseMatrix<f64>> {
    check_space(mesh, space)?;
    let comps = match space.kind {
        SpaceKind::Scalar => 1,
        SpaceKind::Vector => 2,
    };
    let parts =
        space.locals.par_iter().map(|loc| scatter(loc, &local_mass(&loc.basis, space.degree, comps), loc)).collect();
    Ok(gather(space.dim, space.dim, parts))
}

/// `L²(∂Ω)` mass matrix of the scalar space.
pub fn assemble_boundary_mass(mesh: &StaggeredMesh, scalar: &DofMap) -> Result<SparseMatrix<f64>> {
    check_space(mesh, scalar)?;
    if scalar.kind != SpaceKind::Scalar {
        return Err(Error::InvalidArgument("boundary mass needs the scalar space".into()));
    }
    let m = scalar.degree;
    let parts = (0..mesh.triangles.len())
        .into_par_iter()
        .map(|t| {
            let eid = mesh.triangles[t].primal_edge_id;
            if !mesh.edges[eid].is_boundary {
                return Vec::new();
            }
            let loc = &scalar.locals[t];
            let n = loc.basis.n_funcs();
            let mut k = DMatrix::zeros(n, n);
            let [pa, pb] = mesh.edge_points(eid);
            for (p, w) in edge_nodes(m, pa, pb) {
                let (v, _) = eval(&loc.basis, p);
                for a in 0..n {
                    for b in 0..n {
                        k[(a, b)] += w * v[a] * v[b];
                    }
                }
            }
            scatter(loc, &k, loc)
        })
        .collect();
    Ok(gather(scalar.dim, scalar.dim, parts))
}

/// Assembles every matrix of the scheme.
pub fn assemble_operators(mesh: &StaggeredMesh, scalar: &DofMap, vector: &DofMap) -> Result<AssembledOperators> {
    Ok(AssembledOperators {
        b: assemble_bh(mesh, scalar, vector)?,
        bstar: assemble_bh_star(mesh, scalar, vector)?,
        mass_p: assemble_mass(mesh, vector)?,
        mass_u: assemble_mass(mesh, scalar)?,
        boundary: assemble_boundary_mass(mesh, scalar)?,
        cell_blocks: cell_blocks(mesh, vector),
    })
}

/// Sorted vector DOFs touched by the triangles of each primal cell.
pub fn cell_blocks(mesh: &StaggeredMesh, vector: &DofMap) -> Vec<Vec<usize>> {
    mesh.cells
        .iter()
        .map(|c| {
            let mut dofs: Vec<usize> =
                c.triangle_ids.iter().flat_map(|&t| vector.locals[t].dofs.iter().copied()).collect();
            dofs.sort_unstable();
            dofs.dedup();
            dofs
        })
        .collect()
}

fn finite(v: C64, p: Point) -> Result<C64> {
    if v.re.is_finite() && v.im.is_finite() {
        Ok(v)
    } else {
        Err(Error::NonFiniteData { x: p[0], y: p[1] })
    }
}

/// Volume load `(f, φ_i)` with the oscillation-resolving rule of `quad`.
pub fn assemble_volume_load(
    mesh: &StaggeredMesh,
    scalar: &DofMap,
    quad: &Integrator,
    f: impl Fn(Point) -> C64 + Sync,
) -> Result<Vec<C64>> {
    check_space(mesh, scalar)?;
    let parts: Vec<Vec<(usize, C64)>> = scalar
        .locals
        .par_iter()
        .map(|loc| {
            let n = loc.basis.n_funcs();
            let mut phi = vec![0.0; n];
            let mut local = vec![C64::new(0.0, 0.0); n];
            for (p, w) in quad.triangle_rule(&loc.basis.vertices) {
                let fp = finite(f(p), p)? * w;
                loc.basis.eval(p, &mut phi);
                for (l, ph) in local.iter_mut().zip(&phi) {
                    *l += fp * *ph;
                }
            }
            Ok(distribute(loc, &local))
        })
        .collect::<Result<_>>()?;
    Ok(sum_parts(scalar.dim, parts))
}

/// Boundary load `<g, φ_i>` over `∂Ω`; `g` receives the point and outward normal.
pub fn assemble_boundary_load(
    mesh: &StaggeredMesh,
    scalar: &DofMap,
    quad: &Integrator,
    g: impl Fn(Point, [f64; 2]) -> C64 + Sync,
) -> Result<Vec<C64>> {
    check_space(mesh, scalar)?;
    let parts: Vec<Vec<(usize, C64)>> = (0..mesh.triangles.len())
        .into_par_iter()
        .map(|t| {
            let e = &mesh.edges[mesh.triangles[t].primal_edge_id];
            if !e.is_boundary {
                return Ok(Vec::new());
            }
            let loc = &scalar.locals[t];
            let n = loc.basis.n_funcs();
            let mut phi = vec![0.0; n];
            let mut local = vec![C64::new(0.0, 0.0); n];
            let [pa, pb] = mesh.edge_points(e.id);
            for &(s, w) in &quad.edge_rule(pa, pb).nodes {
                let p = [pa[0] + s * (pb[0] - pa[0]), pa[1] + s * (pb[1] - pa[1])];
                let gp = finite(g(p, e.normal), p)? * (w * e.length);
                loc.basis.eval(p, &mut phi);
                for (l, ph) in local.iter_mut().zip(&phi) {
                    *l += gp * *ph;
                }
            }
            Ok(distribute(loc, &local))
        })
        .collect::<Result<_>>()?;
    Ok(sum_parts(scalar.dim, parts))
}

/// Both load vectors: `(f, φ_i)` and `<g, φ_i>_∂Ω`.
pub fn assemble_loads(
    mesh: &StaggeredMesh,
    scalar: &DofMap,
    quad: &Integrator,
    f: impl Fn(Point) -> C64 + Sync,
    g: impl Fn(Point, [f64; 2]) -> C64 + Sync,
) -> Result<(Vec<C64>, Vec<C64>)> {
    Ok((assemble_volume_load(mesh, scalar, quad, f)?, assemble_boundary_load(mesh, scalar, quad, g)?))
}

/// Maps basis-coefficient moments to DOF-basis moments (`Sᵀ · local`).
fn distribute(loc: &LocalSpace, local: &[C64]) -> Vec<(usize, C64)> {
    loc.dofs
        .iter()
        .enumerate()
        .map(|(j, &g)| {
            let v = (0..local.len()).fold(C64::new(0.0, 0.0), |acc, i| acc + local[i] * loc.shape[(i, j)]);
            (g, v)
        })
        .collect()
}

fn sum_parts(dim: usize, parts: Vec<Vec<(usize, C64)>>) -> Vec<C64> {
    let mut out = vec![C64::new(0.0, 0.0); dim];
    for part in parts {
        for (g, v) in part {
            out[g] += v;
        }
    }
    out
}
