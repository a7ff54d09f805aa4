//! Sparse direct solves of the block systems.
//!
//! The direct path factors the full block matrix. The condensed path uses
//! that the vector mass matrix is block diagonal over primal cells: the
//! first block row gives `P = (iκ)⁻¹ M_p⁻¹ (r_1 + B* U)`, which leaves a
//! system in `U` alone.

use std::str::FromStr;
use std::time::{Duration, Instant};

use faer::prelude::*;
use faer::sparse::linalg::solvers::Lu;
use faer::sparse::{SparseColMat, Triplet};
use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::assembly::{
    system_matrix, AssembledOperators, ComplexSparseSystem, CooBuilder, SparseMatrix, SystemVariant,
};
use crate::error::{Error, Result};
use crate::C64;

/// Required relative residual `‖Ax - b‖ / ‖b‖`.
pub const RESIDUAL_TOL: f64 = 1e-10;
/// Iterative refinement sweeps attempted after the first solve.
const MAX_REFINEMENT: usize = 3;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum SolverKind {
    Direct,
    Condensed,
}

impl FromStr for SolverKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "direct" => Ok(SolverKind::Direct),
            "condensed" => Ok(SolverKind::Condensed),
            _ => Err(Error::InvalidArgument(format!("unknown solver '{s}' (expected direct or condensed)"))),
        }
    }
}

impl std::fmt::Display for SolverKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            SolverKind::Direct => "direct",
            SolverKind::Condensed => "condensed",
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SolveReport {
    pub solution: Vec<C64>,
    pub relative_residual: f64,
    pub refinement_steps: usize,
    pub method: SolverKind,
    /// Size of the factored matrix.
    pub factored_dim: usize,
    pub factored_nnz: usize,
    pub wall_time: Duration,
}

pub fn norm2(v: &[C64]) -> f64 {
    v.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
}

/// `‖A x - b‖ / ‖b‖`, or `‖A x‖` when `b = 0`.
pub fn relative_residual(a: &SparseMatrix<C64>, x: &[C64], b: &[C64]) -> f64 {
    let ax = a.mul_vec(x);
    let r: Vec<C64> = ax.iter().zip(b).map(|(p, q)| p - q).collect();
    let nb = norm2(b);
    if nb > 0.0 {
        norm2(&r) / nb
    } else {
        norm2(&r)
    }
}

/// LU factorization of a square complex sparse matrix.
pub struct SparseLu {
    lu: Lu<usize, C64>,
    pub dim: usize,
    pub nnz: usize,
}

impl SparseLu {
    pub fn new(a: &SparseMatrix<C64>) -> Result<Self> {
        if a.nrows != a.ncols {
            return Err(Error::DimensionMismatch { expected: a.nrows, found: a.ncols });
        }
        let trip: Vec<Triplet<usize, usize, C64>> = a.triplets().map(|(i, j, v)| Triplet::new(i, j, v)).collect();
        let mat = SparseColMat::<usize, C64>::try_new_from_triplets(a.nrows, a.ncols, &trip)
            .map_err(|e| Error::SingularSystem(format!("cannot build sparse matrix: {e:?}")))?;
        let lu = mat.sp_lu().map_err(|e| Error::SingularSystem(format!("factorization failed: {e:?}")))?;
        Ok(SparseLu { lu, dim: a.nrows, nnz: a.nnz() })
    }

    pub fn solve(&self, b: &[C64]) -> Result<Vec<C64>> {
        let rhs = Col::<C64>::from_fn(self.dim, |i| b[i]);
        let x = self.lu.solve(&rhs);
        let out: Vec<C64> = (0..self.dim).map(|i| x[i]).collect();
        if out.iter().any(|z| !(z.re.is_finite() && z.im.is_finite())) {
            return Err(Error::SingularSystem("solution has non-finite entries".into()));
        }
        Ok(out)
    }
}

/// Solve with iterative refinement against `a`, given a (possibly
/// approximate) inverse `apply`.
fn refine(
    a: &SparseMatrix<C64>,
    b: &[C64],
    mut apply: impl FnMut(&[C64]) -> Result<Vec<C64>>,
) -> Result<(Vec<C64>, f64, usize)> {
    let nb = norm2(b);
    if nb == 0.0 {
        return Ok((vec![C64::new(0.0, 0.0); a.ncols], 0.0, 0));
    }
    let mut x = apply(b)?;
    let mut steps = 0;
    loop {
        let ax = a.mul_vec(&x);
        let r: Vec<C64> = b.iter().zip(&ax).map(|(p, q)| p - q).collect();
        let res = norm2(&r) / nb;
        if res <= 0.1 * RESIDUAL_TOL || steps == MAX_REFINEMENT {
            if res > RESIDUAL_TOL {
                return Err(Error::ResidualTooLarge { residual: res, tolerance: RESIDUAL_TOL });
            }
            return Ok((x, res, steps));
        }
        let dx = apply(&r)?;
        for (xi, d) in x.iter_mut().zip(&dx) {
            *xi += d;
        }
        steps += 1;
    }
}

/// Sparse LU of the full block system.
pub fn solve_direct(system: &ComplexSparseSystem) -> Result<SolveReport> {
    if system.rhs.len() != system.matrix.nrows {
        return Err(Error::DimensionMismatch { expected: system.matrix.nrows, found: system.rhs.len() });
    }
    let start = Instant::now();
    let lu = SparseLu::new(&system.matrix)?;
    let (solution, relative_residual, refinement_steps) = refine(&system.matrix, &system.rhs, |r| lu.solve(r))?;
    Ok(SolveReport {
        solution,
        relative_residual,
        refinement_steps,
        method: SolverKind::Direct,
        factored_dim: lu.dim,
        factored_nnz: lu.nnz,
        wall_time: start.elapsed(),
    })
}

/// Cell-wise elimination of the vector unknowns.
struct Condensation {
    /// `M_p⁻¹ B*`.
    w: SparseMatrix<f64>,
    /// Dense inverses of the cell blocks of `M_p`.
    blocks: Vec<(Vec<usize>, DMatrix<f64>)>,
    b: SparseMatrix<f64>,
    ik: C64,
    nv: usize,
    lu: SparseLu,
}

impl Condensation {
    fn new(ops: &AssembledOperators, kappa: f64, variant: SystemVariant) -> Result<Self> {
        let nv = ops.dim_p();
        let mut covered = vec![false; nv];
        let mut blocks = Vec::with_capacity(ops.cell_blocks.len());
        for (c, dofs) in ops.cell_blocks.iter().enumerate() {
            let k = dofs.len();
            let mut m = DMatrix::<f64>::zeros(k, k);
            for (a, &i) in dofs.iter().enumerate() {
                covered[i] = true;
                for (j, v) in ops.mass_p.row(i) {
                    match dofs.binary_search(&j) {
                        Ok(b) => m[(a, b)] = v,
                        Err(_) => {
                            return Err(Error::InvalidArgument(format!(
                                "vector mass couples DOF {i} of cell {c} to DOF {j} outside the cell"
                            )))
                        }
                    }
                }
            }
            let inv = m
                .cholesky()
                .map(|ch| ch.inverse())
                .ok_or_else(|| Error::SingularSystem(format!("vector mass block of cell {c} is singular")))?;
            blocks.push((dofs.clone(), inv));
        }
        if covered.iter().any(|c| !c) {
            return Err(Error::InvalidArgument("cell blocks do not cover every vector DOF".into()));
        }
        // W = M_p⁻¹ B*, block by block.
        let mut wb = CooBuilder::new(nv, ops.dim_u());
        for (dofs, inv) in &blocks {
            let mut cols: Vec<usize> = dofs.iter().flat_map(|&i| ops.bstar.row(i).map(|(j, _)| j)).collect();
            cols.sort_unstable();
            cols.dedup();
            let mut rows = DMatrix::<f64>::zeros(dofs.len(), cols.len());
            for (a, &i) in dofs.iter().enumerate() {
                for (j, v) in ops.bstar.row(i) {
                    rows[(a, cols.binary_search(&j).expect("column collected"))] = v;
                }
            }
            let prod = inv * rows;
            for (a, &i) in dofs.iter().enumerate() {
                for (b, &j) in cols.iter().enumerate() {
                    wb.push(i, j, prod[(a, b)]);
                }
            }
        }
        let w = wb.finalize();
        let bw = ops.b.matmul(&w)?;
        let ik = C64::new(0.0, kappa);
        let ns = ops.dim_u();
        let mut sb = CooBuilder::with_capacity(ns, ns, bw.nnz() + ops.mass_u.nnz() + ops.boundary.nnz());
        sb.extend(bw.triplets().map(|(i, j, v)| (i, j, C64::new(v, 0.0) / ik)));
        if variant == SystemVariant::Helmholtz {
            sb.extend(ops.mass_u.triplets().map(|(i, j, v)| (i, j, ik * v)));
        }
        let rs = if variant == SystemVariant::EllipticMinus { -1.0 } else { 1.0 };
        sb.extend(ops.boundary.triplets().map(|(i, j, v)| (i, j, C64::new(rs * v, 0.0))));
        let schur = sb.finalize();
        let lu = SparseLu::new(&schur)?;
        Ok(Condensation { w, blocks, b: ops.b.clone(), ik, nv, lu })
    }

    fn apply_mass_inverse(&self, r: &[C64]) -> Vec<C64> {
        let mut y = vec![C64::new(0.0, 0.0); self.nv];
        for (dofs, inv) in &self.blocks {
            for (a, &i) in dofs.iter().enumerate() {
                y[i] = dofs.iter().enumerate().fold(C64::new(0.0, 0.0), |acc, (b, &j)| acc + r[j] * inv[(a, b)]);
            }
        }
        y
    }

    fn solve(&self, rhs: &[C64]) -> Result<Vec<C64>> {
        let (r1, r2) = rhs.split_at(self.nv);
        let y = self.apply_mass_inverse(r1);
        let by = self.b.mul_vec(&y);
        let s_rhs: Vec<C64> = r2.iter().zip(&by).map(|(r, v)| r - v / self.ik).collect();
        let u = self.lu.solve(&s_rhs)?;
        let wu = self.w.mul_vec(&u);
        let mut x: Vec<C64> = y.iter().zip(&wu).map(|(a, b)| (a + b) / self.ik).collect();
        x.extend(u);
        Ok(x)
    }
}

/// Solves `variant` with right-hand side `rhs` (full length) by eliminating
/// the vector unknowns per primal cell. The residual is measured on the
/// full block system.
pub fn solve_condensed(
    ops: &AssembledOperators,
    kappa: f64,
    variant: SystemVariant,
    rhs: &[C64],
) -> Result<SolveReport> {
    let n = ops.dim_p() + ops.dim_u();
    if rhs.len() != n {
        return Err(Error::DimensionMismatch { expected: n, found: rhs.len() });
    }
    let start = Instant::now();
    let full = system_matrix(ops, kappa, variant)?;
    let cond = Condensation::new(ops, kappa, variant)?;
    let (solution, relative_residual, refinement_steps) = refine(&full, rhs, |r| cond.solve(r))?;
    Ok(SolveReport {
        solution,
        relative_residual,
        refinement_steps,
        method: SolverKind::Condensed,
        factored_dim: cond.lu.dim,
        factored_nnz: cond.lu.nnz,
        wall_time: start.elapsed(),
    })
}

/// Dispatches on `kind`.
pub fn solve_system(ops: &AssembledOperators, system: &ComplexSparseSystem, kind: SolverKind) -> Result<SolveReport> {
    match kind {
        SolverKind::Direct => solve_direct(system),
        SolverKind::Condensed => solve_condensed(ops, system.kappa, system.variant, &system.rhs),
    }
}
