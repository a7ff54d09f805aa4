use super::operators::AssembledOperators;
use super::sparse::{CooBuilder, SparseMatrix};
use crate::error::{Error, Result};
use crate::C64;

/// Which block system to build.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum SystemVariant {
    /// `[[iκM_p, -B*], [B, iκM_u + R]]`.
    Helmholtz,
    /// Elliptic projection for the datum `-p·n + u`: `[[iκM_p, -B*], [B, R]]`.
    EllipticPlus,
    /// Elliptic projection for the datum `p·n + u`: `[[iκM_p, -B*], [B, -R]]`.
    EllipticMinus,
}

/// Sign of an elliptic projection's boundary datum.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum ProjectionSign {
    Plus,
    Minus,
}

/// Block system in the unknowns `[P; U]`, vector block first.
#[derive(Debug, Clone, PartialEq)]
pub struct ComplexSparseSystem {
    pub matrix: SparseMatrix<C64>,
    pub rhs: Vec<C64>,
    pub n_vector: usize,
    pub n_scalar: usize,
    pub kappa: f64,
    pub variant: SystemVariant,
}

impl ComplexSparseSystem {
    pub fn dim(&self) -> usize {
        self.n_vector + self.n_scalar
    }

    /// Splits a solution into `(P, U)`.
    pub fn split<'a>(&self, x: &'a [C64]) -> (&'a [C64], &'a [C64]) {
        x.split_at(self.n_vector)
    }
}

fn check_kappa(kappa: f64) -> Result<()> {
    if !(kappa > 0.0 && kappa.is_finite()) {
        return Err(Error::InvalidArgument(format!("wave number must be positive, got {kappa}")));
    }
    Ok(())
}

/// Block matrix for `variant`.
pub fn system_matrix(ops: &AssembledOperators, kappa: f64, variant: SystemVariant) -> Result<SparseMatrix<C64>> {
    check_kappa(kappa)?;
    let (nv, ns) = (ops.dim_p(), ops.dim_u());
    let ik = C64::new(0.0, kappa);
    let nnz = ops.mass_p.nnz() + 2 * ops.b.nnz() + ops.mass_u.nnz() + ops.boundary.nnz();
    let mut bld = CooBuilder::with_capacity(nv + ns, nv + ns, nnz);
    bld.extend(ops.mass_p.triplets().map(|(i, j, v)| (i, j, ik * v)));
    bld.extend(ops.bstar.triplets().map(|(i, j, v)| (i, nv + j, C64::new(-v, 0.0))));
    bld.extend(ops.b.triplets().map(|(i, j, v)| (nv + i, j, C64::new(v, 0.0))));
    if variant == SystemVariant::Helmholtz {
        bld.extend(ops.mass_u.triplets().map(|(i, j, v)| (nv + i, nv + j, ik * v)));
    }
    let rsign = if variant == SystemVariant::EllipticMinus { -1.0 } else { 1.0 };
    bld.extend(ops.boundary.triplets().map(|(i, j, v)| (nv + i, nv + j, C64::new(rsign * v, 0.0))));
    Ok(bld.finalize())
}

fn stacked_rhs(ops: &AssembledOperators, scalar_rhs: Vec<C64>) -> Vec<C64> {
    let mut rhs = vec![C64::new(0.0, 0.0); ops.dim_p()];
    rhs.extend(scalar_rhs);
    rhs
}

fn check_loads(ops: &AssembledOperators, f: &[C64], g: &[C64]) -> Result<()> {
    for v in [f, g] {
        if v.len() != ops.dim_u() {
            return Err(Error::DimensionMismatch { expected: ops.dim_u(), found: v.len() });
        }
    }
    Ok(())
}

/// Helmholtz system with right-hand side `[0; F + G]`.
pub fn build_helmholtz_system(
    ops: &AssembledOperators,
    kappa: f64,
    f_vec: &[C64],
    g_vec: &[C64],
) -> Result<ComplexSparseSystem> {
    check_loads(ops, f_vec, g_vec)?;
    let matrix = system_matrix(ops, kappa, SystemVariant::Helmholtz)?;
    let rhs = stacked_rhs(ops, f_vec.iter().zip(g_vec).map(|(f, g)| f + g).collect());
    Ok(ComplexSparseSystem {
        matrix,
        rhs,
        n_vector: ops.dim_p(),
        n_scalar: ops.dim_u(),
        kappa,
        variant: SystemVariant::Helmholtz,
    })
}

/// Elliptic projection system: no `iκM_u` term.
///
/// `f_vec` is the load of the divergence datum `F` and `g_vec` the boundary
/// load of `G = ∓p·n + u`. The plus variant has right-hand side `[0; F + G]`;
/// the minus variant is scaled by `-1` in its second block row, giving
/// `[[iκM_p, -B*], [B, -R]]` with right-hand side `[0; F - G]`.
pub fn build_elliptic_projection_system(
    ops: &AssembledOperators,
    kappa: f64,
    sign: ProjectionSign,
    f_vec: &[C64],
    g_vec: &[C64],
) -> Result<ComplexSparseSystem> {
    check_loads(ops, f_vec, g_vec)?;
    let (variant, s) = match sign {
        ProjectionSign::Plus => (SystemVariant::EllipticPlus, 1.0),
        ProjectionSign::Minus => (SystemVariant::EllipticMinus, -1.0),
    };
    let matrix = system_matrix(ops, kappa, variant)?;
    let rhs = stacked_rhs(ops, f_vec.iter().zip(g_vec).map(|(f, g)| f + g * s).collect());
    Ok(ComplexSparseSystem { matrix, rhs, n_vector: ops.dim_p(), n_scalar: ops.dim_u(), kappa, variant })
}
