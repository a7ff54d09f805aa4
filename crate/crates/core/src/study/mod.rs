//! Convergence studies: per-case solves, refinement series and their outputs.

mod output;

use std::fmt;
use std::path::PathBuf;
use std::str::FromStr;
use std::time::Instant;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

pub use output::{format_sig, write_csv, write_svg_plot, write_vtk, CSV_HEADER};

use crate::analytic::{example1, example2, ManufacturedSolution};
use crate::assembly::{
    assemble_loads, assemble_operators, build_helmholtz_system, AssembledOperators, ComplexSparseSystem,
};
use crate::error::{Error, Result};
use crate::mesh::{build_square_mesh, perturb_mesh, read_mesh, Rect, StaggeredMesh, DEFAULT_RHO};
use crate::polyquad::Integrator;
use crate::solver::{norm2, solve_system, SolveReport, SolverKind};
use crate::spaces::{build_scalar_space, build_vector_space, DofMap, FieldVector, SpaceKind, MAX_DEGREE};
use crate::verify::{
    compute_rates, energy_identities, error_integrator, l2_error_scalar, l2_error_vector, project_ih,
    ConvergenceRecord, EnergyCheck, ErrorReport,
};
use crate::C64;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum ExampleKind {
    /// Radial solution with a point-source-like load on `[-0.5, 0.5]²`.
    Ex1,
    /// Corner solution `J_ξ(κr)cos(ξθ)` on `(0,1)×(-0.5,0.5)`.
    Ex2,
}

impl ExampleKind {
    pub fn domain(self) -> Rect {
        match self {
            ExampleKind::Ex1 => Rect::new(-0.5, 0.5, -0.5, 0.5),
            ExampleKind::Ex2 => Rect::new(0.0, 1.0, -0.5, 0.5),
        }
    }

    pub fn solution(self, kappa: f64, xi: f64) -> Result<ManufacturedSolution> {
        match self {
            ExampleKind::Ex1 => example1(kappa),
            ExampleKind::Ex2 => example2(kappa, xi),
        }
    }
}

impl fmt::Display for ExampleKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            ExampleKind::Ex1 => "ex1",
            ExampleKind::Ex2 => "ex2",
        })
    }
}

impl FromStr for ExampleKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "ex1" => Ok(ExampleKind::Ex1),
            "ex2" => Ok(ExampleKind::Ex2),
            _ => Err(Error::InvalidArgument(format!("unknown example '{s}' (expected ex1 or ex2)"))),
        }
    }
}

/// Parses a real number or a fraction such as `3/2`.
pub fn parse_fraction(s: &str) -> Result<f64> {
    let bad = || Error::InvalidArgument(format!("not a number: '{s}'"));
    let v = match s.split_once('/') {
        Some((a, b)) => {
            let (a, b): (f64, f64) = (a.trim().parse().map_err(|_| bad())?, b.trim().parse().map_err(|_| bad())?);
            a / b
        }
        None => s.trim().parse().map_err(|_| bad())?,
    };
    if v.is_finite() {
        Ok(v)
    } else {
        Err(bad())
    }
}

/// How the primal grid of each level is produced.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum GridSpec {
    /// `n × n` squares.
    Square,
    /// Squares with interior vertices moved by up to `delta·h`.
    Perturbed { delta: f64, seed: u64 },
    /// A fixed mesh read from disk; the level only labels the output.
    File(PathBuf),
}

impl GridSpec {
    pub fn build(&self, domain: Rect, n: usize) -> Result<StaggeredMesh> {
        match self {
            GridSpec::Square => build_square_mesh(n, domain),
            GridSpec::Perturbed { delta, seed } => {
                Ok(perturb_mesh(&build_square_mesh(n, domain)?, *delta, *seed, DEFAULT_RHO)?.mesh)
            }
            GridSpec::File(path) => read_mesh(path),
        }
    }
}

impl FromStr for GridSpec {
    type Err = Error;

    /// `square`, `perturbed:<delta>:<seed>` or `file:<path>`.
    fn from_str(s: &str) -> Result<Self> {
        if s == "square" {
            return Ok(GridSpec::Square);
        }
        if let Some(path) = s.strip_prefix("file:") {
            return Ok(GridSpec::File(PathBuf::from(path)));
        }
        if let Some(rest) = s.strip_prefix("perturbed:") {
            let bad = || Error::InvalidArgument(format!("bad grid '{s}' (expected perturbed:<delta>:<seed>)"));
            let (d, seed) = rest.split_once(':').ok_or_else(bad)?;
            return Ok(GridSpec::Perturbed {
                delta: d.parse().map_err(|_| bad())?,
                seed: seed.parse().map_err(|_| bad())?,
            });
        }
        Err(Error::InvalidArgument(format!("unknown grid '{s}'")))
    }
}

impl fmt::Display for GridSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            GridSpec::Square => f.write_str("square"),
            GridSpec::Perturbed { delta, seed } => write!(f, "perturbed:{delta}:{seed}"),
            GridSpec::File(p) => write!(f, "file:{}", p.display()),
        }
    }
}

/// Solver and quadrature settings shared by every case.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct SolveOptions {
    pub solver: SolverKind,
    /// Composite levels added to every non-polynomial quadrature.
    pub extra_quad_levels: usize,
    /// Also solve with the other method and record the difference.
    pub cross_check: bool,
    /// Grade quadrature towards the solution's singular point, if any.
    pub graded_quadrature: bool,
}

impl Default for SolveOptions {
    fn default() -> Self {
        SolveOptions { solver: SolverKind::Direct, extra_quad_levels: 0, cross_check: false, graded_quadrature: true }
    }
}

/// Everything produced by one solve.
#[derive(Debug, Clone)]
pub struct CaseResult {
    pub report: ErrorReport,
    pub energy: EnergyCheck,
    /// `‖x_direct - x_condensed‖ / ‖x_direct‖` when cross-checked.
    pub solver_agreement: Option<f64>,
    /// Largest relative residual over all solves of the case.
    pub max_residual: f64,
    pub mesh: StaggeredMesh,
    pub scalar: DofMap,
    pub vector: DofMap,
    pub ops: AssembledOperators,
    pub system: ComplexSparseSystem,
    pub u_h: FieldVector,
    pub p_h: FieldVector,
}

fn check_degree(m: usize) -> Result<()> {
    if m > MAX_DEGREE {
        return Err(Error::InvalidArgument(format!("order {m} exceeds {MAX_DEGREE}")));
    }
    Ok(())
}

fn relative_difference(a: &[C64], b: &[C64]) -> f64 {
    let d: Vec<C64> = a.iter().zip(b).map(|(x, y)| x - y).collect();
    let s = norm2(a);
    if s == 0.0 {
        norm2(&d)
    } else {
        norm2(&d) / s
    }
}

fn other(kind: SolverKind) -> SolverKind {
    match kind {
        SolverKind::Direct => SolverKind::Condensed,
        SolverKind::Condensed => SolverKind::Direct,
    }
}

/// Discretizes and solves the Helmholtz problem for `solution` on `mesh`,
/// then measures the errors. `n` labels the level in the report.
pub fn solve_on_mesh(
    mesh: StaggeredMesh,
    n: usize,
    solution: &ManufacturedSolution,
    m: usize,
    options: SolveOptions,
) -> Result<CaseResult> {
    check_degree(m)?;
    let start = Instant::now();
    let kappa = solution.kappa;
    let singular = solution.singular_point().filter(|_| options.graded_quadrature);
    let scalar = build_scalar_space(&mesh, m)?;
    let vector = build_vector_space(&mesh, m)?;
    let ops = assemble_operators(&mesh, &scalar, &vector)?;
    let quad =
        Integrator::new(2 * m + 2, kappa)?.with_extra_levels(options.extra_quad_levels).with_singular_point(singular);
    let (f_vec, g_vec) =
        assemble_loads(&mesh, &scalar, &quad, |p| solution.mixed_source(p), |p, nrm| solution.boundary_datum(p, nrm))?;
    let system = build_helmholtz_system(&ops, kappa, &f_vec, &g_vec)?;
    let primary: SolveReport = solve_system(&ops, &system, options.solver)?;
    let mut max_residual = primary.relative_residual;
    let solver_agreement = if options.cross_check {
        let second = solve_system(&ops, &system, other(options.solver))?;
        max_residual = max_residual.max(second.relative_residual);
        Some(relative_difference(&primary.solution, &second.solution))
    } else {
        None
    };
    let energy = energy_identities(&ops, &system, &primary.solution)?;
    let (p, u) = system.split(&primary.solution);
    let u_h = FieldVector { kind: SpaceKind::Scalar, values: u.to_vec() };
    let p_h = FieldVector { kind: SpaceKind::Vector, values: p.to_vec() };

    let equad = error_integrator(m, kappa, singular)?.with_extra_levels(options.extra_quad_levels);
    let err_u_l2 = l2_error_scalar(&mesh, &scalar, &u_h, &equad, |x| solution.u(x))?;
    let err_p_l2 = l2_error_vector(&mesh, &vector, &p_h, &equad, |x| solution.p(x))?;
    let ihu = project_ih(&mesh, &scalar, &equad, |x| solution.u(x))?;
    let diff = FieldVector {
        kind: SpaceKind::Scalar,
        values: ihu.values.iter().zip(&u_h.values).map(|(a, b)| a - b).collect(),
    };
    let err_ihu_uh = l2_error_scalar(&mesh, &scalar, &diff, &equad, |_| C64::new(0.0, 0.0))?;

    let report = ErrorReport {
        n,
        h: 1.0 / n as f64,
        kappa,
        m,
        dof_u: scalar.dim,
        dof_p: vector.dim,
        err_u_l2,
        err_p_l2,
        err_ihu_uh,
        residual: primary.relative_residual,
        wall_ms: start.elapsed().as_secs_f64() * 1e3,
    };
    Ok(CaseResult { report, energy, solver_agreement, max_residual, mesh, scalar, vector, ops, system, u_h, p_h })
}

/// One `(example, ξ, κ, m, n)` solve.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CaseConfig {
    pub example: ExampleKind,
    pub xi: f64,
    pub kappa: f64,
    pub m: usize,
    pub n: usize,
    pub grid: GridSpec,
    pub options: SolveOptions,
}

pub fn run_solve(case: &CaseConfig) -> Result<CaseResult> {
    if case.n == 0 {
        return Err(Error::InvalidArgument("level must be at least 1".into()));
    }
    let solution = case.example.solution(case.kappa, case.xi)?;
    let mesh = case.grid.build(case.example.domain(), case.n)?;
    solve_on_mesh(mesh, case.n, &solution, case.m, case.options)
}

/// A refinement study over wave numbers, orders and levels.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StudyConfig {
    pub example: ExampleKind,
    pub xi: f64,
    pub kappas: Vec<f64>,
    pub orders: Vec<usize>,
    pub grid: GridSpec,
    /// Subdivisions per unit length, coarse to fine.
    pub levels: Vec<usize>,
    pub options: SolveOptions,
}

/// `n0, 2n0, 4n0, ...` up to `n1`.
pub fn doubling_levels(n0: usize, n1: usize) -> Result<Vec<usize>> {
    if n0 == 0 || n1 < n0 {
        return Err(Error::InvalidArgument(format!("bad level range {n0}:{n1}")));
    }
    Ok(std::iter::successors(Some(n0), |&n| Some(2 * n)).take_while(|&n| n <= n1).collect())
}

impl StudyConfig {
    pub fn validate(&self) -> Result<()> {
        if self.kappas.is_empty() || self.orders.is_empty() || self.levels.is_empty() {
            return Err(Error::InvalidArgument("need at least one wave number, order and level".into()));
        }
        if let Some(k) = self.kappas.iter().find(|k| !(**k > 0.0 && k.is_finite())) {
            return Err(Error::InvalidArgument(format!("wave number must be positive, got {k}")));
        }
        for &m in &self.orders {
            check_degree(m)?;
        }
        if self.levels.contains(&0) {
            return Err(Error::InvalidArgument("level must be at least 1".into()));
        }
        Ok(())
    }

    /// Cases in output order: κ, then m, then level.
    pub fn cases(&self) -> Vec<CaseConfig> {
        let mut out = Vec::new();
        for &kappa in &self.kappas {
            for &m in &self.orders {
                for &n in &self.levels {
                    out.push(CaseConfig {
                        example: self.example,
                        xi: self.xi,
                        kappa,
                        m,
                        n,
                        grid: self.grid.clone(),
                        options: self.options,
                    });
                }
            }
        }
        out
    }
}

/// Refinement record of one `(κ, m)` pair.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StudySeries {
    pub example: ExampleKind,
    pub xi: f64,
    pub kappa: f64,
    pub m: usize,
    pub record: ConvergenceRecord,
}

/// Runs every case (concurrently) and groups the reports into series.
pub fn run_convergence(config: &StudyConfig) -> Result<Vec<StudySeries>> {
    config.validate()?;
    let cases = config.cases();
    let reports: Vec<ErrorReport> = cases.par_iter().map(|c| run_solve(c).map(|r| r.report)).collect::<Result<_>>()?;
    let per_series = config.levels.len();
    Ok(cases
        .chunks(per_series)
        .zip(reports.chunks(per_series))
        .map(|(cs, rs)| StudySeries {
            example: config.example,
            xi: config.xi,
            kappa: cs[0].kappa,
            m: cs[0].m,
            record: compute_rates(rs.to_vec()),
        })
        .collect())
}
