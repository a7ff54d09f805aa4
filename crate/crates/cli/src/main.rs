//! `sdg`: mesh generation, single solves and convergence studies.
//!
//! Exit codes: 0 success, 1 configuration error, 2 numerical failure, 3 I/O error.

use std::fs::{self, File};
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context};
use clap::{Args, Parser, Subcommand};
use sdg_core::mesh::{write_mesh, MeshFile};
use sdg_core::solver::SolverKind;
use sdg_core::study::{
    doubling_levels, format_sig, parse_fraction, run_convergence, run_solve, write_csv, write_svg_plot, write_vtk,
    CaseConfig, ExampleKind, GridSpec, SolveOptions, StudyConfig,
};

#[derive(Parser, Debug)]
#[command(name = "sdg", version, about = "Staggered DG solver for the Helmholtz equation with impedance boundary")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Build a primal mesh and write it as JSON.
    GenMesh(GenMeshArgs),
    /// Solve one case and write its error report and a VTK field file.
    Solve(SolveArgs),
    /// Run a refinement study and write CSV and SVG output.
    Convergence(ConvergenceArgs),
}

#[derive(Args, Debug)]
struct GridArgs {
    /// Test problem: ex1 or ex2.
    #[arg(long, default_value = "ex2")]
    example: String,
    /// Primal grid: square, perturbed:<delta>[:<seed>] or file:<path>.
    #[arg(long, default_value = "square")]
    grid: String,
    /// Seed for perturbed grids that do not name one.
    #[arg(long, default_value_t = 0)]
    seed: u64,
}

#[derive(Args, Debug)]
struct SolverArgs {
    /// Order of the corner solution (ex2), e.g. 1, 3/2 or 2/3.
    #[arg(long, default_value = "1")]
    xi: String,
    /// direct or condensed.
    #[arg(long, default_value = "direct")]
    solver: String,
    /// Extra composite levels for load and error quadrature.
    #[arg(long = "quad-level", default_value_t = 0)]
    quad_level: usize,
    /// Solve with both methods and report their difference.
    #[arg(long)]
    cross_check: bool,
    /// Use plain composite quadrature even near a singular point.
    #[arg(long)]
    no_grading: bool,
}

#[derive(Args, Debug)]
struct GenMeshArgs {
    #[command(flatten)]
    grid: GridArgs,
    /// Subdivisions per unit length.
    #[arg(long, default_value_t = 8)]
    n: usize,
    /// Output file.
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args, Debug)]
struct SolveArgs {
    #[command(flatten)]
    grid: GridArgs,
    #[command(flatten)]
    solver: SolverArgs,
    /// Wave number.
    #[arg(long, default_value_t = 10.0)]
    kappa: f64,
    /// Polynomial order.
    #[arg(long, default_value_t = 1)]
    order: usize,
    /// Subdivisions per unit length.
    #[arg(long, default_value_t = 8)]
    n: usize,
    /// Output directory for report.json and solution.vtk.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct ConvergenceArgs {
    #[command(flatten)]
    grid: GridArgs,
    #[command(flatten)]
    solver: SolverArgs,
    /// Comma-separated wave numbers.
    #[arg(long, default_value = "10", value_delimiter = ',')]
    kappa: Vec<f64>,
    /// Comma-separated polynomial orders.
    #[arg(long, default_value = "1", value_delimiter = ',')]
    order: Vec<usize>,
    /// Level range n0:n1; n doubles from n0 while n <= n1.
    #[arg(long, default_value = "2:64")]
    levels: String,
    /// Output directory for convergence.csv and convergence.svg.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Leave wall_ms empty so the CSV is byte-reproducible.
    #[arg(long)]
    no_timing: bool,
}

/// A configuration problem detected by the front end.
#[derive(Debug)]
struct ConfigError(String);

impl std::fmt::Display for ConfigError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::error::Error for ConfigError {}

fn config<T>(r: sdg_core::Result<T>) -> anyhow::Result<T> {
    r.map_err(|e| ConfigError(e.to_string()).into())
}

fn parse_grid(args: &GridArgs) -> anyhow::Result<(ExampleKind, GridSpec)> {
    let example = config(args.example.parse())?;
    let grid = match args.grid.strip_prefix("perturbed:") {
        Some(rest) if !rest.contains(':') => format!("perturbed:{rest}:{}", args.seed),
        _ => args.grid.clone(),
    };
    Ok((example, config(grid.parse())?))
}

fn parse_options(args: &SolverArgs) -> anyhow::Result<(f64, SolveOptions)> {
    let xi = config(parse_fraction(&args.xi))?;
    let solver: SolverKind = config(args.solver.parse())?;
    Ok((
        xi,
        SolveOptions {
            solver,
            extra_quad_levels: args.quad_level,
            cross_check: args.cross_check,
            graded_quadrature: !args.no_grading,
        },
    ))
}

fn parse_levels(s: &str) -> anyhow::Result<Vec<usize>> {
    let bad = || ConfigError(format!("bad level range '{s}' (expected n0:n1)"));
    let (a, b) = s.split_once(':').unwrap_or((s, s));
    let n0 = a.parse().map_err(|_| bad())?;
    let n1 = b.parse().map_err(|_| bad())?;
    config(doubling_levels(n0, n1))
}

fn create(path: &Path) -> anyhow::Result<BufWriter<File>> {
    let f =
        File::create(path).map_err(sdg_core::Error::from).with_context(|| format!("creating {}", path.display()))?;
    Ok(BufWriter::new(f))
}

fn gen_mesh(args: GenMeshArgs) -> anyhow::Result<()> {
    let (example, grid) = parse_grid(&args.grid)?;
    if args.n == 0 {
        bail!(ConfigError("n must be at least 1".into()));
    }
    let mesh = grid.build(example.domain(), args.n)?;
    write_mesh(&mesh, &args.out)?;
    let file = MeshFile::from_mesh(&mesh);
    println!(
        "wrote {}: {} vertices, {} cells, {} triangles, h = {}",
        args.out.display(),
        file.vertices.len(),
        file.cells.len(),
        mesh.triangles.len(),
        format_sig(mesh.h)
    );
    Ok(())
}

fn solve(args: SolveArgs) -> anyhow::Result<()> {
    let (example, grid) = parse_grid(&args.grid)?;
    let (xi, options) = parse_options(&args.solver)?;
    let case = CaseConfig { example, xi, kappa: args.kappa, m: args.order, n: args.n, grid, options };
    let result = run_solve(&case)?;
    let r = &result.report;
    println!(
        "{example} kappa={} m={} n={}: dof_u={} dof_p={} err_u={} err_p={} err_Ihu_uh={} resid={}",
        format_sig(r.kappa),
        r.m,
        r.n,
        r.dof_u,
        r.dof_p,
        format_sig(r.err_u_l2),
        format_sig(r.err_p_l2),
        format_sig(r.err_ihu_uh),
        format_sig(r.residual)
    );
    if let Some(a) = result.solver_agreement {
        println!("direct vs condensed relative difference: {}", format_sig(a));
    }
    if let Some(dir) = args.out {
        fs::create_dir_all(&dir).map_err(sdg_core::Error::from)?;
        let mut w = create(&dir.join("report.json"))?;
        serde_json::to_writer_pretty(&mut w, r).map_err(|e| sdg_core::Error::Io(e.into()))?;
        w.flush().map_err(sdg_core::Error::from)?;
        let mut w = create(&dir.join("solution.vtk"))?;
        write_vtk(&result.mesh, &result.scalar, &result.vector, &result.u_h, &result.p_h, &mut w)?;
        w.flush().map_err(sdg_core::Error::from)?;
    }
    Ok(())
}

fn convergence(args: ConvergenceArgs) -> anyhow::Result<()> {
    let (example, grid) = parse_grid(&args.grid)?;
    let (xi, options) = parse_options(&args.solver)?;
    let levels = parse_levels(&args.levels)?;
    let study = StudyConfig { example, xi, kappas: args.kappa, orders: args.order, grid, levels, options };
    config(study.validate())?;
    let series = run_convergence(&study)?;
    let timing = !args.no_timing;
    write_csv(&series, timing, io::stdout().lock())?;
    if let Some(dir) = args.out {
        fs::create_dir_all(&dir).map_err(sdg_core::Error::from)?;
        let mut w = create(&dir.join("convergence.csv"))?;
        write_csv(&series, timing, &mut w)?;
        w.flush().map_err(sdg_core::Error::from)?;
        let mut w = create(&dir.join("convergence.svg"))?;
        write_svg_plot(&series, &mut w)?;
        w.flush().map_err(sdg_core::Error::from)?;
    }
    Ok(())
}

fn exit_code(err: &anyhow::Error) -> u8 {
    if err.downcast_ref::<ConfigError>().is_some() {
        return 1;
    }
    match err.downcast_ref::<sdg_core::Error>() {
        Some(sdg_core::Error::Io(_)) | Some(sdg_core::Error::MalformedFile { .. }) => 3,
        Some(e) if e.is_numerical() => 2,
        _ => 1,
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    let result = match cli.command {
        Command::GenMesh(a) => gen_mesh(a),
        Command::Solve(a) => solve(a),
        Command::Convergence(a) => convergence(a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(exit_code(&e))
        }
    }
}
