//! `masolve`: solve discrete Monge–Ampère Dirichlet problems from the command line.
//!
//! Exit status is 0 when every solve is optimal, 2 when some solve ends with
//! another status, and 1 on usage or data errors.

use clap::{Args, Parser, Subcommand, ValueEnum};
use masolve_conic::{SolveSettings, SolveStatus};
use masolve_core::harness::{convergence_sweep, run_case, solve_spec, test_case, ConvergenceReport};
use masolve_core::{InteriorFunction, MaError, MeshFunction, Phi, ProgramSpec, Scheme, StencilSet};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

#[derive(Parser)]
#[command(name = "masolve", version, about = "Monge–Ampère Dirichlet problems via conic programming")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Solve one test case on one mesh.
    Run(RunArgs),
    /// Solve one test case on several meshes and report observed orders.
    Sweep(SweepArgs),
    /// Convex envelope of boundary data or of an obstacle given as grid CSV.
    Envelope(EnvelopeArgs),
}

#[derive(Clone, Copy, ValueEnum)]
enum SchemeArg {
    Standard,
    Monotone,
    Envelope,
}

#[derive(Clone, Copy, ValueEnum)]
enum Format {
    Csv,
    Json,
}

#[derive(Args)]
struct Common {
    /// Test case: test1, test2, test3, test4 or dirac2.
    #[arg(long)]
    case: String,
    #[arg(long, default_value = "sqrt1pp")]
    phi: Phi,
    #[arg(long, value_enum, default_value = "standard")]
    scheme: SchemeArg,
    #[arg(long, default_value_t = 1, value_parser = clap::value_parser!(u8).range(1..=2))]
    stencil_width: u8,
    #[command(flatten)]
    solver: SolverArgs,
    /// Report destination (stdout when omitted).
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long, value_enum, default_value = "csv")]
    format: Format,
}

#[derive(Args)]
struct SolverArgs {
    /// Feasibility and gap tolerance.
    #[arg(long, default_value_t = 1e-8)]
    tol: f64,
    /// Separate duality gap tolerance. Degenerate problems such as
    /// envelopes converge like the square root of the gap.
    #[arg(long)]
    gap: Option<f64>,
    #[arg(long, default_value_t = 200)]
    max_iter: usize,
}

impl SolverArgs {
    fn settings(&self) -> SolveSettings {
        let base = SolveSettings::default().with_tolerance(self.tol);
        SolveSettings {
            max_iterations: self.max_iter,
            eps_gap: self.gap.unwrap_or(base.eps_gap),
            ..base
        }
    }
}

#[derive(Args)]
struct RunArgs {
    #[command(flatten)]
    common: Common,
    #[arg(long = "N")]
    n: usize,
    /// Write the assembled conic program as JSON.
    #[arg(long)]
    dump_program: Option<PathBuf>,
    /// Write the computed mesh function as grid CSV.
    #[arg(long)]
    surface: Option<PathBuf>,
}

#[derive(Args)]
struct SweepArgs {
    #[command(flatten)]
    common: Common,
    /// Comma-separated mesh sizes.
    #[arg(long = "N", value_delimiter = ',', default_value = "4,8,16,32,64")]
    ns: Vec<usize>,
}

#[derive(Args)]
#[group(required = true, multiple = false, id = "data")]
struct EnvelopeSource {
    /// Grid CSV whose boundary values are enveloped.
    #[arg(long, group = "data")]
    boundary: Option<PathBuf>,
    /// Grid CSV of a function on the closed mesh to envelope from below.
    #[arg(long, group = "data")]
    obstacle: Option<PathBuf>,
}

#[derive(Args)]
struct EnvelopeArgs {
    #[command(flatten)]
    source: EnvelopeSource,
    #[arg(long, default_value = "sqrt1pp")]
    phi: Phi,
    #[command(flatten)]
    solver: SolverArgs,
    /// Envelope destination (stdout when omitted).
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long, value_enum, default_value = "csv")]
    format: Format,
}

#[derive(Debug)]
enum CliError {
    Ma(MaError),
    Io(PathBuf, std::io::Error),
}

impl From<MaError> for CliError {
    fn from(e: MaError) -> Self {
        CliError::Ma(e)
    }
}

impl std::fmt::Display for CliError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            CliError::Ma(e) => write!(f, "{e}"),
            CliError::Io(p, e) => write!(f, "{}: {e}", p.display()),
        }
    }
}

fn write_or_print(path: Option<&Path>, text: &str) -> Result<(), CliError> {
    match path {
        Some(p) => std::fs::write(p, text).map_err(|e| CliError::Io(p.to_path_buf(), e)),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

fn read(path: &Path) -> Result<String, CliError> {
    std::fs::read_to_string(path).map_err(|e| CliError::Io(path.to_path_buf(), e))
}

fn scheme(common: &Common) -> Result<Scheme, MaError> {
    Ok(match common.scheme {
        SchemeArg::Standard => Scheme::Standard,
        SchemeArg::Monotone => Scheme::Monotone(StencilSet::new(common.stencil_width as usize)?),
        SchemeArg::Envelope => Scheme::EnvelopeBoundary,
    })
}

fn render(report: &ConvergenceReport, format: Format) -> String {
    match format {
        Format::Csv => report.to_csv(),
        Format::Json => report.to_json() + "\n",
    }
}

fn run(args: &RunArgs) -> Result<bool, CliError> {
    let c = &args.common;
    let case = test_case(&c.case)?;
    let scheme = scheme(c)?;
    let result = run_case(&case, args.n, c.phi, &scheme, &c.solver.settings())?;
    if let Some(p) = &args.dump_program {
        let text = result.solved.program.program.to_json();
        std::fs::write(p, text).map_err(|e| CliError::Io(p.clone(), e))?;
    }
    if let Some(p) = &args.surface {
        std::fs::write(p, result.solved.solution.to_csv()).map_err(|e| CliError::Io(p.clone(), e))?;
    }
    let optimal = result.is_optimal();
    let report = ConvergenceReport {
        case: case.name.to_string(),
        phi: c.phi,
        scheme: scheme.name().to_string(),
        rows: vec![result.row],
    };
    write_or_print(c.out.as_deref(), &render(&report, c.format))?;
    Ok(optimal)
}

fn sweep(args: &SweepArgs) -> Result<bool, CliError> {
    let c = &args.common;
    let case = test_case(&c.case)?;
    let report = convergence_sweep(&case, &args.ns, c.phi, &scheme(c)?, &c.solver.settings())?;
    for row in report.rows.iter().filter(|r| r.status.starts_with("error")) {
        eprintln!("N = {}: {}", row.n, row.status);
    }
    write_or_print(c.out.as_deref(), &render(&report, c.format))?;
    Ok(report.rows.iter().all(|r| r.status == SolveStatus::Optimal.as_str()))
}

fn envelope(args: &EnvelopeArgs) -> Result<bool, CliError> {
    let (path, obstacle) = match (&args.source.boundary, &args.source.obstacle) {
        (Some(p), None) => (p, false),
        (None, Some(p)) => (p, true),
        _ => unreachable!("clap enforces exactly one source"),
    };
    let data = MeshFunction::from_csv(&read(path)?)?;
    let mesh = data.mesh();
    let spec = ProgramSpec {
        mesh,
        f: InteriorFunction::new(mesh, vec![0.0; mesh.num_interior()]),
        g: data.clone(),
        phi: args.phi,
        scheme: if obstacle {
            Scheme::EnvelopeObstacle(data)
        } else {
            Scheme::EnvelopeBoundary
        },
    };
    let solved = solve_spec(&spec, &args.solver.settings())?;
    let r = &solved.result;
    eprintln!(
        "status {} after {} iterations, objective {:.10e}",
        r.status, r.iterations, r.objective
    );
    let text = match args.format {
        Format::Csv => solved.solution.to_csv(),
        Format::Json => solved.solution.to_json() + "\n",
    };
    write_or_print(args.out.as_deref(), &text)?;
    Ok(r.status == SolveStatus::Optimal)
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { ExitCode::from(1) } else { ExitCode::SUCCESS };
        }
    };
    let outcome = match &cli.command {
        Command::Run(a) => run(a),
        Command::Sweep(a) => sweep(a),
        Command::Envelope(a) => envelope(a),
    };
    match outcome {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(2),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(1)
        }
    }
}
