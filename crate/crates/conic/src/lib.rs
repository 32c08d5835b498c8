//! Solver for conic programs in standard form:
//!
//! ```text
//! minimize    cᵀx + d
//! subject to  A x = b,   x ∈ K
//! ```
//!
//! where `K` is a product of free, nonnegative, second-order and rotated
//! second-order cones. The default algorithm is a primal–dual interior-point
//! method on the homogeneous self-dual embedding; an ADMM operator-splitting
//! method is available as a lower-accuracy alternative.
//!
//! ```
//! use masolve_conic::{solve, Cone, ConicProgram, CscMatrix, SolveSettings, SolveStatus};
//!
//! // minimize t subject to (t, 1, 1) in the second-order cone
//! let p = ConicProgram {
//!     c: vec![1.0, 0.0, 0.0],
//!     d: 0.0,
//!     a: CscMatrix::from_triplets(2, 3, &[(0, 1, 1.0), (1, 2, 1.0)]),
//!     b: vec![1.0, 1.0],
//!     cones: vec![Cone::soc(3)],
//! };
//! let r = solve(&p, &SolveSettings::default()).unwrap();
//! assert_eq!(r.status, SolveStatus::Optimal);
//! assert!((r.objective - 2f64.sqrt()).abs() < 1e-7);
//! ```

mod admm;
pub mod cones;
mod equilibrate;
mod ipm;
mod kkt;
pub mod ldl;
pub mod presolve;
pub mod problem;
pub mod residuals;
pub mod sparse;

pub use cones::{Cone, ConeKind};
pub use presolve::{presolve, Presolved, VarFate};
pub use problem::{ConicProgram, ProgramDump};
pub use residuals::{kkt_residuals, Residuals};
pub use sparse::CscMatrix;

use serde::{Deserialize, Serialize};
use std::fmt::Write as _;
use std::time::Instant;

#[derive(Debug, thiserror::Error)]
pub enum SolverError {
    #[error("malformed program: {0}")]
    Malformed(String),
    #[error("invalid settings: {0}")]
    Settings(String),
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),
    #[error("numerical failure: {0}")]
    Numerical(String),
    #[error("infeasible during presolve: {0}")]
    InfeasiblePresolve(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Algorithm {
    InteriorPoint,
    OperatorSplitting,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SolveSettings {
    /// Tolerance on the normalized primal and dual residuals.
    pub eps_feas: f64,
    /// Tolerance on the normalized duality gap.
    pub eps_gap: f64,
    pub max_iterations: usize,
    pub algorithm: Algorithm,
    /// Run [`presolve`] before solving and map the solution back.
    pub presolve: bool,
    /// Ruiz equilibration passes applied to the data (0 disables scaling).
    pub equilibration_passes: usize,
}

impl Default for SolveSettings {
    fn default() -> Self {
        Self {
            eps_feas: 1e-8,
            eps_gap: 1e-8,
            max_iterations: 200,
            algorithm: Algorithm::InteriorPoint,
            presolve: true,
            equilibration_passes: 10,
        }
    }
}

impl SolveSettings {
    /// Defaults suited to the operator-splitting method, which needs many
    /// more (cheaper) iterations and rarely reaches interior-point accuracy.
    pub fn operator_splitting() -> Self {
        Self {
            eps_feas: 1e-6,
            eps_gap: 1e-6,
            max_iterations: 50_000,
            algorithm: Algorithm::OperatorSplitting,
            ..Self::default()
        }
    }

    pub fn with_tolerance(mut self, eps: f64) -> Self {
        self.eps_feas = eps;
        self.eps_gap = eps;
        self
    }

    pub fn validate(&self) -> Result<(), SolverError> {
        for (name, v) in [("eps_feas", self.eps_feas), ("eps_gap", self.eps_gap)] {
            if !(v.is_finite() && v > 0.0) {
                return Err(SolverError::Settings(format!("{name} must be positive, got {v}")));
            }
        }
        if self.max_iterations == 0 {
            return Err(SolverError::Settings("max_iterations must be at least 1".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SolveStatus {
    Optimal,
    PrimalInfeasible,
    DualInfeasible,
    IterationLimit,
    /// The method stalled (step lengths collapsed or the linear algebra
    /// broke down) before meeting the tolerances.
    InsufficientProgress,
}

impl SolveStatus {
    pub fn as_str(&self) -> &'static str {
        match self {
            Self::Optimal => "optimal",
            Self::PrimalInfeasible => "primal-infeasible",
            Self::DualInfeasible => "dual-infeasible",
            Self::IterationLimit => "iteration-limit",
            Self::InsufficientProgress => "insufficient-progress",
        }
    }
}

impl std::fmt::Display for SolveStatus {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

/// Outcome of a solve. For `Optimal` and the stalled statuses `(x, y, s)` is
/// the best candidate found; for the infeasible statuses it is the
/// normalized certificate direction.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SolveResult {
    pub status: SolveStatus,
    pub x: Vec<f64>,
    pub y: Vec<f64>,
    pub s: Vec<f64>,
    /// `cᵀx + d`
    pub objective: f64,
    pub residuals: Residuals,
    pub iterations: usize,
    /// Wall time in seconds.
    pub solve_time: f64,
}

impl SolveResult {
    pub fn primal_residual(&self) -> f64 {
        self.residuals.primal
    }
    pub fn dual_residual(&self) -> f64 {
        self.residuals.dual
    }
    pub fn gap(&self) -> f64 {
        self.residuals.gap
    }
}

/// One row of the per-iteration log.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TraceRow {
    pub iter: usize,
    pub pres: f64,
    pub dres: f64,
    pub gap: f64,
    pub mu: f64,
    pub sigma: f64,
    pub alpha: f64,
    pub tau: f64,
    pub kappa: f64,
    pub objective: f64,
}

pub const TRACE_HEADER: &str = "iter,pres,dres,gap,mu,sigma,alpha,tau,kappa,objective";

pub fn trace_to_csv(rows: &[TraceRow]) -> String {
    let mut out = String::from(TRACE_HEADER);
    out.push('\n');
    for r in rows {
        let _ = writeln!(
            out,
            "{},{:.6e},{:.6e},{:.6e},{:.6e},{:.6e},{:.6e},{:.6e},{:.6e},{:.16e}",
            r.iter, r.pres, r.dres, r.gap, r.mu, r.sigma, r.alpha, r.tau, r.kappa, r.objective
        );
    }
    out
}

/// Solve `program`. Errors are reserved for malformed input; every
/// algorithmic outcome is reported through [`SolveResult::status`].
pub fn solve(program: &ConicProgram, settings: &SolveSettings) -> Result<SolveResult, SolverError> {
    solve_traced(program, settings).map(|(r, _)| r)
}

/// [`solve`] that also returns the per-iteration log.
pub fn solve_traced(
    program: &ConicProgram,
    settings: &SolveSettings,
) -> Result<(SolveResult, Vec<TraceRow>), SolverError> {
    settings.validate()?;
    program.validate()?;
    let start = Instant::now();
    let mut trace = Vec::new();

    let pre = if settings.presolve { Some(presolve(program)?) } else { None };
    let work = pre.as_ref().map(|p| &p.program).unwrap_or(program);

    let raw = match settings.algorithm {
        Algorithm::InteriorPoint => ipm::solve(work, settings, &mut trace)?,
        Algorithm::OperatorSplitting => admm::solve(work, settings, &mut trace)?,
    };

    let (x, y, s) = match &pre {
        Some(p) => {
            let x = if raw.status == SolveStatus::DualInfeasible {
                // A recession direction: fixed variables do not move.
                let mut x = p.restore(&raw.x);
                for (j, f) in p.vars.iter().enumerate() {
                    if let VarFate::Fixed(_) = f {
                        x[j] = 0.0;
                    }
                }
                x
            } else {
                p.restore(&raw.x)
            };
            let certificate = raw.status == SolveStatus::PrimalInfeasible;
            let (y, s) = p.postsolve_dual(program, &raw.y, &raw.s, certificate);
            (x, y, s)
        }
        None => (raw.x, raw.y, raw.s),
    };
    let residuals = kkt_residuals(program, &x, &y, &s)?;
    let result = SolveResult {
        status: raw.status,
        objective: program.objective(&x),
        x,
        y,
        s,
        residuals,
        iterations: raw.iterations,
        solve_time: start.elapsed().as_secs_f64(),
    };
    Ok((result, trace))
}

/// Solution of the working (presolved) program before mapping back.
pub(crate) struct RawSolution {
    pub status: SolveStatus,
    pub x: Vec<f64>,
    pub y: Vec<f64>,
    pub s: Vec<f64>,
    pub iterations: usize,
}
