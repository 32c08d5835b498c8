//! Test cases with known solutions, convergence sweeps and a-posteriori checks.

use crate::grid::{backward_gradient, InteriorFunction, Mesh, MeshFunction};
use crate::operators::{det_and_lambda_min, discrete_hessian, j_h, monotone_ma, Phi, StencilSet};
use crate::program::{build_program, MaProgram, ProgramSpec, Scheme};
use crate::MaError;
use masolve_conic::{solve, SolveResult, SolveSettings, SolveStatus};
use rayon::prelude::*;
use serde::Serialize;
use std::f64::consts::FRAC_PI_2;
use std::time::Instant;

/// Right-hand side of a test case.
#[derive(Debug, Clone)]
pub enum Source {
    Density(fn(f64, f64) -> f64),
    /// Point masses `(x, y, mass)`; they must sit on interior nodes.
    Atoms(Vec<(f64, f64, f64)>),
}

#[derive(Debug, Clone)]
pub struct TestCase {
    pub name: &'static str,
    pub source: Source,
    /// Exact solution; its boundary trace is the Dirichlet data.
    pub exact: fn(f64, f64) -> f64,
    /// Energies the case is meant to be run with.
    pub phis: Vec<Phi>,
}

fn test1_exact(x: f64, y: f64) -> f64 {
    (0.5 * (x * x + y * y)).exp()
}

fn test1_f(x: f64, y: f64) -> f64 {
    let r2 = x * x + y * y;
    (1.0 + r2) * r2.exp()
}

fn test2_exact(x: f64, y: f64) -> f64 {
    -(2.0 - x * x - y * y).sqrt()
}

fn test2_f(x: f64, y: f64) -> f64 {
    let d = 2.0 - x * x - y * y;
    2.0 / (d * d)
}

fn test3_exact(x: f64, y: f64) -> f64 {
    (x - 0.5).powi(2) + (y - 0.5).powi(2)
}

fn test4_exact(x: f64, _y: f64) -> f64 {
    (x - 0.5).abs()
}

fn dirac2_exact(x: f64, y: f64) -> f64 {
    if 0.25 < x && x < 0.75 {
        (y - 0.5).abs()
    } else {
        let d = |cx: f64| (x - cx).hypot(y - 0.5);
        d(0.25).min(d(0.75))
    }
}

const ALL_PHI: [Phi; 4] = [Phi::Sqrt1pp, Phi::L1, Phi::Euclid, Phi::Squared];

/// `test1`, `test2`, `test3`, `test4` or `dirac2`.
pub fn test_case(name: &str) -> Result<TestCase, MaError> {
    let case = match name {
        "test1" => TestCase {
            name: "test1",
            source: Source::Density(test1_f),
            exact: test1_exact,
            phis: ALL_PHI.to_vec(),
        },
        "test2" => TestCase {
            name: "test2",
            source: Source::Density(test2_f),
            exact: test2_exact,
            phis: ALL_PHI.to_vec(),
        },
        "test3" => TestCase {
            name: "test3",
            source: Source::Density(|_, _| 4.0),
            exact: test3_exact,
            phis: ALL_PHI.to_vec(),
        },
        "test4" => TestCase {
            name: "test4",
            source: Source::Density(|_, _| 0.0),
            exact: test4_exact,
            phis: ALL_PHI.to_vec(),
        },
        "dirac2" => TestCase {
            name: "dirac2",
            source: Source::Atoms(vec![(0.25, 0.5, FRAC_PI_2), (0.75, 0.5, FRAC_PI_2)]),
            exact: dirac2_exact,
            phis: vec![Phi::Euclid, Phi::Squared],
        },
        other => return Err(MaError::UnknownCase(other.to_string())),
    };
    Ok(case)
}

pub const CASE_NAMES: [&str; 5] = ["test1", "test2", "test3", "test4", "dirac2"];

fn gcd(a: usize, b: usize) -> usize {
    if b == 0 {
        a
    } else {
        gcd(b, a % b)
    }
}

/// Smallest `q` with `c·q` an integer, if `c` is a dyadic-ish rational with a
/// small denominator.
fn denominator(c: f64) -> Option<usize> {
    (1..=4096).find(|&q| {
        let t = c * q as f64;
        (t - t.round()).abs() <= 1e-9 * q as f64
    })
}

/// Lumps point masses onto nodes: `f_h = mass / h²` at each atom, zero
/// elsewhere, so that `h² Σ f_h` equals the total mass.
pub fn discretize_measure(atoms: &[(f64, f64, f64)], mesh: Mesh) -> Result<InteriorFunction, MaError> {
    let n = mesh.n();
    let mut required = 1;
    for &(x, y, _) in atoms {
        for c in [x, y] {
            let q = denominator(c).ok_or_else(|| MaError::AtomPlacement(format!("coordinate {c} is not rational")))?;
            required = required / gcd(required, q) * q;
        }
    }
    let mut f = vec![0.0; mesh.num_interior()];
    let h2 = mesh.h() * mesh.h();
    for &(x, y, mass) in atoms {
        let (fi, fj) = (x * n as f64, y * n as f64);
        let (i, j) = (fi.round(), fj.round());
        if (fi - i).abs() > 1e-9 || (fj - j).abs() > 1e-9 {
            return Err(MaError::AtomPlacement(format!(
                "atom at ({x}, {y}) is not a node of the N = {n} mesh; N must be divisible by {required}"
            )));
        }
        let (i, j) = (i as usize, j as usize);
        if mesh.is_boundary(i, j) {
            return Err(MaError::AtomPlacement(format!("atom at ({x}, {y}) lies on the boundary")));
        }
        f[mesh.interior_index(i, j)] += mass / h2;
    }
    Ok(InteriorFunction::new(mesh, f))
}

impl TestCase {
    pub fn rhs(&self, mesh: Mesh) -> Result<InteriorFunction, MaError> {
        match &self.source {
            Source::Density(f) => InteriorFunction::sample(mesh, f),
            Source::Atoms(atoms) => discretize_measure(atoms, mesh),
        }
    }

    pub fn exact_on(&self, mesh: Mesh) -> Result<MeshFunction, MaError> {
        MeshFunction::sample(mesh, self.exact)
    }

    pub fn spec(&self, n: usize, phi: Phi, scheme: &Scheme) -> Result<ProgramSpec, MaError> {
        let mesh = Mesh::new(n)?;
        Ok(ProgramSpec {
            mesh,
            f: self.rhs(mesh)?,
            g: self.exact_on(mesh)?,
            phi,
            scheme: scheme.clone(),
        })
    }
}

/// An assembled program, its solver result and the recovered mesh function.
#[derive(Debug, Clone)]
pub struct Solved {
    pub program: MaProgram,
    pub result: SolveResult,
    pub solution: MeshFunction,
}

pub fn solve_spec(spec: &ProgramSpec, settings: &SolveSettings) -> Result<Solved, MaError> {
    let program = build_program(spec)?;
    let result = solve(&program.program, settings)?;
    let solution = program.extract(&result.x);
    Ok(Solved {
        program,
        result,
        solution,
    })
}

/// One line of a convergence report.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ReportRow {
    pub n: usize,
    pub h: f64,
    /// `max |u_h − u|` over interior nodes.
    pub error: f64,
    /// `log₂(e_prev / e)` against the previous (coarser) row.
    pub order: Option<f64>,
    /// `J_h(u_h)`.
    pub objective: f64,
    /// `max |M[u_h] − f_h|` for the monotone scheme.
    pub residual: Option<f64>,
    pub status: String,
    pub iterations: usize,
    /// Largest normalized KKT residual of the solver result.
    pub kkt: f64,
    /// Wall time in seconds; not part of report equality.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub seconds: Option<f64>,
}

impl ReportRow {
    /// The row with wall time removed.
    pub fn timeless(&self) -> ReportRow {
        ReportRow {
            seconds: None,
            ..self.clone()
        }
    }

    fn failed(n: usize, err: &MaError) -> ReportRow {
        ReportRow {
            n,
            h: 1.0 / n as f64,
            error: f64::NAN,
            order: None,
            objective: f64::NAN,
            residual: None,
            status: format!("error: {err}"),
            iterations: 0,
            kkt: f64::NAN,
            seconds: None,
        }
    }
}

#[derive(Debug, Clone)]
pub struct CaseRun {
    pub row: ReportRow,
    pub solved: Solved,
    pub exact: MeshFunction,
}

impl CaseRun {
    pub fn is_optimal(&self) -> bool {
        self.solved.result.status == SolveStatus::Optimal
    }
}

/// Solves one case on one mesh and measures the error against the exact
/// solution. `order` is left empty; sweeps fill it in.
pub fn run_case(
    case: &TestCase,
    n: usize,
    phi: Phi,
    scheme: &Scheme,
    settings: &SolveSettings,
) -> Result<CaseRun, MaError> {
    let start = Instant::now();
    let spec = case.spec(n, phi, scheme)?;
    let solved = solve_spec(&spec, settings)?;
    let exact = case.exact_on(spec.mesh)?;
    let residual = match scheme {
        Scheme::Monotone(stencil) => Some(check_monotone_theorem(&solved.solution, &spec.f, stencil)?),
        _ => None,
    };
    let row = ReportRow {
        n,
        h: spec.mesh.h(),
        error: solved.solution.interior_max_diff(&exact),
        order: None,
        objective: j_h(&solved.solution, phi),
        residual,
        status: solved.result.status.as_str().to_string(),
        iterations: solved.result.iterations,
        kkt: solved.result.residuals.max(),
        seconds: Some(start.elapsed().as_secs_f64()),
    };
    Ok(CaseRun { row, solved, exact })
}

/// Sweep results, ordered by increasing `N`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ConvergenceReport {
    pub case: String,
    pub phi: Phi,
    pub scheme: String,
    pub rows: Vec<ReportRow>,
}

pub const REPORT_HEADER: &str = "h,error,order,objective,residual,status,iters,seconds";

fn opt(v: Option<f64>) -> String {
    v.map(|x| format!("{x:.6e}")).unwrap_or_default()
}

impl ConvergenceReport {
    pub fn to_csv(&self) -> String {
        let mut out = format!("{REPORT_HEADER}\n");
        for r in &self.rows {
            out += &format!(
                "{:.6e},{:.6e},{},{:.10e},{},{},{},{}\n",
                r.h,
                r.error,
                opt(r.order),
                r.objective,
                opt(r.residual),
                r.status,
                r.iterations,
                r.seconds.map(|s| format!("{s:.3}")).unwrap_or_default()
            );
        }
        out
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }

    pub fn errors(&self) -> Vec<f64> {
        self.rows.iter().map(|r| r.error).collect()
    }

    /// The report with wall times removed, for reproducibility checks.
    pub fn timeless(&self) -> ConvergenceReport {
        ConvergenceReport {
            rows: self.rows.iter().map(ReportRow::timeless).collect(),
            ..self.clone()
        }
    }
}

/// Thread count from `MASOLVE_THREADS`, if set to a positive integer.
pub fn thread_limit() -> Option<usize> {
    std::env::var("MASOLVE_THREADS").ok()?.trim().parse().ok().filter(|&t| t > 0)
}

/// Runs `run_case` for each `N` (in parallel) and fills in observed orders.
/// Failures on a single mesh are recorded in that row's status.
pub fn convergence_sweep(
    case: &TestCase,
    ns: &[usize],
    phi: Phi,
    scheme: &Scheme,
    settings: &SolveSettings,
) -> Result<ConvergenceReport, MaError> {
    settings.validate()?;
    let mut ns = ns.to_vec();
    ns.sort_unstable();
    ns.dedup();
    let work = || -> Vec<ReportRow> {
        ns.par_iter()
            .map(|&n| match run_case(case, n, phi, scheme, settings) {
                Ok(run) => run.row,
                Err(e) => ReportRow::failed(n, &e),
            })
            .collect()
    };
    let mut rows = match thread_limit() {
        Some(t) => rayon::ThreadPoolBuilder::new()
            .num_threads(t)
            .build()
            .map_err(|e| MaError::InvalidData(format!("thread pool: {e}")))?
            .install(work),
        None => work(),
    };
    let floor = 10.0 * settings.eps_feas;
    for k in 1..rows.len() {
        let (a, b) = (rows[k - 1].error, rows[k].error);
        if a > floor && b > floor {
            rows[k].order = Some((a / b).log2());
        }
    }
    Ok(ConvergenceReport {
        case: case.name.to_string(),
        phi,
        scheme: scheme.name().to_string(),
        rows,
    })
}

/// `max |M[u] − f|` over interior nodes.
pub fn check_monotone_theorem(u: &MeshFunction, f: &InteriorFunction, stencil: &StencilSet) -> Result<f64, MaError> {
    let m = monotone_ma(u, stencil)?;
    Ok(m.values().iter().zip(f.values()).fold(0.0, |acc, (a, b)| acc.max((a - b).abs())))
}

/// Whether `v` satisfies the constraints of `spec`'s scheme to `tol`:
/// boundary data, convexity and the determinant inequality. Hessian
/// quantities are compared relative to their own size.
pub fn satisfies_scheme(v: &MeshFunction, spec: &ProgramSpec, tol: f64) -> Result<bool, MaError> {
    let mesh = spec.mesh;
    let boundary_ok = mesh
        .boundary()
        .all(|(i, j)| (v.get(i, j) - spec.g.get(i, j)).abs() <= tol * (1.0 + spec.g.get(i, j).abs()));
    if !boundary_ok {
        return Ok(false);
    }
    match &spec.scheme {
        Scheme::Standard | Scheme::EnvelopeBoundary => {
            let hess = discrete_hessian(v);
            Ok(mesh.interior().all(|(i, j)| {
                let [a, b, c] = hess.get(i, j);
                let scale = 1.0 + a.abs().max(b.abs()).max(c.abs());
                let (det, lmin) = det_and_lambda_min(a, b, c);
                let f = match spec.scheme {
                    Scheme::Standard => spec.f.get(i, j),
                    _ => 0.0,
                };
                lmin >= -tol * scale && det >= f - tol * scale * scale
            }))
        }
        Scheme::Monotone(stencil) => {
            for (i, j) in mesh.interior() {
                let mut lams = Vec::new();
                for &e in &stencil.directions {
                    if let Some(l) = crate::operators::directional_second_difference(v, i, j, e) {
                        lams.push((e, l));
                    }
                }
                let scale = 1.0 + lams.iter().fold(0.0f64, |m, (_, l)| m.max(l.abs()));
                if lams.iter().any(|&(_, l)| l < -tol * scale) {
                    return Ok(false);
                }
                let lam = |e: [i64; 2]| lams.iter().find(|(d, _)| *d == e).map(|(_, l)| *l);
                let f = spec.f.get(i, j);
                for &(a, b) in &stencil.pairs {
                    if let (Some(la), Some(lb)) = (lam(a), lam(b)) {
                        if la * lb < f - tol * scale * scale {
                            return Ok(false);
                        }
                    }
                }
            }
            Ok(true)
        }
        Scheme::EnvelopeObstacle(_) => Err(MaError::InvalidData("obstacle programs have no Dirichlet data".into())),
    }
}

/// Smallest margin `h² Σ ⟨∇_h u, ∇_h v⟩ − h² Σ |∇_h u|²` over backward cells,
/// minimized over `samples`. Each sample must satisfy the constraints of
/// `spec` to `tol`. A minimizer of the squared energy has nonnegative margin
/// against every feasible competitor.
pub fn check_variational_inequality(
    u: &MeshFunction,
    samples: &[MeshFunction],
    spec: &ProgramSpec,
    tol: f64,
) -> Result<f64, MaError> {
    let mesh = spec.mesh;
    let h2 = mesh.h() * mesh.h();
    let gu = backward_gradient(u);
    let base: f64 = gu.values().iter().map(|p| p[0] * p[0] + p[1] * p[1]).sum::<f64>() * h2;
    let mut margin = f64::INFINITY;
    for (k, v) in samples.iter().enumerate() {
        if v.mesh() != mesh {
            return Err(MaError::InvalidData(format!("sample {k} lives on a different mesh")));
        }
        if !satisfies_scheme(v, spec, tol)? {
            return Err(MaError::InfeasibleSample(format!("sample {k} violates the scheme constraints")));
        }
        let gv = backward_gradient(v);
        let cross: f64 = gu
            .values()
            .iter()
            .zip(gv.values())
            .map(|(a, b)| a[0] * b[0] + a[1] * b[1])
            .sum::<f64>()
            * h2;
        margin = margin.min(cross - base);
    }
    Ok(margin)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn registry_knows_all_cases() {
        for name in CASE_NAMES {
            assert_eq!(test_case(name).unwrap().name, name);
        }
        assert!(matches!(test_case("test9"), Err(MaError::UnknownCase(_))));
    }

    #[test]
    fn dirac_exact_solution_values() {
        assert_eq!(dirac2_exact(0.5, 0.5), 0.0);
        assert_eq!(dirac2_exact(0.5, 0.9), 0.4);
        assert!((dirac2_exact(0.0, 0.5) - 0.25).abs() < 1e-15);
        assert!((dirac2_exact(1.0, 1.0) - 0.25f64.hypot(0.5)).abs() < 1e-15);
    }

    #[test]
    fn measure_lumping_preserves_mass() {
        for n in [4, 8, 16] {
            let mesh = Mesh::new(n).unwrap();
            let f = discretize_measure(&[(0.25, 0.5, FRAC_PI_2), (0.75, 0.5, FRAC_PI_2)], mesh).unwrap();
            let mass: f64 = f.values().iter().sum::<f64>() * mesh.h() * mesh.h();
            assert!((mass - std::f64::consts::PI).abs() < 1e-12);
            assert_eq!(f.values().iter().filter(|v| **v > 0.0).count(), 2);
            assert_eq!(f.get(n / 4, n / 2), FRAC_PI_2 * (n * n) as f64);
        }
    }

    #[test]
    fn misplaced_atoms_are_rejected() {
        let err = discretize_measure(&[(0.25, 0.5, 1.0)], Mesh::new(6).unwrap()).unwrap_err();
        assert!(err.to_string().contains("divisible by 4"), "{err}");
        assert!(matches!(
            discretize_measure(&[(0.0, 0.5, 1.0)], Mesh::new(4).unwrap()),
            Err(MaError::AtomPlacement(_))
        ));
    }

    #[test]
    fn monotone_residual_of_exact_quadratic() {
        let mesh = Mesh::new(8).unwrap();
        let u = MeshFunction::sample(mesh, test3_exact).unwrap();
        let f = InteriorFunction::sample(mesh, |_, _| 4.0).unwrap();
        for w in [1, 2] {
            let r = check_monotone_theorem(&u, &f, &StencilSet::new(w).unwrap()).unwrap();
            assert!(r < 1e-9, "{r}");
        }
    }

    #[test]
    fn report_csv_has_fixed_columns() {
        let case = test_case("test3").unwrap();
        let rep = convergence_sweep(&case, &[4, 2], Phi::Sqrt1pp, &Scheme::Standard, &SolveSettings::default()).unwrap();
        assert_eq!(rep.rows[0].n, 2);
        let csv = rep.to_csv();
        let mut lines = csv.lines();
        assert_eq!(lines.next(), Some(REPORT_HEADER));
        for line in lines {
            assert_eq!(line.split(',').count(), 8, "{line}");
        }
        // Errors at solver precision leave the order undefined.
        assert!(rep.rows.iter().all(|r| r.order.is_none()));
        let json: serde_json::Value = serde_json::from_str(&rep.to_json()).unwrap();
        assert_eq!(json["rows"].as_array().unwrap().len(), 2);
    }

    #[test]
    fn sweep_records_per_mesh_failures() {
        let case = test_case("dirac2").unwrap();
        let rep = convergence_sweep(&case, &[6, 8], Phi::Euclid, &Scheme::Standard, &SolveSettings::default()).unwrap();
        assert!(rep.rows[0].status.starts_with("error"));
        assert_eq!(rep.rows[1].status, "optimal");
    }

    #[test]
    fn variational_inequality_rejects_infeasible_samples() {
        let case = test_case("test3").unwrap();
        let spec = case.spec(4, Phi::Squared, &Scheme::Standard).unwrap();
        let u = case.exact_on(spec.mesh).unwrap();
        let bad = MeshFunction::sample(spec.mesh, |x, y| test3_exact(x, y) * (1.0 - x * y)).unwrap();
        assert!(matches!(
            check_variational_inequality(&u, &[bad], &spec, 1e-9),
            Err(MaError::InfeasibleSample(_))
        ));
        assert_eq!(check_variational_inequality(&u, &[u.clone()], &spec, 1e-9).unwrap(), 0.0);
    }
}
