//! ADMM operator splitting on `min cᵀx  s.t.  Ax = b, z ∈ K, x = z`.
//!
//! The x-update is an equality-constrained least-squares step solved with the
//! same quasi-definite factorization as the interior-point method; the
//! z-update is a projection onto `K`. Only optimality is detected; problems
//! that are infeasible run to the iteration limit.

use crate::equilibrate::equilibrate;
use crate::kkt::Kkt;
use crate::problem::ConicProgram;
use crate::residuals::{inf_norm, kkt_residuals};
use crate::{RawSolution, SolveSettings, SolveStatus, SolverError, TraceRow};

const RELAXATION: f64 = 1.6;
const ADAPT_EVERY: usize = 100;
const CHECK_EVERY: usize = 10;

pub(crate) fn solve(
    program: &ConicProgram,
    settings: &SolveSettings,
    trace: &mut Vec<TraceRow>,
) -> Result<RawSolution, SolverError> {
    let (m, n) = (program.num_constraints(), program.num_vars());
    let (sp, sc) = equilibrate(program, settings.equilibration_passes);
    let ranges = sp.block_ranges();
    let project = |v: &mut [f64]| {
        for (k, r) in sp.cones.iter().zip(&ranges) {
            k.project(&mut v[r.clone()]);
        }
    };

    let mut rho = 0.1;
    let mut kkt = Kkt::new(&sp)?;
    kkt.set_diag(rho);
    kkt.factor()?;

    let mut z = vec![0.0; n];
    let mut u = vec![0.0; n];
    let mut y = vec![0.0; m];
    let mut best = None::<(f64, Vec<f64>, Vec<f64>, Vec<f64>)>;
    let mut status = SolveStatus::IterationLimit;
    let mut iterations = 0;
    let mut rhs = vec![0.0; n + m];

    while iterations < settings.max_iterations {
        iterations += 1;
        for j in 0..n {
            rhs[j] = sp.c[j] - rho * (z[j] - u[j]);
        }
        rhs[n..].copy_from_slice(&sp.b);
        let sol = kkt.solve(&rhs);
        let x = &sol[..n];
        y.copy_from_slice(&sol[n..]);

        let z_old = z.clone();
        let mut xr = vec![0.0; n];
        for j in 0..n {
            xr[j] = RELAXATION * x[j] + (1.0 - RELAXATION) * z_old[j];
            z[j] = xr[j] + u[j];
        }
        project(&mut z);
        for j in 0..n {
            u[j] += xr[j] - z[j];
        }

        if iterations % CHECK_EVERY == 0 || iterations == settings.max_iterations {
            // z is in the cone; report it as the primal point.
            let s: Vec<f64> = u.iter().map(|v| -rho * v).collect();
            let xo = sc.unscale_x(&z, 1.0);
            let yo = sc.unscale_y(&y, 1.0);
            let so = sc.unscale_s(&s, 1.0);
            let res = kkt_residuals(program, &xo, &yo, &so)?;
            trace.push(TraceRow {
                iter: iterations,
                pres: res.primal,
                dres: res.dual,
                gap: res.gap,
                mu: f64::NAN,
                sigma: f64::NAN,
                alpha: RELAXATION,
                tau: 1.0,
                kappa: 0.0,
                objective: program.objective(&xo),
            });
            let done = res.primal <= settings.eps_feas && res.dual <= settings.eps_feas && res.gap <= settings.eps_gap;
            if best.as_ref().map_or(true, |b| res.max() < b.0) || done {
                best = Some((res.max(), xo, yo, so));
            }
            if done {
                status = SolveStatus::Optimal;
                break;
            }
            if !res.max().is_finite() {
                status = SolveStatus::InsufficientProgress;
                break;
            }

            if iterations % ADAPT_EVERY == 0 {
                // Balance the scaled primal and dual residuals.
                let pr = inf_norm(&x.iter().zip(&z).map(|(a, b)| a - b).collect::<Vec<_>>())
                    / (1.0 + inf_norm(x).max(inf_norm(&z)));
                let dr = rho * inf_norm(&z.iter().zip(&z_old).map(|(a, b)| a - b).collect::<Vec<_>>())
                    / (1.0 + rho * inf_norm(&u));
                if pr > 0.0 && dr > 0.0 {
                    let ratio = (pr / dr).sqrt();
                    if !(0.2..=5.0).contains(&ratio) {
                        let new_rho = (rho * ratio).clamp(1e-6, 1e6);
                        u.iter_mut().for_each(|v| *v *= rho / new_rho);
                        rho = new_rho;
                        kkt.set_diag(rho);
                        kkt.factor()?;
                    }
                }
            }
        }
    }

    let (_, x, y, s) = best.unwrap_or_else(|| (f64::INFINITY, vec![0.0; n], vec![0.0; m], vec![0.0; n]));
    Ok(RawSolution {
        status,
        x,
        y,
        s,
        iterations,
    })
}
