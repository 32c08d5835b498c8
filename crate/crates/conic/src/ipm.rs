//! Primal–dual interior-point method on the homogeneous self-dual embedding
//!
//! ```text
//! A x − b τ = 0,   Aᵀy + s − c τ = 0,   κ + cᵀx − bᵀy = 0,
//! x ∈ K, s ∈ K*, τ, κ ≥ 0,
//! ```
//!
//! with Nesterov–Todd scaling and a Mehrotra predictor–corrector. Dual slacks
//! of free variables are identically zero.

use crate::cones::{dot, ConeKind, NtScaling};
use crate::equilibrate::{equilibrate, Scaling};
use crate::kkt::Kkt;
use crate::problem::ConicProgram;
use crate::residuals::{inf_norm, kkt_residuals, Residuals};
use crate::{RawSolution, SolveSettings, SolveStatus, SolverError, TraceRow};
use std::ops::Range;

const STEP_FRACTION: f64 = 0.99;
const MIN_STEP: f64 = 1e-10;

struct Blocks {
    kinds: Vec<crate::cones::Cone>,
    ranges: Vec<Range<usize>>,
    degree: usize,
}

impl Blocks {
    fn conic(&self) -> impl Iterator<Item = (usize, &crate::cones::Cone, Range<usize>)> {
        self.kinds
            .iter()
            .zip(self.ranges.iter().cloned())
            .enumerate()
            .filter(|(_, (k, _))| k.kind != ConeKind::Free)
            .map(|(b, (k, r))| (b, k, r))
    }

    fn step(&self, z: &[f64], dz: &[f64], cap: f64) -> f64 {
        self.conic().fold(cap, |a, (_, k, r)| k.step_length(&z[r.clone()], &dz[r], a))
    }
}

struct State {
    x: Vec<f64>,
    y: Vec<f64>,
    s: Vec<f64>,
    tau: f64,
    kappa: f64,
}

struct Direction {
    dx: Vec<f64>,
    dy: Vec<f64>,
    ds: Vec<f64>,
    dtau: f64,
    dkappa: f64,
}

struct Candidate {
    x: Vec<f64>,
    y: Vec<f64>,
    s: Vec<f64>,
    res: Residuals,
}

pub(crate) fn solve(
    program: &ConicProgram,
    settings: &SolveSettings,
    trace: &mut Vec<TraceRow>,
) -> Result<RawSolution, SolverError> {
    let (m, n) = (program.num_constraints(), program.num_vars());
    let (sp, scaling) = equilibrate(program, settings.equilibration_passes);
    let blocks = Blocks {
        kinds: sp.cones.clone(),
        ranges: sp.block_ranges(),
        degree: sp.cones.iter().map(|k| k.degree()).sum(),
    };
    let mut nt: Vec<NtScaling> = sp.cones.iter().map(|&k| NtScaling::new(k)).collect();
    let mut kkt = Kkt::new(&sp)?;

    let mut st = initial_point(&sp, &blocks, &mut kkt)?;
    let mut best: Option<Candidate> = None;
    let mut status = SolveStatus::IterationLimit;
    let mut iterations = 0;
    let (mut sigma, mut alpha) = (0.0, 0.0);
    let mut rhs1 = vec![0.0; n + m];
    rhs1[..n].copy_from_slice(&sp.c);
    rhs1[n..].copy_from_slice(&sp.b);

    loop {
        // Termination on the original (unscaled) data.
        let cand = unscaled(program, &scaling, &st)?;
        let mu = complementarity(&st, &blocks);
        trace.push(TraceRow {
            iter: iterations,
            pres: cand.res.primal,
            dres: cand.res.dual,
            gap: cand.res.gap,
            mu,
            sigma,
            alpha,
            tau: st.tau,
            kappa: st.kappa,
            objective: program.objective(&cand.x),
        });
        if cand.res.primal <= settings.eps_feas && cand.res.dual <= settings.eps_feas && cand.res.gap <= settings.eps_gap
        {
            best = Some(cand);
            status = SolveStatus::Optimal;
            break;
        }
        if best.as_ref().map_or(true, |b| cand.res.max() < b.res.max()) {
            best = Some(cand);
        }
        if let Some(cert) = infeasibility(program, &scaling, &st, settings.eps_feas) {
            return Ok(RawSolution {
                status: cert.0,
                x: cert.1,
                y: cert.2,
                s: cert.3,
                iterations,
            });
        }
        if iterations >= settings.max_iterations {
            break;
        }
        if !(mu.is_finite() && st.tau.is_finite() && st.kappa.is_finite()) {
            status = SolveStatus::InsufficientProgress;
            break;
        }
        iterations += 1;

        for (b, _, r) in blocks.conic() {
            nt[b].update(&st.x[r.clone()], &st.s[r]);
        }
        kkt.set_nt(&nt);
        if kkt.factor().is_err() {
            status = SolveStatus::InsufficientProgress;
            break;
        }
        let sol1 = kkt.solve(&rhs1);
        let (dx1, dy1) = sol1.split_at(n);

        let r_p: Vec<f64> = {
            let mut v = sp.a.mul_vec(&st.x);
            v.iter_mut().zip(&sp.b).for_each(|(a, b)| *a -= b * st.tau);
            v
        };
        let r_d: Vec<f64> = {
            let mut v = sp.a.tmul_vec(&st.y);
            for j in 0..n {
                v[j] += st.s[j] - sp.c[j] * st.tau;
            }
            v
        };
        let r_g = st.kappa + dot(&sp.c, &st.x) - dot(&sp.b, &st.y);

        // Predictor: T = −λ∘λ, η = 1.
        let t_aff: Vec<Vec<f64>> = nt
            .iter()
            .map(|w| {
                let mut out = vec![0.0; w.lambda.len()];
                w.cone.jordan_product(&w.lambda, &w.lambda, &mut out);
                out.iter_mut().for_each(|v| *v = -*v);
                out
            })
            .collect();
        let aff = direction(
            &sp, &blocks, &nt, &mut kkt, &st, dx1, dy1, &r_p, &r_d, r_g, 1.0, &t_aff, -st.tau * st.kappa,
        );
        let alpha_aff = max_step(&blocks, &st, &aff, 1.0);
        sigma = (1.0 - alpha_aff).powi(3);

        // Corrector.
        let t_cc: Vec<Vec<f64>> = blocks
            .kinds
            .iter()
            .enumerate()
            .map(|(b, k)| {
                if k.kind == ConeKind::Free {
                    return Vec::new();
                }
                let r = blocks.ranges[b].clone();
                let w = &nt[b];
                let a = w.apply_w_inv(&aff.ds[r.clone()]);
                let c = w.apply_w(&aff.dx[r]);
                let mut prod = vec![0.0; k.dim];
                k.jordan_product(&a, &c, &mut prod);
                let mut t: Vec<f64> = t_aff[b].iter().zip(&prod).map(|(x, y)| x - y).collect();
                k.add_identity(&mut t, sigma * mu);
                t
            })
            .collect();
        let t_tau = -st.tau * st.kappa - aff.dtau * aff.dkappa + sigma * mu;
        let dir = direction(
            &sp, &blocks, &nt, &mut kkt, &st, dx1, dy1, &r_p, &r_d, r_g, 1.0 - sigma, &t_cc, t_tau,
        );
        alpha = (STEP_FRACTION * max_step(&blocks, &st, &dir, f64::INFINITY)).min(1.0);
        if !(alpha > MIN_STEP) {
            status = SolveStatus::InsufficientProgress;
            break;
        }
        for j in 0..n {
            st.x[j] += alpha * dir.dx[j];
            st.s[j] += alpha * dir.ds[j];
        }
        for i in 0..m {
            st.y[i] += alpha * dir.dy[i];
        }
        st.tau += alpha * dir.dtau;
        st.kappa += alpha * dir.dkappa;
    }

    let b = best.expect("at least one iterate is evaluated");
    Ok(RawSolution {
        status,
        x: b.x,
        y: b.y,
        s: b.s,
        iterations,
    })
}

fn complementarity(st: &State, blocks: &Blocks) -> f64 {
    let xs: f64 = blocks.conic().map(|(_, _, r)| dot(&st.x[r.clone()], &st.s[r])).sum();
    (xs + st.tau * st.kappa) / (blocks.degree as f64 + 1.0)
}

fn unscaled(program: &ConicProgram, sc: &Scaling, st: &State) -> Result<Candidate, SolverError> {
    let x = sc.unscale_x(&st.x, st.tau);
    let y = sc.unscale_y(&st.y, st.tau);
    let s = sc.unscale_s(&st.s, st.tau);
    let res = kkt_residuals(program, &x, &y, &s)?;
    Ok(Candidate { x, y, s, res })
}

type Certificate = (SolveStatus, Vec<f64>, Vec<f64>, Vec<f64>);

/// Infeasibility certificates read off the embedding when `τ` has collapsed.
fn infeasibility(program: &ConicProgram, sc: &Scaling, st: &State, eps: f64) -> Option<Certificate> {
    if st.tau >= st.kappa {
        return None;
    }
    let x = sc.unscale_x(&st.x, 1.0);
    let y = sc.unscale_y(&st.y, 1.0);
    let s = sc.unscale_s(&st.s, 1.0);
    let by = dot(&program.b, &y);
    let cx = dot(&program.c, &x);
    if by > 0.0 {
        let mut r = program.a.tmul_vec(&y);
        r.iter_mut().zip(&s).for_each(|(a, b)| *a += b);
        if inf_norm(&r) <= eps * by {
            let yn: Vec<f64> = y.iter().map(|v| v / by).collect();
            let sn: Vec<f64> = s.iter().map(|v| v / by).collect();
            return Some((SolveStatus::PrimalInfeasible, vec![0.0; x.len()], yn, sn));
        }
    }
    if cx < 0.0 {
        let r = program.a.mul_vec(&x);
        if inf_norm(&r) <= eps * cx.abs() {
            let xn: Vec<f64> = x.iter().map(|v| v / -cx).collect();
            return Some((SolveStatus::DualInfeasible, xn, vec![0.0; y.len()], vec![0.0; s.len()]));
        }
    }
    None
}

#[allow(clippy::too_many_arguments)]
fn direction(
    sp: &ConicProgram,
    blocks: &Blocks,
    nt: &[NtScaling],
    kkt: &mut Kkt,
    st: &State,
    dx1: &[f64],
    dy1: &[f64],
    r_p: &[f64],
    r_d: &[f64],
    r_g: f64,
    eta: f64,
    t: &[Vec<f64>],
    t_tau: f64,
) -> Direction {
    let (m, n) = (sp.num_constraints(), sp.num_vars());
    // W q with λ ∘ q = T.
    let mut wq = vec![0.0; n];
    for (b, k, r) in blocks.conic() {
        let mut q = vec![0.0; k.dim];
        k.jordan_div(&nt[b].lambda, &t[b], &mut q);
        wq[r].copy_from_slice(&nt[b].apply_w(&q));
    }
    let mut rhs = vec![0.0; n + m];
    for j in 0..n {
        rhs[j] = -eta * r_d[j] - wq[j];
    }
    for i in 0..m {
        rhs[n + i] = -eta * r_p[i];
    }
    let sol2 = kkt.solve(&rhs);
    let (dx2, dy2) = sol2.split_at(n);

    let num = -eta * r_g - dot(&sp.c, dx2) + dot(&sp.b, dy2) - t_tau / st.tau;
    let den = dot(&sp.c, dx1) - dot(&sp.b, dy1) - st.kappa / st.tau;
    let dtau = num / den;
    let dx: Vec<f64> = dx2.iter().zip(dx1).map(|(a, b)| a + dtau * b).collect();
    let dy: Vec<f64> = dy2.iter().zip(dy1).map(|(a, b)| a + dtau * b).collect();
    let mut ds = vec![0.0; n];
    for (b, _, r) in blocks.conic() {
        let w2dx = nt[b].apply_w2(&dx[r.clone()]);
        for (k, j) in r.enumerate() {
            ds[j] = wq[j] - w2dx[k];
        }
    }
    let dkappa = (t_tau - st.kappa * dtau) / st.tau;
    Direction { dx, dy, ds, dtau, dkappa }
}

fn max_step(blocks: &Blocks, st: &State, d: &Direction, cap: f64) -> f64 {
    let mut a = blocks.step(&st.x, &d.dx, cap);
    a = blocks.step(&st.s, &d.ds, a);
    if d.dtau < 0.0 {
        a = a.min(-st.tau / d.dtau);
    }
    if d.dkappa < 0.0 {
        a = a.min(-st.kappa / d.dkappa);
    }
    a
}

fn initial_point(sp: &ConicProgram, blocks: &Blocks, kkt: &mut Kkt) -> Result<State, SolverError> {
    let (m, n) = (sp.num_constraints(), sp.num_vars());
    kkt.set_diag(1.0);
    kkt.factor()?;
    // Least-norm x with A x = b.
    let mut rhs = vec![0.0; n + m];
    rhs[n..].copy_from_slice(&sp.b);
    let sol = kkt.solve(&rhs);
    let mut x = sol[..n].to_vec();
    // s = c − Aᵀy with y the least-squares multiplier.
    let mut rhs = vec![0.0; n + m];
    rhs[..n].copy_from_slice(&sp.c);
    let sol = kkt.solve(&rhs);
    let y = sol[n..].to_vec();
    let mut s = sp.c.clone();
    sp.a.gemv_t(-1.0, &y, 1.0, &mut s);
    for (_, r) in blocks.kinds.iter().zip(&blocks.ranges).filter(|(k, _)| k.kind == ConeKind::Free) {
        r.clone().for_each(|j| s[j] = 0.0);
    }
    for z in [&mut x, &mut s] {
        let margin = blocks
            .conic()
            .map(|(_, k, r)| k.margin(&z[r]))
            .fold(f64::INFINITY, f64::min);
        if margin <= 0.0 {
            for (_, k, r) in blocks.conic() {
                k.add_identity(&mut z[r], 1.0 - margin);
            }
        }
    }
    Ok(State {
        x,
        y,
        s,
        tau: 1.0,
        kappa: 1.0,
    })
}
