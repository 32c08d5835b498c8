//! The quasi-definite system `[−H Aᵀ; A 0]` shared by both algorithms.
//!
//! `H` is block diagonal over the cone blocks. It is factored with a static
//! regularization `[−H − εI Aᵀ; A εI]` and solutions are refined against the
//! unregularized matrix.

use crate::cones::{Cone, ConeKind, NtScaling};
use crate::ldl::LdlFactor;
use crate::problem::ConicProgram;
use crate::residuals::inf_norm;
use crate::sparse::CscMatrix;
use crate::SolverError;
use std::ops::Range;

const STATIC_REG: f64 = 1e-8;
const REFINE_STEPS: usize = 10;
const REFINE_TOL: f64 = 1e-14;

pub(crate) struct Kkt {
    n: usize,
    m: usize,
    a: CscMatrix,
    cones: Vec<Cone>,
    ranges: Vec<Range<usize>>,
    /// Dense `d × d` for second-order blocks, diagonal otherwise.
    h: Vec<Vec<f64>>,
    upper: CscMatrix,
    factor: LdlFactor,
    pub regularized_pivots: usize,
}

impl Kkt {
    pub fn new(program: &ConicProgram) -> Result<Self, SolverError> {
        let (m, n) = (program.num_constraints(), program.num_vars());
        let at = program.a.transpose();
        let ranges = program.block_ranges();
        let mut colptr = vec![0usize; n + m + 1];
        let mut rowval = Vec::new();
        let mut block_of = vec![0usize; n];
        for (b, r) in ranges.iter().enumerate() {
            r.clone().for_each(|j| block_of[j] = b);
        }
        for c in 0..n {
            let b = block_of[c];
            if program.cones[b].is_soc_like() {
                rowval.extend(ranges[b].start..=c);
            } else {
                rowval.push(c);
            }
            colptr[c + 1] = rowval.len();
        }
        for r in 0..m {
            rowval.extend(at.column(r).map(|(j, _)| j));
            rowval.push(n + r);
            colptr[n + r + 1] = rowval.len();
        }
        let nz = rowval.len();
        let upper = CscMatrix {
            nrows: n + m,
            ncols: n + m,
            colptr,
            rowval,
            nzval: vec![0.0; nz],
        };
        let signs: Vec<f64> = (0..n + m).map(|i| if i < n { -1.0 } else { 1.0 }).collect();
        let factor = LdlFactor::new(&upper, &signs)?;
        let h = program
            .cones
            .iter()
            .map(|k| match k.kind {
                ConeKind::SecondOrder | ConeKind::RotatedSecondOrder => vec![0.0; k.dim * k.dim],
                _ => vec![0.0; k.dim],
            })
            .collect();
        // Aᵀ entries in column order of the upper triangle.
        let mut kkt = Self {
            n,
            m,
            a: program.a.clone(),
            cones: program.cones.clone(),
            ranges,
            h,
            upper,
            factor,
            regularized_pivots: 0,
        };
        let mut p = kkt.upper.colptr[n];
        for r in 0..m {
            for (_, v) in at.column(r) {
                kkt.upper.nzval[p] = v;
                p += 1;
            }
            kkt.upper.nzval[p] = STATIC_REG;
            p += 1;
        }
        Ok(kkt)
    }

    /// Set `H = W²` from Nesterov–Todd scalings (free blocks get `H = 0`).
    pub fn set_nt(&mut self, scalings: &[NtScaling]) {
        for (b, k) in self.cones.iter().enumerate() {
            let d = k.dim;
            let h = &mut self.h[b];
            match k.kind {
                ConeKind::Free => h.iter_mut().for_each(|v| *v = 0.0),
                ConeKind::NonNegative => {
                    for i in 0..d {
                        h[i] = scalings[b].w[i] * scalings[b].w[i];
                    }
                }
                _ => {
                    for i in 0..d {
                        for j in 0..d {
                            h[i * d + j] = scalings[b].w2_entry(i, j);
                        }
                    }
                }
            }
        }
        self.load_h();
    }

    /// Set `H = ρI`.
    pub fn set_diag(&mut self, rho: f64) {
        for (b, k) in self.cones.iter().enumerate() {
            let d = k.dim;
            let h = &mut self.h[b];
            h.iter_mut().for_each(|v| *v = 0.0);
            if k.is_soc_like() {
                (0..d).for_each(|i| h[i * d + i] = rho);
            } else {
                h.iter_mut().for_each(|v| *v = rho);
            }
        }
        self.load_h();
    }

    fn load_h(&mut self) {
        let mut p = 0;
        for (b, k) in self.cones.iter().enumerate() {
            let d = k.dim;
            let h = &self.h[b];
            if k.is_soc_like() {
                for j in 0..d {
                    for i in 0..=j {
                        let reg = if i == j { STATIC_REG } else { 0.0 };
                        self.upper.nzval[p] = -h[i * d + j] - reg;
                        p += 1;
                    }
                }
            } else {
                for i in 0..d {
                    self.upper.nzval[p] = -h[i] - STATIC_REG;
                    p += 1;
                }
            }
        }
    }

    pub fn factor(&mut self) -> Result<(), SolverError> {
        self.regularized_pivots = self.factor.refactor(&self.upper.nzval)?;
        Ok(())
    }

    /// `[−H Aᵀ; A 0] v`
    fn multiply(&self, v: &[f64], out: &mut [f64]) {
        let (n, m) = (self.n, self.m);
        let (vx, vy) = v.split_at(n);
        let (ox, oy) = out.split_at_mut(n);
        for (b, k) in self.cones.iter().enumerate() {
            let r = self.ranges[b].clone();
            let h = &self.h[b];
            let d = k.dim;
            if k.is_soc_like() {
                for i in 0..d {
                    let mut acc = 0.0;
                    for j in 0..d {
                        acc += h[i * d + j] * vx[r.start + j];
                    }
                    ox[r.start + i] = -acc;
                }
            } else {
                for i in 0..d {
                    ox[r.start + i] = -h[i] * vx[r.start + i];
                }
            }
        }
        self.a.gemv_t(1.0, vy, 1.0, ox);
        debug_assert_eq!(oy.len(), m);
        self.a.gemv(1.0, vx, 0.0, oy);
    }

    /// Solve `[−H Aᵀ; A 0] z = rhs` with iterative refinement.
    pub fn solve(&mut self, rhs: &[f64]) -> Vec<f64> {
        let dim = self.n + self.m;
        let mut z = rhs.to_vec();
        self.factor.solve_in_place(&mut z);
        let scale = 1.0 + inf_norm(rhs);
        let mut res = vec![0.0; dim];
        self.multiply(&z, &mut res);
        res.iter_mut().zip(rhs).for_each(|(r, b)| *r = b - *r);
        let mut norm = inf_norm(&res);
        for _ in 0..REFINE_STEPS {
            if norm <= REFINE_TOL * scale {
                break;
            }
            let mut corr = res.clone();
            self.factor.solve_in_place(&mut corr);
            let cand: Vec<f64> = z.iter().zip(&corr).map(|(a, b)| a + b).collect();
            let mut cres = vec![0.0; dim];
            self.multiply(&cand, &mut cres);
            cres.iter_mut().zip(rhs).for_each(|(r, b)| *r = b - *r);
            let cnorm = inf_norm(&cres);
            if !(cnorm < norm) {
                break;
            }
            let improved = cnorm < 0.5 * norm;
            z = cand;
            res = cres;
            norm = cnorm;
            if !improved {
                break;
            }
        }
        z
    }
}
