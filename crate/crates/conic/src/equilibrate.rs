//! Ruiz equilibration of `(A, b, c)`.
//!
//! The scaled program is `Ā = E A D`, `b̄ = σ_b E b`, `c̄ = σ_c D c`. Column
//! scaling is uniform inside second-order blocks so that `D K = K`.

use crate::problem::ConicProgram;
use crate::residuals::inf_norm;

const MIN_SCALE: f64 = 1e-4;
const MAX_SCALE: f64 = 1e4;

#[derive(Debug, Clone)]
pub(crate) struct Scaling {
    pub d: Vec<f64>,
    pub e: Vec<f64>,
    pub sigma_b: f64,
    pub sigma_c: f64,
}

impl Scaling {
    /// Primal point of the original program from a scaled one (divided by `tau`).
    pub fn unscale_x(&self, xs: &[f64], tau: f64) -> Vec<f64> {
        xs.iter().zip(&self.d).map(|(v, d)| v * d / (self.sigma_b * tau)).collect()
    }

    pub fn unscale_y(&self, ys: &[f64], tau: f64) -> Vec<f64> {
        ys.iter().zip(&self.e).map(|(v, e)| v * e / (self.sigma_c * tau)).collect()
    }

    pub fn unscale_s(&self, ss: &[f64], tau: f64) -> Vec<f64> {
        ss.iter().zip(&self.d).map(|(v, d)| v / (d * self.sigma_c * tau)).collect()
    }
}

fn clamp(v: f64) -> f64 {
    if v == 0.0 || !v.is_finite() {
        1.0
    } else {
        v.clamp(MIN_SCALE, MAX_SCALE)
    }
}

/// Scale `program`, returning the scaled copy and the factors.
pub(crate) fn equilibrate(program: &ConicProgram, passes: usize) -> (ConicProgram, Scaling) {
    let (m, n) = (program.num_constraints(), program.num_vars());
    let mut a = program.a.clone();
    let mut d = vec![1.0; n];
    let mut e = vec![1.0; m];
    let blocks: Vec<_> = program.cones.iter().zip(program.block_ranges()).collect();

    for _ in 0..passes {
        let cn = a.col_norms_inf();
        let rn = a.row_norms_inf();
        let mut dc = vec![1.0; n];
        for (k, r) in &blocks {
            if k.is_soc_like() {
                let mx = cn[r.clone()].iter().cloned().fold(0.0, f64::max);
                let f = 1.0 / clamp(mx).sqrt();
                r.clone().for_each(|j| dc[j] = f);
            } else {
                r.clone().for_each(|j| dc[j] = 1.0 / clamp(cn[j]).sqrt());
            }
        }
        let er: Vec<f64> = rn.iter().map(|&v| 1.0 / clamp(v).sqrt()).collect();
        a.scale(&er, &dc);
        for j in 0..n {
            d[j] = (d[j] * dc[j]).clamp(MIN_SCALE, MAX_SCALE);
        }
        for i in 0..m {
            e[i] = (e[i] * er[i]).clamp(MIN_SCALE, MAX_SCALE);
        }
    }
    // Rebuild from the clamped cumulative factors so that Ā = E A D exactly.
    let mut a = program.a.clone();
    a.scale(&e, &d);

    let dc: Vec<f64> = program.c.iter().zip(&d).map(|(c, d)| c * d).collect();
    let eb: Vec<f64> = program.b.iter().zip(&e).map(|(b, e)| b * e).collect();
    let sigma_c = 1.0 / clamp(inf_norm(&dc)).max(1.0);
    let sigma_b = 1.0 / clamp(inf_norm(&eb)).max(1.0);
    let scaled = ConicProgram {
        c: dc.iter().map(|v| v * sigma_c).collect(),
        d: program.d,
        a,
        b: eb.iter().map(|v| v * sigma_b).collect(),
        cones: program.cones.clone(),
    };
    (
        scaled,
        Scaling {
            d,
            e,
            sigma_b,
            sigma_c,
        },
    )
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cones::Cone;
    use crate::sparse::CscMatrix;

    #[test]
    fn soc_blocks_get_uniform_column_scaling() {
        let p = ConicProgram {
            c: vec![1.0, 0.0, 0.0, 5.0],
            d: 0.0,
            a: CscMatrix::from_triplets(2, 4, &[(0, 1, 1000.0), (1, 2, 0.01), (0, 3, 3.0), (1, 0, 2.0)]),
            b: vec![1.0, 1.0],
            cones: vec![Cone::soc(3), Cone::nonneg(1)],
        };
        let (_, s) = equilibrate(&p, 10);
        assert_eq!(s.d[0], s.d[1]);
        assert_eq!(s.d[1], s.d[2]);
    }

    #[test]
    fn unscaling_inverts_scaling() {
        let p = ConicProgram {
            c: vec![4.0, 1.0],
            d: 0.0,
            a: CscMatrix::from_triplets(1, 2, &[(0, 0, 100.0), (0, 1, 0.5)]),
            b: vec![7.0],
            cones: vec![Cone::nonneg(2)],
        };
        let (q, s) = equilibrate(&p, 5);
        // A feasible x of the original maps to a feasible scaled point.
        let x = vec![0.05, 4.0];
        let xs: Vec<f64> = x.iter().zip(&s.d).map(|(v, d)| v / d * s.sigma_b).collect();
        let back = s.unscale_x(&xs, 1.0);
        assert!((back[0] - x[0]).abs() < 1e-15 && (back[1] - x[1]).abs() < 1e-14);
        let lhs: f64 = q.a.mul_vec(&xs)[0];
        assert!((lhs - q.b[0]).abs() < 1e-12);
    }
}
