use crate::problem::ConicProgram;
use crate::SolverError;
use serde::{Deserialize, Serialize};

/// Normalized optimality residuals of a primal–dual candidate.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Residuals {
    /// `‖Ax − b‖∞ / (1 + ‖b‖∞)`
    pub primal: f64,
    /// `‖Aᵀy + s − c‖∞ / (1 + ‖c‖∞)`
    pub dual: f64,
    /// `|cᵀx − bᵀy| / (1 + |cᵀx| + |bᵀy|)`
    pub gap: f64,
}

impl Residuals {
    pub fn max(&self) -> f64 {
        self.primal.max(self.dual).max(self.gap)
    }
}

pub(crate) fn inf_norm(v: &[f64]) -> f64 {
    v.iter().fold(0.0f64, |m, x| m.max(x.abs()))
}

/// Evaluate the KKT residuals of `(x, y, s)` for `program`. Pure evaluation:
/// usable on any candidate, including solutions produced elsewhere.
pub fn kkt_residuals(program: &ConicProgram, x: &[f64], y: &[f64], s: &[f64]) -> Result<Residuals, SolverError> {
    let (m, n) = (program.num_constraints(), program.num_vars());
    if x.len() != n || s.len() != n || y.len() != m {
        return Err(SolverError::DimensionMismatch(format!(
            "expected x,s of length {n} and y of length {m}, got {}, {}, {}",
            x.len(),
            s.len(),
            y.len()
        )));
    }
    let mut rp = program.b.iter().map(|v| -v).collect::<Vec<_>>();
    program.a.gemv(1.0, x, 1.0, &mut rp);
    let mut rd = program.a.tmul_vec(y);
    for j in 0..n {
        rd[j] += s[j] - program.c[j];
    }
    let cx: f64 = program.c.iter().zip(x).map(|(a, b)| a * b).sum();
    let by: f64 = program.b.iter().zip(y).map(|(a, b)| a * b).sum();
    Ok(Residuals {
        primal: inf_norm(&rp) / (1.0 + inf_norm(&program.b)),
        dual: inf_norm(&rd) / (1.0 + inf_norm(&program.c)),
        gap: (cx - by).abs() / (1.0 + cx.abs() + by.abs()),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cones::Cone;
    use crate::sparse::CscMatrix;

    fn lp() -> ConicProgram {
        // minimize x subject to x = 3, x ≥ 0
        ConicProgram {
            c: vec![1.0],
            d: 0.0,
            a: CscMatrix::from_triplets(1, 1, &[(0, 0, 1.0)]),
            b: vec![3.0],
            cones: vec![Cone::nonneg(1)],
        }
    }

    #[test]
    fn exact_optimum_has_zero_residuals() {
        let r = kkt_residuals(&lp(), &[3.0], &[1.0], &[0.0]).unwrap();
        assert_eq!(r, Residuals { primal: 0.0, dual: 0.0, gap: 0.0 });
    }

    #[test]
    fn primal_residual_is_linear_in_perturbation() {
        let r1 = kkt_residuals(&lp(), &[3.0 + 1e-4], &[1.0], &[0.0]).unwrap();
        let r2 = kkt_residuals(&lp(), &[3.0 + 2e-4], &[1.0], &[0.0]).unwrap();
        assert!((r1.primal - 1e-4 / 4.0).abs() < 1e-15);
        assert!((r2.primal / r1.primal - 2.0).abs() < 1e-9);
    }

    #[test]
    fn dimension_mismatch_is_reported() {
        assert!(matches!(
            kkt_residuals(&lp(), &[3.0, 1.0], &[1.0], &[0.0]),
            Err(SolverError::DimensionMismatch(_))
        ));
    }
}
