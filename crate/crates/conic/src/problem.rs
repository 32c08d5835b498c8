//! Canonical conic programs: minimize `cᵀx + d` subject to `Ax = b`, `x ∈ K`.

use crate::cones::Cone;
use crate::sparse::CscMatrix;
use crate::SolverError;
use serde::{Deserialize, Serialize};
use std::ops::Range;

/// `K` is the Cartesian product of `cones`, laid over `x` in order.
#[derive(Debug, Clone, PartialEq)]
pub struct ConicProgram {
    pub c: Vec<f64>,
    pub d: f64,
    pub a: CscMatrix,
    pub b: Vec<f64>,
    pub cones: Vec<Cone>,
}

impl ConicProgram {
    pub fn num_vars(&self) -> usize {
        self.c.len()
    }

    pub fn num_constraints(&self) -> usize {
        self.b.len()
    }

    /// Index ranges of the cone blocks.
    pub fn block_ranges(&self) -> Vec<Range<usize>> {
        let mut start = 0;
        self.cones
            .iter()
            .map(|k| {
                let r = start..start + k.dim;
                start += k.dim;
                r
            })
            .collect()
    }

    /// Check dimensions and finiteness.
    pub fn validate(&self) -> Result<(), SolverError> {
        let n = self.c.len();
        let m = self.b.len();
        if self.a.ncols != n || self.a.nrows != m {
            return Err(SolverError::Malformed(format!(
                "A is {}x{}, expected {m}x{n}",
                self.a.nrows, self.a.ncols
            )));
        }
        if self.a.colptr.len() != n + 1 || self.a.rowval.len() != self.a.nzval.len() {
            return Err(SolverError::Malformed("inconsistent CSC storage".into()));
        }
        let total: usize = self.cones.iter().map(|k| k.dim).sum();
        if total != n {
            return Err(SolverError::Malformed(format!(
                "cone dimensions sum to {total}, program has {n} variables"
            )));
        }
        for k in &self.cones {
            if k.dim < Cone::min_dim(k.kind) {
                return Err(SolverError::Malformed(format!("{:?} block of dimension {}", k.kind, k.dim)));
            }
        }
        let finite = self.c.iter().chain(&self.b).chain(&self.a.nzval).all(|v| v.is_finite()) && self.d.is_finite();
        if !finite {
            return Err(SolverError::Malformed("non-finite problem data".into()));
        }
        Ok(())
    }

    /// Largest per-block cone violation of `x`.
    pub fn cone_violation(&self, x: &[f64]) -> f64 {
        self.cones
            .iter()
            .zip(self.block_ranges())
            .map(|(k, r)| k.violation(&x[r]))
            .fold(0.0, f64::max)
    }

    pub fn objective(&self, x: &[f64]) -> f64 {
        self.c.iter().zip(x).map(|(a, b)| a * b).sum::<f64>() + self.d
    }

    pub fn to_dump(&self) -> ProgramDump {
        ProgramDump {
            c: self.c.clone(),
            d: self.d,
            a: self.a.triplets().collect(),
            b: self.b.clone(),
            cones: self.cones.clone(),
        }
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string(&self.to_dump()).expect("program dump is always serializable")
    }

    pub fn from_json(s: &str) -> Result<Self, SolverError> {
        let dump: ProgramDump =
            serde_json::from_str(s).map_err(|e| SolverError::Malformed(format!("bad program dump: {e}")))?;
        dump.into_program()
    }
}

/// Interchange form for external conic solvers:
/// `{c, d, A: [[row, col, value], …], b, cones: [{type, dim}, …]}`.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ProgramDump {
    pub c: Vec<f64>,
    pub d: f64,
    #[serde(rename = "A")]
    pub a: Vec<(usize, usize, f64)>,
    pub b: Vec<f64>,
    pub cones: Vec<Cone>,
}

impl ProgramDump {
    pub fn into_program(self) -> Result<ConicProgram, SolverError> {
        let (m, n) = (self.b.len(), self.c.len());
        if let Some(&(i, j, _)) = self.a.iter().find(|(i, j, _)| *i >= m || *j >= n) {
            return Err(SolverError::Malformed(format!("triplet ({i}, {j}) outside {m}x{n}")));
        }
        let p = ConicProgram {
            a: CscMatrix::from_triplets(m, n, &self.a),
            c: self.c,
            d: self.d,
            b: self.b,
            cones: self.cones,
        };
        p.validate()?;
        Ok(p)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn tiny() -> ConicProgram {
        ConicProgram {
            c: vec![1.0, 0.0],
            d: 0.5,
            a: CscMatrix::from_triplets(1, 2, &[(0, 0, 1.0), (0, 1, 1.0)]),
            b: vec![2.0],
            cones: vec![Cone::nonneg(1), Cone::free(1)],
        }
    }

    #[test]
    fn json_dump_round_trips() {
        let p = tiny();
        let q = ConicProgram::from_json(&p.to_json()).unwrap();
        assert_eq!(p, q);
        assert!(p.to_json().contains("\"type\":\"non-negative\""));
    }

    #[test]
    fn validate_catches_cone_mismatch() {
        let mut p = tiny();
        p.cones.push(Cone::free(1));
        assert!(matches!(p.validate(), Err(SolverError::Malformed(_))));
    }
}
