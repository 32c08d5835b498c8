//! Presolve for canonical conic programs.
//!
//! Removes free variables pinned by singleton equality rows (folding their
//! values into `b` and `d`), empty rows, duplicate rows and free columns that
//! appear nowhere. Variable and row order is otherwise preserved, so the
//! result is deterministic and presolving twice changes nothing.

use crate::cones::{Cone, ConeKind};
use crate::problem::ConicProgram;
use crate::sparse::CscMatrix;
use crate::SolverError;
use std::collections::HashMap;

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum VarFate {
    Kept(usize),
    Fixed(f64),
}

#[derive(Debug, Clone)]
pub struct Presolved {
    pub program: ConicProgram,
    /// Fate of every variable of the original program.
    pub vars: Vec<VarFate>,
    /// New index of every original row, `None` if removed.
    pub rows: Vec<Option<usize>>,
    /// `(row, var)` pairs in the order singleton rows fixed free variables.
    pub fixings: Vec<(usize, usize)>,
}

impl Presolved {
    /// Expand a solution of the reduced program to the original variables.
    pub fn restore(&self, x: &[f64]) -> Vec<f64> {
        self.vars
            .iter()
            .map(|f| match *f {
                VarFate::Kept(j) => x[j],
                VarFate::Fixed(v) => v,
            })
            .collect()
    }

    /// Recover multipliers and dual slacks of the original program from those
    /// of the reduced one. Removed duplicate and empty rows get zero
    /// multipliers; a singleton row takes the multiplier that zeroes the dual
    /// slack of the free variable it fixed. With `certificate` the cost is
    /// taken as zero (infeasibility certificates satisfy `Aᵀy + s = 0`).
    pub fn postsolve_dual(
        &self,
        original: &ConicProgram,
        y: &[f64],
        s: &[f64],
        certificate: bool,
    ) -> (Vec<f64>, Vec<f64>) {
        let mut y_full = vec![0.0; original.num_constraints()];
        for (i, r) in self.rows.iter().enumerate() {
            if let Some(k) = r {
                y_full[i] = y[*k];
            }
        }
        let mut s_full = vec![0.0; original.num_vars()];
        for (j, f) in self.vars.iter().enumerate() {
            if let VarFate::Kept(k) = f {
                s_full[j] = s[*k];
            }
        }
        for &(i, j) in self.fixings.iter().rev() {
            let mut acc = if certificate { 0.0 } else { original.c[j] };
            let mut aij = 0.0;
            for (r, v) in original.a.column(j) {
                if r == i {
                    aij += v;
                } else {
                    acc -= v * y_full[r];
                }
            }
            y_full[i] = acc / aij;
        }
        (y_full, s_full)
    }

    /// Reduce an assignment of the original variables to the kept ones.
    pub fn reduce(&self, x: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; self.program.num_vars()];
        for (j, f) in self.vars.iter().enumerate() {
            if let VarFate::Kept(k) = *f {
                out[k] = x[j];
            }
        }
        out
    }
}

/// Relative tolerance for deciding that a removed row is consistent.
const CONSISTENCY_TOL: f64 = 1e-12;

pub fn presolve(program: &ConicProgram) -> Result<Presolved, SolverError> {
    program.validate()?;
    let (m, n) = (program.num_constraints(), program.num_vars());

    let mut is_free = vec![false; n];
    for (k, r) in program.cones.iter().zip(program.block_ranges()) {
        if k.kind == ConeKind::Free {
            r.for_each(|j| is_free[j] = true);
        }
    }

    // Row-wise view with live flags.
    let mut rows: Vec<Vec<(usize, f64)>> = vec![Vec::new(); m];
    for (i, j, v) in program.a.triplets() {
        rows[i].push((j, v));
    }
    let mut cols: Vec<Vec<usize>> = vec![Vec::new(); n];
    for (i, j, _) in program.a.triplets() {
        cols[j].push(i);
    }
    let mut b = program.b.clone();
    let mut d = program.d;
    let mut row_alive = vec![true; m];
    let mut fate: Vec<Option<f64>> = vec![None; n];
    let mut fixings = Vec::new();
    let bscale = 1.0 + program.b.iter().fold(0.0f64, |a, v| a.max(v.abs()));

    // Singleton rows on free variables, repeated until nothing changes.
    let live_entries = |row: &Vec<(usize, f64)>, fate: &Vec<Option<f64>>| -> Vec<(usize, f64)> {
        row.iter().filter(|(j, _)| fate[*j].is_none()).cloned().collect()
    };
    loop {
        let mut changed = false;
        for i in 0..m {
            if !row_alive[i] {
                continue;
            }
            let live = live_entries(&rows[i], &fate);
            if live.len() == 1 && is_free[live[0].0] {
                let (j, a) = live[0];
                let val = b[i] / a;
                fate[j] = Some(val);
                fixings.push((i, j));
                row_alive[i] = false;
                d += program.c[j] * val;
                for &r in &cols[j] {
                    if row_alive[r] {
                        let arj: f64 = rows[r].iter().filter(|(c, _)| *c == j).map(|(_, v)| v).sum();
                        b[r] -= arj * val;
                    }
                }
                changed = true;
            }
        }
        if !changed {
            break;
        }
    }

    // Empty rows.
    for i in 0..m {
        if row_alive[i] && live_entries(&rows[i], &fate).is_empty() {
            if b[i].abs() > CONSISTENCY_TOL * bscale {
                return Err(SolverError::InfeasiblePresolve(format!(
                    "row {i} reduces to 0 = {}",
                    b[i]
                )));
            }
            row_alive[i] = false;
        }
    }

    // Duplicate (proportional) rows: keep the first occurrence.
    let mut seen: HashMap<Vec<(usize, u64)>, (usize, f64)> = HashMap::new();
    for i in 0..m {
        if !row_alive[i] {
            continue;
        }
        let mut live = live_entries(&rows[i], &fate);
        live.sort_by_key(|e| e.0);
        let lead = live[0].1;
        let key: Vec<(usize, u64)> = live.iter().map(|(j, v)| (*j, (v / lead).to_bits())).collect();
        match seen.get(&key) {
            Some(&(first, first_lead)) => {
                let lhs = b[i] / lead;
                let rhs = b[first] / first_lead;
                if (lhs - rhs).abs() > CONSISTENCY_TOL * (1.0 + lhs.abs().max(rhs.abs())) {
                    return Err(SolverError::InfeasiblePresolve(format!(
                        "rows {first} and {i} are parallel with inconsistent right-hand sides"
                    )));
                }
                row_alive[i] = false;
            }
            None => {
                seen.insert(key, (i, lead));
            }
        }
    }

    // Free columns with no live rows and zero cost are irrelevant.
    for j in 0..n {
        if is_free[j] && fate[j].is_none() && program.c[j] == 0.0 && cols[j].iter().all(|&r| !row_alive[r]) {
            fate[j] = Some(0.0);
        }
    }

    // Assemble the reduced program.
    let mut vars = Vec::with_capacity(n);
    let mut next = 0;
    for f in &fate {
        vars.push(match f {
            Some(v) => VarFate::Fixed(*v),
            None => {
                next += 1;
                VarFate::Kept(next - 1)
            }
        });
    }
    let mut row_map = vec![None; m];
    let mut nr = 0;
    for i in 0..m {
        if row_alive[i] {
            row_map[i] = Some(nr);
            nr += 1;
        }
    }
    let mut trip = Vec::with_capacity(program.a.nnz());
    for (i, j, v) in program.a.triplets() {
        if let (Some(r), VarFate::Kept(c)) = (row_map[i], vars[j]) {
            trip.push((r, c, v));
        }
    }
    let mut cones = Vec::new();
    for (k, r) in program.cones.iter().zip(program.block_ranges()) {
        let kept = r.filter(|&j| matches!(vars[j], VarFate::Kept(_))).count();
        if k.kind == ConeKind::Free {
            if kept > 0 {
                cones.push(Cone::free(kept));
            }
        } else {
            debug_assert_eq!(kept, k.dim);
            cones.push(*k);
        }
    }
    // Merge adjacent free blocks for a canonical block list.
    let mut merged: Vec<Cone> = Vec::with_capacity(cones.len());
    for k in cones {
        match merged.last_mut() {
            Some(last) if last.kind == ConeKind::Free && k.kind == ConeKind::Free => last.dim += k.dim,
            _ => merged.push(k),
        }
    }
    let c: Vec<f64> = (0..n).filter(|&j| fate[j].is_none()).map(|j| program.c[j]).collect();
    let b_new: Vec<f64> = (0..m).filter(|&i| row_alive[i]).map(|i| b[i]).collect();
    let reduced = ConicProgram {
        a: CscMatrix::from_triplets(nr, c.len(), &trip),
        c,
        d,
        b: b_new,
        cones: merged,
    };
    reduced.validate()?;
    Ok(Presolved {
        program: reduced,
        vars,
        rows: row_map,
        fixings,
    })
}

/// Sufficient test for full row rank: after sorting, every row owns a column
/// that no other row touches.
pub fn has_private_columns(a: &CscMatrix) -> bool {
    let mut owner = vec![0usize; a.nrows];
    for j in 0..a.ncols {
        let col: Vec<_> = a.column(j).collect();
        if col.len() == 1 {
            owner[col[0].0] += 1;
        }
    }
    owner.iter().all(|&k| k > 0)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn fixed_free_variable_is_folded() {
        // x0 free fixed by row 0 (2 x0 = 4); row 1: x0 + x1 = 5 with x1 ≥ 0.
        let p = ConicProgram {
            c: vec![3.0, 1.0],
            d: 0.0,
            a: CscMatrix::from_triplets(2, 2, &[(0, 0, 2.0), (1, 0, 1.0), (1, 1, 1.0)]),
            b: vec![4.0, 5.0],
            cones: vec![Cone::free(1), Cone::nonneg(1)],
        };
        let r = presolve(&p).unwrap();
        assert_eq!(r.vars, vec![VarFate::Fixed(2.0), VarFate::Kept(0)]);
        assert_eq!(r.program.b, vec![3.0]);
        assert_eq!(r.program.d, 6.0);
        assert_eq!(r.program.cones, vec![Cone::nonneg(1)]);
        assert_eq!(r.restore(&[3.0]), vec![2.0, 3.0]);
    }

    #[test]
    fn inconsistent_parallel_rows_are_infeasible() {
        let p = ConicProgram {
            c: vec![0.0, 0.0],
            d: 0.0,
            a: CscMatrix::from_triplets(2, 2, &[(0, 0, 1.0), (0, 1, 1.0), (1, 0, 2.0), (1, 1, 2.0)]),
            b: vec![1.0, 3.0],
            cones: vec![Cone::nonneg(2)],
        };
        assert!(matches!(presolve(&p), Err(SolverError::InfeasiblePresolve(_))));
    }

    #[test]
    fn consistent_duplicate_row_is_dropped_and_presolve_is_idempotent() {
        let p = ConicProgram {
            c: vec![1.0, 1.0],
            d: 0.0,
            a: CscMatrix::from_triplets(2, 2, &[(0, 0, 1.0), (0, 1, 1.0), (1, 0, 2.0), (1, 1, 2.0)]),
            b: vec![1.0, 2.0],
            cones: vec![Cone::nonneg(2)],
        };
        let r = presolve(&p).unwrap();
        assert_eq!(r.program.num_constraints(), 1);
        assert_eq!(r.rows, vec![Some(0), None]);
        let again = presolve(&r.program).unwrap();
        assert_eq!(again.program, r.program);
    }
}
