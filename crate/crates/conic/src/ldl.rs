//! Sparse LDLᵀ factorization for quasi-definite matrices.
//!
//! The matrix is supplied as its upper triangle (diagonal included) together
//! with the expected sign of every pivot. A fill-reducing ordering is computed
//! once from the sparsity pattern; numeric refactorization reuses it. Pivots
//! whose sign disagrees with the expected sign, or whose magnitude falls below
//! `eps`, are replaced by `sign * delta` (dynamic regularization), which keeps
//! the factorization well defined on nearly singular interior-point systems.

use crate::sparse::CscMatrix;
use crate::SolverError;

const NONE: usize = usize::MAX;

#[derive(Debug, Clone, Copy)]
pub struct DynamicRegularization {
    pub eps: f64,
    pub delta: f64,
}

impl Default for DynamicRegularization {
    fn default() -> Self {
        Self {
            eps: 1e-13,
            delta: 2e-7,
        }
    }
}

#[derive(Debug, Clone)]
pub struct LdlFactor {
    n: usize,
    /// `perm[k]` is the original index of the k-th pivot.
    perm: Vec<usize>,
    /// Permuted upper triangle; values are refreshed on every refactor.
    pa: CscMatrix,
    /// Position in `pa.nzval` of each entry of the caller's upper triangle.
    value_map: Vec<usize>,
    signs: Vec<f64>,
    etree: Vec<usize>,
    lp: Vec<usize>,
    li: Vec<usize>,
    lx: Vec<f64>,
    d: Vec<f64>,
    dinv: Vec<f64>,
    pub regularization: DynamicRegularization,
    work: Vec<f64>,
}

impl LdlFactor {
    /// Symbolic analysis of `upper` (an n×n upper triangle with every diagonal
    /// entry present). `signs[i]` is +1 or −1.
    pub fn new(upper: &CscMatrix, signs: &[f64]) -> Result<Self, SolverError> {
        let n = upper.ncols;
        if upper.nrows != n || signs.len() != n {
            return Err(SolverError::Malformed("KKT matrix must be square".into()));
        }
        for j in 0..n {
            let mut has_diag = false;
            for (i, _) in upper.column(j) {
                if i > j {
                    return Err(SolverError::Malformed("KKT input is not upper triangular".into()));
                }
                has_diag |= i == j;
            }
            if !has_diag {
                return Err(SolverError::Malformed(format!("KKT column {j} has no diagonal entry")));
            }
        }

        let perm = if n == 0 {
            Vec::new()
        } else {
            let (p, _, _) = amd::order::<usize>(n, &upper.colptr, &upper.rowval, &amd::Control::default())
                .map_err(|s| SolverError::Numerical(format!("AMD ordering failed: {s:?}")))?;
            p
        };
        let mut iperm = vec![0usize; n];
        for (k, &p) in perm.iter().enumerate() {
            iperm[p] = k;
        }

        // Permuted upper triangle with a map from original entry to new slot.
        let mut trip: Vec<(usize, usize, usize)> = Vec::with_capacity(upper.nnz());
        for (k, (i, j, _)) in upper.triplets().enumerate() {
            let (pi, pj) = (iperm[i], iperm[j]);
            trip.push((pi.min(pj), pi.max(pj), k));
        }
        trip.sort_by(|a, b| (a.1, a.0).cmp(&(b.1, b.0)));
        let mut colptr = vec![0usize; n + 1];
        let mut rowval = Vec::with_capacity(trip.len());
        let mut value_map = vec![0usize; trip.len()];
        for (slot, &(r, c, k)) in trip.iter().enumerate() {
            rowval.push(r);
            colptr[c + 1] += 1;
            value_map[k] = slot;
        }
        for j in 0..n {
            colptr[j + 1] += colptr[j];
        }
        let pa = CscMatrix {
            nrows: n,
            ncols: n,
            colptr,
            rowval,
            nzval: vec![0.0; trip.len()],
        };

        // Elimination tree and column counts.
        let mut etree = vec![NONE; n];
        let mut lnz = vec![0usize; n];
        let mut mark = vec![NONE; n];
        for j in 0..n {
            mark[j] = j;
            for p in pa.colptr[j]..pa.colptr[j + 1] {
                let mut i = pa.rowval[p];
                while mark[i] != j {
                    if etree[i] == NONE {
                        etree[i] = j;
                    }
                    lnz[i] += 1;
                    mark[i] = j;
                    i = etree[i];
                }
            }
        }
        let mut lp = vec![0usize; n + 1];
        for i in 0..n {
            lp[i + 1] = lp[i] + lnz[i];
        }
        let total = lp[n];

        let psigns = perm.iter().map(|&p| signs[p]).collect();
        Ok(Self {
            n,
            perm,
            pa,
            value_map,
            signs: psigns,
            etree,
            lp,
            li: vec![0; total],
            lx: vec![0.0; total],
            d: vec![0.0; n],
            dinv: vec![0.0; n],
            regularization: DynamicRegularization::default(),
            work: vec![0.0; n],
        })
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn factor_nnz(&self) -> usize {
        self.lp[self.n]
    }

    /// Numeric factorization. `values` are aligned with the `nzval` of the
    /// upper triangle passed to [`LdlFactor::new`]. Returns the number of
    /// regularized pivots.
    pub fn refactor(&mut self, values: &[f64]) -> Result<usize, SolverError> {
        if values.len() != self.value_map.len() {
            return Err(SolverError::Malformed("KKT value vector has the wrong length".into()));
        }
        for (k, &v) in values.iter().enumerate() {
            self.pa.nzval[self.value_map[k]] = v;
        }
        let n = self.n;
        let mut regularized = 0;
        let mut y_vals = vec![0.0f64; n];
        let mut y_used = vec![false; n];
        let mut y_idx = vec![0usize; n];
        let mut elim = vec![0usize; n];
        let mut next_space: Vec<usize> = self.lp[..n].to_vec();

        for k in 0..n {
            self.d[k] = 0.0;
            let mut nnz_y = 0;
            for p in self.pa.colptr[k]..self.pa.colptr[k + 1] {
                let b = self.pa.rowval[p];
                if b == k {
                    self.d[k] = self.pa.nzval[p];
                    continue;
                }
                y_vals[b] = self.pa.nzval[p];
                if !y_used[b] {
                    y_used[b] = true;
                    elim[0] = b;
                    let mut ne = 1;
                    let mut next = self.etree[b];
                    while next != NONE && next < k {
                        if y_used[next] {
                            break;
                        }
                        y_used[next] = true;
                        elim[ne] = next;
                        ne += 1;
                        next = self.etree[next];
                    }
                    while ne > 0 {
                        ne -= 1;
                        y_idx[nnz_y] = elim[ne];
                        nnz_y += 1;
                    }
                }
            }
            for t in (0..nnz_y).rev() {
                let c = y_idx[t];
                let end = next_space[c];
                let yc = y_vals[c];
                for q in self.lp[c]..end {
                    y_vals[self.li[q]] -= self.lx[q] * yc;
                }
                self.li[end] = k;
                let l = yc * self.dinv[c];
                self.lx[end] = l;
                self.d[k] -= yc * l;
                next_space[c] += 1;
                y_vals[c] = 0.0;
                y_used[c] = false;
            }
            let s = self.signs[k];
            if !(self.d[k] * s > self.regularization.eps) {
                if !self.d[k].is_finite() {
                    return Err(SolverError::Numerical(format!("non-finite pivot at column {k}")));
                }
                self.d[k] = s * self.regularization.delta;
                regularized += 1;
            }
            self.dinv[k] = 1.0 / self.d[k];
        }
        Ok(regularized)
    }

    /// Solve `K x = b` in place using the current factors.
    pub fn solve_in_place(&mut self, b: &mut [f64]) {
        let n = self.n;
        let x = &mut self.work;
        for k in 0..n {
            x[k] = b[self.perm[k]];
        }
        for i in 0..n {
            let xi = x[i];
            if xi != 0.0 {
                for q in self.lp[i]..self.lp[i + 1] {
                    x[self.li[q]] -= self.lx[q] * xi;
                }
            }
        }
        for i in 0..n {
            x[i] *= self.dinv[i];
        }
        for i in (0..n).rev() {
            let mut acc = x[i];
            for q in self.lp[i]..self.lp[i + 1] {
                acc -= self.lx[q] * x[self.li[q]];
            }
            x[i] = acc;
        }
        for k in 0..n {
            b[self.perm[k]] = x[k];
        }
    }

    /// Pivots in factorization order.
    pub fn pivots(&self) -> &[f64] {
        &self.d
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn upper_of(dense: &[Vec<f64>]) -> CscMatrix {
        let n = dense.len();
        let mut t = Vec::new();
        for j in 0..n {
            for i in 0..=j {
                if dense[i][j] != 0.0 || i == j {
                    t.push((i, j, dense[i][j]));
                }
            }
        }
        // from_triplets drops exact zeros; keep diagonal slots explicitly
        let mut m = CscMatrix::from_triplets(n, n, &t);
        if m.nnz() != t.len() {
            let mut colptr = vec![0; n + 1];
            let mut rowval = vec![];
            let mut nzval = vec![];
            for j in 0..n {
                for i in 0..=j {
                    if dense[i][j] != 0.0 || i == j {
                        rowval.push(i);
                        nzval.push(dense[i][j]);
                    }
                }
                colptr[j + 1] = rowval.len();
            }
            m = CscMatrix { nrows: n, ncols: n, colptr, rowval, nzval };
        }
        m
    }

    fn matvec(dense: &[Vec<f64>], x: &[f64]) -> Vec<f64> {
        dense.iter().map(|r| r.iter().zip(x).map(|(a, b)| a * b).sum()).collect()
    }

    #[test]
    fn solves_quasi_definite_system() {
        // [-H  A^T; A  0] with H = diag(2, 3, 1), A = [1 1 0; 0 1 1]
        let k = vec![
            vec![-2.0, 0.0, 0.0, 1.0, 0.0],
            vec![0.0, -3.0, 0.0, 1.0, 1.0],
            vec![0.0, 0.0, -1.0, 0.0, 1.0],
            vec![1.0, 1.0, 0.0, 1e-12, 0.0],
            vec![0.0, 1.0, 1.0, 0.0, 1e-12],
        ];
        let up = upper_of(&k);
        let mut f = LdlFactor::new(&up, &[-1.0, -1.0, -1.0, 1.0, 1.0]).unwrap();
        let reg = f.refactor(&up.nzval).unwrap();
        assert_eq!(reg, 0);
        let xs = vec![0.3, -1.2, 2.0, 0.7, -0.4];
        let mut b = matvec(&k, &xs);
        f.solve_in_place(&mut b);
        for (a, e) in b.iter().zip(&xs) {
            assert!((a - e).abs() < 1e-9, "{a} vs {e}");
        }
    }

    #[test]
    fn wrong_sign_pivot_is_regularized() {
        let k = vec![vec![1.0]];
        let up = upper_of(&k);
        let mut f = LdlFactor::new(&up, &[-1.0]).unwrap();
        assert_eq!(f.refactor(&up.nzval).unwrap(), 1);
        assert!(f.pivots()[0] < 0.0);
    }

    #[test]
    fn rejects_missing_diagonal() {
        let m = CscMatrix::from_triplets(2, 2, &[(0, 0, 1.0), (0, 1, 1.0)]);
        assert!(LdlFactor::new(&m, &[1.0, 1.0]).is_err());
    }
}
