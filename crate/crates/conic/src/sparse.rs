//! Compressed sparse column storage.

use serde::{Deserialize, Serialize};

/// A sparse matrix in compressed sparse column form.
///
/// Row indices within each column are sorted and unique.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CscMatrix {
    pub nrows: usize,
    pub ncols: usize,
    pub colptr: Vec<usize>,
    pub rowval: Vec<usize>,
    pub nzval: Vec<f64>,
}

impl CscMatrix {
    pub fn zeros(nrows: usize, ncols: usize) -> Self {
        Self {
            nrows,
            ncols,
            colptr: vec![0; ncols + 1],
            rowval: Vec::new(),
            nzval: Vec::new(),
        }
    }

    /// Assemble from `(row, col, value)` triplets. Duplicates are summed and
    /// entries that sum to exactly zero are dropped.
    ///
    /// Panics if an index is out of range.
    pub fn from_triplets(nrows: usize, ncols: usize, triplets: &[(usize, usize, f64)]) -> Self {
        let mut sorted: Vec<(usize, usize, f64)> = triplets.to_vec();
        for &(i, j, _) in &sorted {
            assert!(i < nrows && j < ncols, "triplet ({i}, {j}) out of range");
        }
        sorted.sort_by(|a, b| (a.1, a.0).cmp(&(b.1, b.0)));

        let mut colptr = vec![0usize; ncols + 1];
        let mut rowval = Vec::with_capacity(sorted.len());
        let mut nzval = Vec::with_capacity(sorted.len());
        let mut k = 0;
        while k < sorted.len() {
            let (i, j, mut v) = sorted[k];
            k += 1;
            while k < sorted.len() && sorted[k].0 == i && sorted[k].1 == j {
                v += sorted[k].2;
                k += 1;
            }
            if v != 0.0 {
                rowval.push(i);
                nzval.push(v);
                colptr[j + 1] += 1;
            }
        }
        for j in 0..ncols {
            colptr[j + 1] += colptr[j];
        }
        Self {
            nrows,
            ncols,
            colptr,
            rowval,
            nzval,
        }
    }

    pub fn nnz(&self) -> usize {
        self.nzval.len()
    }

    /// Iterate over stored entries in column-major order.
    pub fn triplets(&self) -> impl Iterator<Item = (usize, usize, f64)> + '_ {
        (0..self.ncols).flat_map(move |j| {
            (self.colptr[j]..self.colptr[j + 1]).map(move |p| (self.rowval[p], j, self.nzval[p]))
        })
    }

    pub fn column(&self, j: usize) -> impl Iterator<Item = (usize, f64)> + '_ {
        (self.colptr[j]..self.colptr[j + 1]).map(move |p| (self.rowval[p], self.nzval[p]))
    }

    /// `y = alpha * A x + beta * y`
    pub fn gemv(&self, alpha: f64, x: &[f64], beta: f64, y: &mut [f64]) {
        debug_assert_eq!(x.len(), self.ncols);
        debug_assert_eq!(y.len(), self.nrows);
        if beta != 1.0 {
            y.iter_mut().for_each(|v| *v *= beta);
        }
        for j in 0..self.ncols {
            let xj = alpha * x[j];
            if xj == 0.0 {
                continue;
            }
            for p in self.colptr[j]..self.colptr[j + 1] {
                y[self.rowval[p]] += self.nzval[p] * xj;
            }
        }
    }

    /// `y = alpha * Aᵀ x + beta * y`
    pub fn gemv_t(&self, alpha: f64, x: &[f64], beta: f64, y: &mut [f64]) {
        debug_assert_eq!(x.len(), self.nrows);
        debug_assert_eq!(y.len(), self.ncols);
        for j in 0..self.ncols {
            let mut acc = 0.0;
            for p in self.colptr[j]..self.colptr[j + 1] {
                acc += self.nzval[p] * x[self.rowval[p]];
            }
            y[j] = alpha * acc + if beta == 0.0 { 0.0 } else { beta * y[j] };
        }
    }

    pub fn mul_vec(&self, x: &[f64]) -> Vec<f64> {
        let mut y = vec![0.0; self.nrows];
        self.gemv(1.0, x, 0.0, &mut y);
        y
    }

    pub fn tmul_vec(&self, x: &[f64]) -> Vec<f64> {
        let mut y = vec![0.0; self.ncols];
        self.gemv_t(1.0, x, 0.0, &mut y);
        y
    }

    pub fn transpose(&self) -> Self {
        let t: Vec<_> = self.triplets().map(|(i, j, v)| (j, i, v)).collect();
        Self::from_triplets(self.ncols, self.nrows, &t)
    }

    /// Scale rows by `left` and columns by `right`: `diag(left) A diag(right)`.
    pub fn scale(&mut self, left: &[f64], right: &[f64]) {
        for j in 0..self.ncols {
            for p in self.colptr[j]..self.colptr[j + 1] {
                self.nzval[p] *= left[self.rowval[p]] * right[j];
            }
        }
    }

    /// Max-abs of each column.
    pub fn col_norms_inf(&self) -> Vec<f64> {
        (0..self.ncols)
            .map(|j| self.column(j).fold(0.0f64, |m, (_, v)| m.max(v.abs())))
            .collect()
    }

    /// Max-abs of each row.
    pub fn row_norms_inf(&self) -> Vec<f64> {
        let mut r = vec![0.0f64; self.nrows];
        for (i, _, v) in self.triplets() {
            r[i] = r[i].max(v.abs());
        }
        r
    }

    pub fn to_dense(&self) -> Vec<Vec<f64>> {
        let mut d = vec![vec![0.0; self.ncols]; self.nrows];
        for (i, j, v) in self.triplets() {
            d[i][j] = v;
        }
        d
    }
}
