//! Compressed-sparse-row complex matrices.

use nalgebra::DMatrix;
use num_complex::Complex64;

use crate::tol::PRUNE;

type C64 = Complex64;

/// Row-major compressed sparse matrix. Column indices within a row are sorted
/// and unique; explicit zeros are never stored.
#[derive(Clone, Debug, PartialEq)]
pub struct SparseMatrix {
    nrows: usize,
    ncols: usize,
    indptr: Vec<usize>,
    indices: Vec<usize>,
    data: Vec<C64>,
}

impl SparseMatrix {
    pub fn zeros(nrows: usize, ncols: usize) -> Self {
        SparseMatrix { nrows, ncols, indptr: vec![0; nrows + 1], indices: Vec::new(), data: Vec::new() }
    }

    pub fn identity(n: usize) -> Self {
        Self::diagonal(&vec![C64::new(1.0, 0.0); n])
    }

    pub fn diagonal(diag: &[C64]) -> Self {
        Self::from_triplets(diag.len(), diag.len(), diag.iter().enumerate().map(|(i, &v)| (i, i, v)))
    }

    /// Builds a matrix from (row, col, value) triplets; duplicates are summed.
    pub fn from_triplets<I>(nrows: usize, ncols: usize, triplets: I) -> Self
    where
        I: IntoIterator<Item = (usize, usize, C64)>,
    {
        let mut rows: Vec<Vec<(usize, C64)>> = vec![Vec::new(); nrows];
        for (r, c, v) in triplets {
            assert!(r < nrows && c < ncols, "triplet ({r},{c}) outside {nrows}x{ncols}");
            rows[r].push((c, v));
        }
        let mut out = SparseMatrix::zeros(nrows, ncols);
        for (r, mut row) in rows.into_iter().enumerate() {
            row.sort_by_key(|e| e.0);
            let mut k = 0;
            while k < row.len() {
                let c = row[k].0;
                let mut v = C64::new(0.0, 0.0);
                while k < row.len() && row[k].0 == c {
                    v += row[k].1;
                    k += 1;
                }
                if v != C64::new(0.0, 0.0) {
                    out.indices.push(c);
                    out.data.push(v);
                }
            }
            out.indptr[r + 1] = out.indices.len();
        }
        out
    }

    pub fn from_dense(m: &DMatrix<C64>) -> Self {
        let (nr, nc) = m.shape();
        let mut trip = Vec::new();
        for r in 0..nr {
            for c in 0..nc {
                let v = m[(r, c)];
                if v.norm() > 0.0 {
                    trip.push((r, c, v));
                }
            }
        }
        Self::from_triplets(nr, nc, trip)
    }

    pub fn nrows(&self) -> usize {
        self.nrows
    }

    pub fn ncols(&self) -> usize {
        self.ncols
    }

    pub fn nnz(&self) -> usize {
        self.data.len()
    }

    pub fn get(&self, r: usize, c: usize) -> C64 {
        let row = &self.indices[self.indptr[r]..self.indptr[r + 1]];
        match row.binary_search(&c) {
            Ok(k) => self.data[self.indptr[r] + k],
            Err(_) => C64::new(0.0, 0.0),
        }
    }

    /// Iterates stored entries in row-major order.
    pub fn triplets(&self) -> impl Iterator<Item = (usize, usize, C64)> + '_ {
        (0..self.nrows).flat_map(move |r| {
            (self.indptr[r]..self.indptr[r + 1]).map(move |k| (r, self.indices[k], self.data[k]))
        })
    }

    pub fn row(&self, r: usize) -> impl Iterator<Item = (usize, C64)> + '_ {
        (self.indptr[r]..self.indptr[r + 1]).map(move |k| (self.indices[k], self.data[k]))
    }

    pub fn to_dense(&self) -> DMatrix<C64> {
        let mut m = DMatrix::zeros(self.nrows, self.ncols);
        for (r, c, v) in self.triplets() {
            m[(r, c)] = v;
        }
        m
    }

    pub fn scale(&self, s: C64) -> Self {
        if s == C64::new(0.0, 0.0) {
            return Self::zeros(self.nrows, self.ncols);
        }
        let mut out = self.clone();
        out.data.iter_mut().for_each(|v| *v *= s);
        out
    }

    pub fn add(&self, other: &Self) -> Self {
        self.axpy(C64::new(1.0, 0.0), other)
    }

    pub fn sub(&self, other: &Self) -> Self {
        self.axpy(C64::new(-1.0, 0.0), other)
    }

    /// Returns `self + s * other`.
    pub fn axpy(&self, s: C64, other: &Self) -> Self {
        assert_eq!((self.nrows, self.ncols), (other.nrows, other.ncols), "shape mismatch in add");
        let mut out = SparseMatrix::zeros(self.nrows, self.ncols);
        for r in 0..self.nrows {
            let (mut i, ie) = (self.indptr[r], self.indptr[r + 1]);
            let (mut j, je) = (other.indptr[r], other.indptr[r + 1]);
            while i < ie || j < je {
                let ci = if i < ie { self.indices[i] } else { usize::MAX };
                let cj = if j < je { other.indices[j] } else { usize::MAX };
                let (c, v) = if ci < cj {
                    i += 1;
                    (ci, self.data[i - 1])
                } else if cj < ci {
                    j += 1;
                    (cj, s * other.data[j - 1])
                } else {
                    i += 1;
                    j += 1;
                    (ci, self.data[i - 1] + s * other.data[j - 1])
                };
                if v != C64::new(0.0, 0.0) {
                    out.indices.push(c);
                    out.data.push(v);
                }
            }
            out.indptr[r + 1] = out.indices.len();
        }
        out
    }

    /// Sparse product (Gustavson's row-by-row algorithm).
    pub fn matmul(&self, other: &Self) -> Self {
        assert_eq!(self.ncols, other.nrows, "shape mismatch in matmul");
        let mut out = SparseMatrix::zeros(self.nrows, other.ncols);
        let mut acc = vec![C64::new(0.0, 0.0); other.ncols];
        let mut mark = vec![usize::MAX; other.ncols];
        let mut cols: Vec<usize> = Vec::new();
        for r in 0..self.nrows {
            cols.clear();
            for (k, a) in self.row(r) {
                for (c, b) in other.row(k) {
                    if mark[c] != r {
                        mark[c] = r;
                        acc[c] = C64::new(0.0, 0.0);
                        cols.push(c);
                    }
                    acc[c] += a * b;
                }
            }
            cols.sort_unstable();
            for &c in &cols {
                if acc[c] != C64::new(0.0, 0.0) {
                    out.indices.push(c);
                    out.data.push(acc[c]);
                }
            }
            out.indptr[r + 1] = out.indices.len();
        }
        out
    }

    pub fn transpose(&self) -> Self {
        Self::from_triplets(self.ncols, self.nrows, self.triplets().map(|(r, c, v)| (c, r, v)))
    }

    pub fn adjoint(&self) -> Self {
        Self::from_triplets(self.ncols, self.nrows, self.triplets().map(|(r, c, v)| (c, r, v.conj())))
    }

    pub fn conj(&self) -> Self {
        let mut out = self.clone();
        out.data.iter_mut().for_each(|v| *v = v.conj());
        out
    }

    /// Kronecker product `self ⊗ other`.
    pub fn kron(&self, other: &Self) -> Self {
        let (nr, nc) = (self.nrows * other.nrows, self.ncols * other.ncols);
        let mut trip = Vec::with_capacity(self.nnz() * other.nnz());
        for (r1, c1, v1) in self.triplets() {
            for (r2, c2, v2) in other.triplets() {
                trip.push((r1 * other.nrows + r2, c1 * other.ncols + c2, v1 * v2));
            }
        }
        Self::from_triplets(nr, nc, trip)
    }

    pub fn trace(&self) -> C64 {
        (0..self.nrows.min(self.ncols)).map(|i| self.get(i, i)).sum()
    }

    pub fn max_abs(&self) -> f64 {
        self.data.iter().map(|v| v.norm()).fold(0.0, f64::max)
    }

    /// Drops entries with modulus at or below `tol`.
    pub fn pruned(&self, tol: f64) -> Self {
        Self::from_triplets(self.nrows, self.ncols, self.triplets().filter(|e| e.2.norm() > tol))
    }

    /// Drops round-off level entries relative to the largest entry.
    pub fn cleaned(&self) -> Self {
        let scale = self.max_abs().max(1.0);
        self.pruned(PRUNE * scale)
    }

    /// `self * m` for a dense right operand.
    pub fn mul_dense(&self, m: &DMatrix<C64>) -> DMatrix<C64> {
        assert_eq!(self.ncols, m.nrows());
        let mut out = DMatrix::zeros(self.nrows, m.ncols());
        for j in 0..m.ncols() {
            let col = m.column(j);
            for r in 0..self.nrows {
                let mut s = C64::new(0.0, 0.0);
                for (k, v) in self.row(r) {
                    s += v * col[k];
                }
                out[(r, j)] = s;
            }
        }
        out
    }

    /// `m * self` for a dense left operand.
    pub fn dense_mul(&self, m: &DMatrix<C64>) -> DMatrix<C64> {
        assert_eq!(m.ncols(), self.nrows);
        let mut out = DMatrix::zeros(m.nrows(), self.ncols);
        for (k, c, v) in self.triplets() {
            for i in 0..m.nrows() {
                out[(i, c)] += m[(i, k)] * v;
            }
        }
        out
    }

    /// Adds `s * self * x * other` into `out` without forming intermediates
    /// beyond one dense product.
    pub fn sandwich_into(&self, x: &DMatrix<C64>, other: &SparseMatrix, s: C64, out: &mut DMatrix<C64>) {
        let ax = self.mul_dense(x);
        for (k, c, v) in other.triplets() {
            let w = s * v;
            for i in 0..ax.nrows() {
                out[(i, c)] += ax[(i, k)] * w;
            }
        }
    }

    /// `tr(self * m)` for dense `m`.
    pub fn trace_product(&self, m: &DMatrix<C64>) -> C64 {
        let mut s = C64::new(0.0, 0.0);
        for (r, c, v) in self.triplets() {
            s += v * m[(c, r)];
        }
        s
    }

    pub fn is_square(&self) -> bool {
        self.nrows == self.ncols
    }
}
