//! Compressed-row sparse matrices.

use crate::error::{Error, Result};

/// A real sparse matrix in compressed row storage.
///
/// Column indices are strictly increasing within each row and no explicit
/// zeros are stored.
#[derive(Clone, Debug, PartialEq)]
pub struct SparseOperator {
    nrows: usize,
    ncols: usize,
    row_ptr: Vec<usize>,
    col_idx: Vec<usize>,
    values: Vec<f64>,
}

impl SparseOperator {
    /// Build from triplets, summing duplicates and dropping exact zeros.
    pub fn from_triplets(nrows: usize, ncols: usize, triplets: &[(usize, usize, f64)]) -> Self {
        let mut counts = vec![0usize; nrows + 1];
        for &(i, j, _) in triplets {
            assert!(i < nrows && j < ncols, "triplet ({i},{j}) out of bounds");
            counts[i + 1] += 1;
        }
        for i in 0..nrows {
            counts[i + 1] += counts[i];
        }
        let mut next = counts.clone();
        let mut cols = vec![0usize; triplets.len()];
        let mut vals = vec![0.0; triplets.len()];
        for &(i, j, v) in triplets {
            let p = next[i];
            cols[p] = j;
            vals[p] = v;
            next[i] += 1;
        }

        let mut row_ptr = Vec::with_capacity(nrows + 1);
        let mut col_idx = Vec::with_capacity(triplets.len());
        let mut values = Vec::with_capacity(triplets.len());
        row_ptr.push(0);
        let mut scratch: Vec<(usize, f64)> = Vec::new();
        for i in 0..nrows {
            scratch.clear();
            scratch.extend((counts[i]..counts[i + 1]).map(|p| (cols[p], vals[p])));
            // stable sort keeps summation order deterministic
            scratch.sort_by_key(|&(j, _)| j);
            let mut k = 0;
            while k < scratch.len() {
                let j = scratch[k].0;
                let mut s = 0.0;
                while k < scratch.len() && scratch[k].0 == j {
                    s += scratch[k].1;
                    k += 1;
                }
                if s != 0.0 {
                    col_idx.push(j);
                    values.push(s);
                }
            }
            row_ptr.push(col_idx.len());
        }
        Self {
            nrows,
            ncols,
            row_ptr,
            col_idx,
            values,
        }
    }

    pub fn identity(n: usize) -> Self {
        Self {
            nrows: n,
            ncols: n,
            row_ptr: (0..=n).collect(),
            col_idx: (0..n).collect(),
            values: vec![1.0; n],
        }
    }

    pub fn nrows(&self) -> usize {
        self.nrows
    }

    pub fn ncols(&self) -> usize {
        self.ncols
    }

    pub fn nnz(&self) -> usize {
        self.values.len()
    }

    pub fn row_ptr(&self) -> &[usize] {
        &self.row_ptr
    }

    pub fn col_idx(&self) -> &[usize] {
        &self.col_idx
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn row(&self, i: usize) -> impl Iterator<Item = (usize, f64)> + '_ {
        let r = self.row_ptr[i]..self.row_ptr[i + 1];
        self.col_idx[r.clone()]
            .iter()
            .copied()
            .zip(self.values[r].iter().copied())
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        let r = self.row_ptr[i]..self.row_ptr[i + 1];
        match self.col_idx[r.clone()].binary_search(&j) {
            Ok(p) => self.values[r.start + p],
            Err(_) => 0.0,
        }
    }

    pub fn triplets(&self) -> Vec<(usize, usize, f64)> {
        let mut out = Vec::with_capacity(self.nnz());
        for i in 0..self.nrows {
            out.extend(self.row(i).map(|(j, v)| (i, j, v)));
        }
        out
    }

    /// `y = A x`
    pub fn matvec(&self, x: &[f64]) -> Vec<f64> {
        let mut y = vec![0.0; self.nrows];
        self.matvec_into(x, &mut y);
        y
    }

    pub fn matvec_into(&self, x: &[f64], y: &mut [f64]) {
        debug_assert_eq!(x.len(), self.ncols);
        debug_assert_eq!(y.len(), self.nrows);
        for (i, yi) in y.iter_mut().enumerate() {
            let mut s = 0.0;
            for p in self.row_ptr[i]..self.row_ptr[i + 1] {
                s += self.values[p] * x[self.col_idx[p]];
            }
            *yi = s;
        }
    }

    /// `Y = A X` for interleaved blocks of `r` columns.
    pub fn matvec_many_into(&self, x: &[f64], y: &mut [f64], r: usize) {
        debug_assert_eq!(x.len(), self.ncols * r);
        debug_assert_eq!(y.len(), self.nrows * r);
        for (i, yr) in y.chunks_exact_mut(r).enumerate() {
            yr.iter_mut().for_each(|v| *v = 0.0);
            for p in self.row_ptr[i]..self.row_ptr[i + 1] {
                let (a, xr) = (self.values[p], &x[self.col_idx[p] * r..(self.col_idx[p] + 1) * r]);
                for (v, xv) in yr.iter_mut().zip(xr) {
                    *v += a * xv;
                }
            }
        }
    }

    /// `y += alpha * A x`
    pub fn matvec_add(&self, alpha: f64, x: &[f64], y: &mut [f64]) {
        for (i, yi) in y.iter_mut().enumerate() {
            let mut s = 0.0;
            for p in self.row_ptr[i]..self.row_ptr[i + 1] {
                s += self.values[p] * x[self.col_idx[p]];
            }
            *yi += alpha * s;
        }
    }

    /// `y = A^T x`
    pub fn matvec_transpose(&self, x: &[f64]) -> Vec<f64> {
        let mut y = vec![0.0; self.ncols];
        self.matvec_transpose_add(1.0, x, &mut y);
        y
    }

    pub fn matvec_transpose_add(&self, alpha: f64, x: &[f64], y: &mut [f64]) {
        debug_assert_eq!(x.len(), self.nrows);
        for (i, &xi) in x.iter().enumerate() {
            if xi == 0.0 {
                continue;
            }
            let a = alpha * xi;
            for p in self.row_ptr[i]..self.row_ptr[i + 1] {
                y[self.col_idx[p]] += self.values[p] * a;
            }
        }
    }

    /// `x^T A y`
    pub fn bilinear(&self, x: &[f64], y: &[f64]) -> f64 {
        let mut s = 0.0;
        for (i, &xi) in x.iter().enumerate() {
            let mut r = 0.0;
            for p in self.row_ptr[i]..self.row_ptr[i + 1] {
                r += self.values[p] * y[self.col_idx[p]];
            }
            s += xi * r;
        }
        s
    }

    pub fn transpose(&self) -> Self {
        let t: Vec<_> = self.triplets().into_iter().map(|(i, j, v)| (j, i, v)).collect();
        Self::from_triplets(self.ncols, self.nrows, &t)
    }

    pub fn scale(&self, alpha: f64) -> Self {
        let t: Vec<_> = self
            .triplets()
            .into_iter()
            .map(|(i, j, v)| (i, j, alpha * v))
            .collect();
        Self::from_triplets(self.nrows, self.ncols, &t)
    }

    /// `alpha A + beta B`
    pub fn linear_combination(alpha: f64, a: &Self, beta: f64, b: &Self) -> Result<Self> {
        if a.nrows != b.nrows || a.ncols != b.ncols {
            return Err(Error::Dimension(format!(
                "{}x{} + {}x{}",
                a.nrows, a.ncols, b.nrows, b.ncols
            )));
        }
        let mut t: Vec<_> = a.triplets().into_iter().map(|(i, j, v)| (i, j, alpha * v)).collect();
        t.extend(b.triplets().into_iter().map(|(i, j, v)| (i, j, beta * v)));
        Ok(Self::from_triplets(a.nrows, a.ncols, &t))
    }

    /// Block diagonal `diag(A, A, ..., A)` with `copies` blocks.
    pub fn block_diagonal(&self, copies: usize) -> Self {
        let mut t = Vec::with_capacity(self.nnz() * copies);
        for c in 0..copies {
            t.extend(
                self.triplets()
                    .into_iter()
                    .map(|(i, j, v)| (i + c * self.nrows, j + c * self.ncols, v)),
            );
        }
        Self::from_triplets(self.nrows * copies, self.ncols * copies, &t)
    }

    /// Largest absolute entry.
    pub fn max_abs(&self) -> f64 {
        self.values.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    /// Largest absolute entry of `A - A^T`.
    pub fn asymmetry(&self) -> f64 {
        let mut worst: f64 = 0.0;
        for i in 0..self.nrows {
            for (j, v) in self.row(i) {
                worst = worst.max((v - self.get(j, i)).abs());
            }
        }
        worst
    }

    pub fn diagonal(&self) -> Vec<f64> {
        (0..self.nrows.min(self.ncols)).map(|i| self.get(i, i)).collect()
    }

    /// Dense copy, row-major. Test and diagnostic use only.
    pub fn to_dense(&self) -> Vec<Vec<f64>> {
        let mut d = vec![vec![0.0; self.ncols]; self.nrows];
        for i in 0..self.nrows {
            for (j, v) in self.row(i) {
                d[i][j] = v;
            }
        }
        d
    }
}

pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

pub fn norm2(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

pub fn norm_inf(a: &[f64]) -> f64 {
    a.iter().fold(0.0, |m, v| m.max(v.abs()))
}

/// `y += alpha x`
pub fn axpy(alpha: f64, x: &[f64], y: &mut [f64]) {
    for (yi, xi) in y.iter_mut().zip(x) {
        *yi += alpha * xi;
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn triplets_are_summed_sorted_and_pruned() {
        let a = SparseOperator::from_triplets(
            2,
            3,
            &[(0, 2, 1.0), (0, 0, 2.0), (0, 2, 0.5), (1, 1, 1.0), (1, 1, -1.0)],
        );
        assert_eq!(a.row_ptr(), &[0, 2, 2]);
        assert_eq!(a.col_idx(), &[0, 2]);
        assert_eq!(a.values(), &[2.0, 1.5]);
    }

    #[test]
    fn transpose_products_agree() {
        let a = SparseOperator::from_triplets(
            3,
            2,
            &[(0, 0, 1.0), (1, 1, 2.0), (2, 0, -3.0), (2, 1, 4.0)],
        );
        let x = [1.0, -2.0, 0.5];
        let y = a.matvec_transpose(&x);
        let at = a.transpose();
        assert_eq!(at.matvec(&x), y);
        assert_eq!(at.transpose(), a);
    }

    #[test]
    fn block_diagonal_and_combination() {
        let a = SparseOperator::from_triplets(2, 2, &[(0, 0, 1.0), (0, 1, 2.0), (1, 1, 3.0)]);
        let b = a.block_diagonal(2);
        assert_eq!(b.nrows(), 4);
        assert_eq!(b.get(2, 3), 2.0);
        assert_eq!(b.get(0, 3), 0.0);
        let c = SparseOperator::linear_combination(1.0, &a, -1.0, &a).unwrap();
        assert_eq!(c.nnz(), 0);
        assert!(SparseOperator::linear_combination(1.0, &a, 1.0, &b).is_err());
    }
}
