//! Sparse `L D L^T` factorization without pivoting.
//!
//! The numeric phase is the up-looking elimination-tree algorithm. For
//! symmetric indefinite (saddle point) matrices, a pivot that is
//! numerically zero is replaced by a small signed regularization and the
//! lost accuracy is recovered by iterative refinement against the original
//! matrix inside [`Factorization::solve`].

use crate::error::{Error, Result};
use crate::solve::ordering;
use crate::sparse::SparseOperator;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum FactorKind {
    Spd,
    SymmetricIndefinite,
}

/// Relative residual accepted by [`Factorization::solve`].
pub const SOLVE_TOLERANCE: f64 = 1e-10;
const REFINE_TARGET: f64 = 1e-12;
const MAX_REFINE: usize = 10;
/// SPD pivots at or below this fraction of the largest diagonal entry are
/// treated as a loss of definiteness.
const SPD_PIVOT_TOL: f64 = 1e-12;
const ZERO_PIVOT_TOL: f64 = 1e-14;
const REGULARIZATION: f64 = 1e-9;

#[derive(Clone, Debug)]
pub struct Factorization {
    kind: FactorKind,
    n: usize,
    /// new position -> original index
    perm: Vec<usize>,
    lp: Vec<usize>,
    li: Vec<usize>,
    lx: Vec<f64>,
    d_inv: Vec<f64>,
    matrix: SparseOperator,
    regularized: usize,
}

pub fn factorize(op: &SparseOperator, kind: FactorKind) -> Result<Factorization> {
    let order = ordering::nested_dissection_scalar(op);
    factorize_ordered(op, kind, order)
}

/// Factorize using an elimination order built from groups of indices that
/// must be eliminated together, in the given within-group order.
pub fn factorize_with_blocks(
    op: &SparseOperator,
    kind: FactorKind,
    blocks: &[Vec<usize>],
) -> Result<Factorization> {
    let order = ordering::nested_dissection(op, blocks);
    factorize_ordered(op, kind, order)
}

pub fn factorize_ordered(
    op: &SparseOperator,
    kind: FactorKind,
    perm: Vec<usize>,
) -> Result<Factorization> {
    let n = op.nrows();
    if op.ncols() != n {
        return Err(Error::Dimension(format!(
            "cannot factorize a {}x{} operator",
            n,
            op.ncols()
        )));
    }
    if perm.len() != n {
        return Err(Error::Dimension("ordering length differs from matrix size".into()));
    }
    let mut iperm = vec![usize::MAX; n];
    for (new, &old) in perm.iter().enumerate() {
        iperm[old] = new;
    }

    // upper triangle of P A P^T in compressed columns
    let mut col_count = vec![0usize; n + 1];
    for i in 0..n {
        let ni = iperm[i];
        for (j, _) in op.row(i) {
            let nj = iperm[j];
            if ni <= nj {
                col_count[nj + 1] += 1;
            }
        }
    }
    for j in 0..n {
        col_count[j + 1] += col_count[j];
    }
    let ap = col_count.clone();
    let mut next = col_count;
    let mut ai = vec![0usize; ap[n]];
    let mut ax = vec![0.0; ap[n]];
    for i in 0..n {
        let ni = iperm[i];
        for (j, v) in op.row(i) {
            let nj = iperm[j];
            if ni <= nj {
                let p = next[nj];
                ai[p] = ni;
                ax[p] = v;
                next[nj] += 1;
            }
        }
    }

    // elimination tree and column counts
    let mut parent = vec![usize::MAX; n];
    let mut lnz = vec![0usize; n];
    let mut work = vec![usize::MAX; n];
    for j in 0..n {
        work[j] = j;
        for p in ap[j]..ap[j + 1] {
            let mut i = ai[p];
            if i == j {
                continue;
            }
            while work[i] != j {
                if parent[i] == usize::MAX {
                    parent[i] = j;
                }
                lnz[i] += 1;
                work[i] = j;
                i = parent[i];
            }
        }
    }
    let mut lp = vec![0usize; n + 1];
    for i in 0..n {
        lp[i + 1] = lp[i] + lnz[i];
    }
    let total = lp[n];
    let mut li = vec![0usize; total];
    let mut lx = vec![0.0; total];

    let scale = op.diagonal().iter().fold(0.0f64, |m, v| m.max(v.abs())).max(
        // all-zero diagonal: fall back on the largest entry
        if op.diagonal().iter().all(|v| *v == 0.0) {
            op.max_abs()
        } else {
            0.0
        },
    );
    if scale == 0.0 && n > 0 {
        return Err(Error::Factorization {
            index: 0,
            reason: "matrix is zero".into(),
        });
    }

    let mut d = vec![0.0; n];
    let mut d_inv = vec![0.0; n];
    let mut y = vec![0.0; n];
    let mut marked = vec![false; n];
    let mut y_idx = vec![0usize; n];
    let mut stack = vec![0usize; n];
    let mut next_in_col: Vec<usize> = lp[..n].to_vec();
    let mut regularized = 0;

    for k in 0..n {
        let mut nnz_y = 0;
        let mut dk = 0.0;
        for p in ap[k]..ap[k + 1] {
            let b = ai[p];
            if b == k {
                dk = ax[p];
                continue;
            }
            y[b] = ax[p];
            if marked[b] {
                continue;
            }
            // walk up the etree to collect the reach of row k
            let mut depth = 0;
            let mut x = b;
            while x != usize::MAX && x < k && !marked[x] {
                marked[x] = true;
                stack[depth] = x;
                depth += 1;
                x = parent[x];
            }
            while depth > 0 {
                depth -= 1;
                y_idx[nnz_y] = stack[depth];
                nnz_y += 1;
            }
        }
        for t in (0..nnz_y).rev() {
            let c = y_idx[t];
            let yc = y[c];
            let end = next_in_col[c];
            for q in lp[c]..end {
                y[li[q]] -= lx[q] * yc;
            }
            let l = yc * d_inv[c];
            li[end] = k;
            lx[end] = l;
            dk -= yc * l;
            next_in_col[c] += 1;
            y[c] = 0.0;
            marked[c] = false;
        }

        match kind {
            FactorKind::Spd => {
                if !(dk > SPD_PIVOT_TOL * scale) {
                    return Err(Error::Factorization {
                        index: perm[k],
                        reason: format!("non-positive pivot {dk:.3e} (matrix not positive definite)"),
                    });
                }
            }
            FactorKind::SymmetricIndefinite => {
                if dk.abs() <= ZERO_PIVOT_TOL * scale {
                    // zero diagonal rows of a saddle system are constraints
                    dk = if dk > 0.0 { 1.0 } else { -1.0 } * REGULARIZATION * scale;
                    regularized += 1;
                }
                if !dk.is_finite() {
                    return Err(Error::Factorization {
                        index: perm[k],
                        reason: "non-finite pivot".into(),
                    });
                }
            }
        }
        d[k] = dk;
        d_inv[k] = 1.0 / dk;
    }

    Ok(Factorization {
        kind,
        n,
        perm,
        lp,
        li,
        lx,
        d_inv,
        matrix: op.clone(),
        regularized,
    })
}

/// Scratch space for allocation-free solves.
#[derive(Clone, Debug, Default)]
pub struct SolveWorkspace {
    permuted: Vec<f64>,
    residual: Vec<f64>,
    correction: Vec<f64>,
}

impl Factorization {
    pub fn kind(&self) -> FactorKind {
        self.kind
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn nnz_l(&self) -> usize {
        self.lx.len()
    }

    /// Number of pivots replaced by regularization.
    pub fn regularized_pivots(&self) -> usize {
        self.regularized
    }

    pub fn matrix(&self) -> &SparseOperator {
        &self.matrix
    }

    /// One pass through the factors, no refinement.
    pub fn backsolve(&self, b: &[f64], x: &mut [f64], scratch: &mut Vec<f64>) {
        self.backsolve_many(b, x, 1, scratch);
    }

    /// [`backsolve`](Self::backsolve) for `nrhs` right-hand sides stored
    /// interleaved (`b[i * nrhs + c]`). Every column sees exactly the
    /// operations of a single solve.
    pub fn backsolve_many(&self, b: &[f64], x: &mut [f64], nrhs: usize, scratch: &mut Vec<f64>) {
        let (n, r) = (self.n, nrhs);
        scratch.resize(n * r, 0.0);
        for (k, &old) in self.perm.iter().enumerate() {
            scratch[k * r..(k + 1) * r].copy_from_slice(&b[old * r..(old + 1) * r]);
        }
        match r {
            1 => self.sweep::<1>(scratch),
            2 => self.sweep::<2>(scratch),
            4 => self.sweep::<4>(scratch),
            8 => self.sweep::<8>(scratch),
            16 => self.sweep::<16>(scratch),
            32 => self.sweep::<32>(scratch),
            _ => {
                for c in 0..r {
                    let mut col: Vec<f64> = scratch.iter().skip(c).step_by(r).copied().collect();
                    self.sweep::<1>(&mut col);
                    for (i, v) in col.into_iter().enumerate() {
                        scratch[i * r + c] = v;
                    }
                }
            }
        }
        for (k, &old) in self.perm.iter().enumerate() {
            x[old * r..(old + 1) * r].copy_from_slice(&scratch[k * r..(k + 1) * r]);
        }
    }

    /// Forward, diagonal and backward sweeps on `R` interleaved columns
    /// in elimination order.
    fn sweep<const R: usize>(&self, scratch: &mut [f64]) {
        let (rows, _) = scratch.as_chunks_mut::<R>();
        for i in 0..self.n {
            let xi = rows[i];
            if xi.iter().all(|&v| v == 0.0) {
                continue;
            }
            for q in self.lp[i]..self.lp[i + 1] {
                let (l, row) = (self.lx[q], &mut rows[self.li[q]]);
                for c in 0..R {
                    row[c] -= l * xi[c];
                }
            }
        }
        for (row, di) in rows.iter_mut().zip(&self.d_inv) {
            for v in row.iter_mut() {
                *v *= di;
            }
        }
        for i in (0..self.n).rev() {
            let mut s = rows[i];
            for q in self.lp[i]..self.lp[i + 1] {
                let (l, row) = (self.lx[q], &rows[self.li[q]]);
                for c in 0..R {
                    s[c] -= l * row[c];
                }
            }
            rows[i] = s;
        }
    }

    /// Solve `A x = b` with iterative refinement; fails when the final
    /// relative residual exceeds [`SOLVE_TOLERANCE`].
    pub fn solve(&self, b: &[f64]) -> Result<Vec<f64>> {
        let mut x = vec![0.0; self.n];
        let mut ws = SolveWorkspace::default();
        self.solve_into(b, &mut x, &mut ws)?;
        Ok(x)
    }

    /// As [`solve`](Self::solve), returning the achieved relative residual.
    pub fn solve_into(&self, b: &[f64], x: &mut [f64], ws: &mut SolveWorkspace) -> Result<f64> {
        let mut rel = [0.0];
        self.solve_many_into(b, x, 1, &mut rel, ws)?;
        Ok(rel[0])
    }

    /// Interleaved multi right-hand side solve. Refinement decisions are
    /// taken per column, so each column is bitwise identical to a single
    /// solve of that column. `rel` receives the relative residuals.
    pub fn solve_many_into(
        &self,
        b: &[f64],
        x: &mut [f64],
        nrhs: usize,
        rel: &mut [f64],
        ws: &mut SolveWorkspace,
    ) -> Result<()> {
        let (n, r) = (self.n, nrhs);
        if b.len() != n * r || x.len() != n * r || rel.len() != r {
            return Err(Error::Dimension(format!(
                "rhs/solution length {}/{} for system of size {} with {} columns",
                b.len(),
                x.len(),
                n,
                r
            )));
        }
        let bnorm = column_norms(b, r);
        self.backsolve_many(b, x, r, &mut ws.permuted);
        ws.residual.resize(n * r, 0.0);
        ws.correction.resize(n * r, 0.0);
        let mut res = self.residual_many(b, x, r, &mut ws.residual);
        let mut active = vec![false; r];
        for c in 0..r {
            if bnorm[c] == 0.0 {
                (0..n).for_each(|i| x[i * r + c] = 0.0);
                rel[c] = 0.0;
            } else {
                rel[c] = res[c] / bnorm[c];
                active[c] = rel[c] > REFINE_TARGET;
            }
        }
        let mut iters = 0;
        while active.iter().any(|&a| a) && iters < MAX_REFINE {
            let mut corr = std::mem::take(&mut ws.correction);
            self.backsolve_many(&ws.residual, &mut corr, r, &mut ws.permuted);
            for (xr, cr) in x.chunks_exact_mut(r).zip(corr.chunks_exact(r)) {
                for c in 0..r {
                    if active[c] {
                        xr[c] += cr[c];
                    }
                }
            }
            ws.correction = corr;
            res = self.residual_many(b, x, r, &mut ws.residual);
            iters += 1;
            for c in 0..r {
                if active[c] {
                    let new_rel = res[c] / bnorm[c];
                    active[c] = new_rel < 0.5 * rel[c] && new_rel > REFINE_TARGET;
                    rel[c] = new_rel;
                }
            }
        }
        if let Some(&worst) = rel.iter().find(|v| !(**v <= SOLVE_TOLERANCE)) {
            return Err(Error::Residual {
                residual: worst,
                tolerance: SOLVE_TOLERANCE,
            });
        }
        Ok(())
    }

    fn residual_many(&self, b: &[f64], x: &[f64], r: usize, res: &mut [f64]) -> Vec<f64> {
        self.matrix.matvec_many_into(x, res, r);
        for (ri, bi) in res.iter_mut().zip(b) {
            *ri = bi - *ri;
        }
        column_norms(res, r)
    }
}

/// Euclidean norm of every column of an interleaved block.
pub(crate) fn column_norms(a: &[f64], r: usize) -> Vec<f64> {
    let mut s = vec![0.0; r];
    for row in a.chunks_exact(r) {
        for (si, v) in s.iter_mut().zip(row) {
            *si += v * v;
        }
    }
    s.into_iter().map(f64::sqrt).collect()
}
