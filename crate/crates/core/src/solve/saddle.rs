//! Augmented saddle point systems with a pressure mean constraint.
//!
//! ```text
//! [ K   D^T  0 ] [u]   [f]
//! [ D   0    m ] [λ] = [g]
//! [ 0   m^T  0 ] [μ]   [0]
//! ```
//!
//! `K` is the SPD velocity block, `D` the divergence operator and `m` the
//! vector of pressure basis integrals, so `m^T λ = 0` fixes the discrete
//! mean. The multiplier `μ` vanishes for compatible data.

use crate::error::{Error, Result};
use crate::solve::ldlt::{factorize_with_blocks, FactorKind, Factorization, SolveWorkspace};
use crate::sparse::SparseOperator;

/// Tolerance on `max_q |(D u)_q|` relative to `max(1, |u|_inf)`.
pub const DIVERGENCE_TOLERANCE: f64 = 1e-10;

#[derive(Clone, Debug)]
pub struct SaddleSolver {
    nv: usize,
    np: usize,
    divergence: SparseOperator,
    mean_weights: Vec<f64>,
    factor: Factorization,
}

#[derive(Clone, Debug)]
pub struct SaddleSolution {
    pub velocity: Vec<f64>,
    /// Multiplier of the divergence constraint.
    pub multiplier: Vec<f64>,
    /// Relative residual of the augmented system.
    pub residual: f64,
    /// `max |D u|`.
    pub divergence_residual: f64,
}

/// Per-thread scratch for repeated solves.
#[derive(Clone, Debug, Default)]
pub struct SaddleWorkspace {
    rhs: Vec<f64>,
    sol: Vec<f64>,
    div: Vec<f64>,
    rel: Vec<f64>,
    inner: SolveWorkspace,
}

impl SaddleSolver {
    /// Assemble and factorize. `blocks` groups unknowns of the augmented
    /// system (velocity indices, then `nv + q` for pressures) for the
    /// elimination ordering; pass `None` for a scalar ordering.
    pub fn new(
        velocity_block: &SparseOperator,
        divergence: &SparseOperator,
        mean_weights: &[f64],
        blocks: Option<&[Vec<usize>]>,
    ) -> Result<Self> {
        let nv = velocity_block.nrows();
        let np = divergence.nrows();
        if velocity_block.ncols() != nv || divergence.ncols() != nv || mean_weights.len() != np {
            return Err(Error::Dimension(format!(
                "saddle blocks K {}x{}, D {}x{}, m {}",
                nv,
                velocity_block.ncols(),
                np,
                divergence.ncols(),
                mean_weights.len()
            )));
        }
        let n = nv + np + 1;
        let mut t = velocity_block.triplets();
        for (q, v, val) in divergence.triplets() {
            t.push((nv + q, v, val));
            t.push((v, nv + q, val));
        }
        for (q, &w) in mean_weights.iter().enumerate() {
            t.push((nv + q, nv + np, w));
            t.push((nv + np, nv + q, w));
        }
        let augmented = SparseOperator::from_triplets(n, n, &t);

        let owned;
        let blocks = match blocks {
            Some(b) => {
                let mut b = b.to_vec();
                b.push(vec![nv + np]);
                owned = b;
                &owned[..]
            }
            None => {
                owned = (0..n).map(|i| vec![i]).collect();
                &owned[..]
            }
        };
        let factor = factorize_with_blocks(&augmented, FactorKind::SymmetricIndefinite, blocks)?;
        Ok(Self {
            nv,
            np,
            divergence: divergence.clone(),
            mean_weights: mean_weights.to_vec(),
            factor,
        })
    }

    pub fn velocity_dim(&self) -> usize {
        self.nv
    }

    pub fn pressure_dim(&self) -> usize {
        self.np
    }

    pub fn factorization(&self) -> &Factorization {
        &self.factor
    }

    pub fn mean_weights(&self) -> &[f64] {
        &self.mean_weights
    }

    /// Solve with velocity load `f` and divergence data `g` (zero when
    /// `None`). Fails if the augmented residual or, for `g = None`, the
    /// divergence residual exceeds tolerance.
    pub fn solve(&self, f: &[f64], g: Option<&[f64]>) -> Result<SaddleSolution> {
        let mut ws = SaddleWorkspace::default();
        let mut velocity = vec![0.0; self.nv];
        let mut multiplier = vec![0.0; self.np];
        let (residual, divergence_residual) =
            self.solve_into(f, g, &mut velocity, &mut multiplier, &mut ws)?;
        Ok(SaddleSolution {
            velocity,
            multiplier,
            residual,
            divergence_residual,
        })
    }

    pub fn solve_into(
        &self,
        f: &[f64],
        g: Option<&[f64]>,
        velocity: &mut [f64],
        multiplier: &mut [f64],
        ws: &mut SaddleWorkspace,
    ) -> Result<(f64, f64)> {
        let mut out = [(0.0, 0.0)];
        self.solve_many_into(f, g, velocity, multiplier, 1, &mut out, ws)?;
        Ok(out[0])
    }

    /// Solve for `nrhs` interleaved right-hand sides at once; column `c`
    /// of every block is bitwise identical to a single solve. `out`
    /// receives `(residual, divergence residual)` per column.
    #[allow(clippy::too_many_arguments)]
    pub fn solve_many_into(
        &self,
        f: &[f64],
        g: Option<&[f64]>,
        velocity: &mut [f64],
        multiplier: &mut [f64],
        nrhs: usize,
        out: &mut [(f64, f64)],
        ws: &mut SaddleWorkspace,
    ) -> Result<()> {
        let (nv, np, r) = (self.nv, self.np, nrhs);
        if f.len() != nv * r
            || velocity.len() != nv * r
            || multiplier.len() != np * r
            || out.len() != r
            || g.is_some_and(|g| g.len() != np * r)
        {
            return Err(Error::Dimension("saddle right-hand side or output length".into()));
        }
        ws.rhs.clear();
        ws.rhs.extend_from_slice(f);
        match g {
            Some(g) => ws.rhs.extend_from_slice(g),
            None => ws.rhs.extend(std::iter::repeat_n(0.0, np * r)),
        }
        ws.rhs.extend(std::iter::repeat_n(0.0, r));
        ws.sol.resize((nv + np + 1) * r, 0.0);
        ws.rel.resize(r, 0.0);
        self.factor
            .solve_many_into(&ws.rhs, &mut ws.sol, r, &mut ws.rel, &mut ws.inner)?;
        velocity.copy_from_slice(&ws.sol[..nv * r]);
        multiplier.copy_from_slice(&ws.sol[nv * r..(nv + np) * r]);

        ws.div.resize(np * r, 0.0);
        self.divergence.matvec_many_into(velocity, &mut ws.div, r);
        if let Some(g) = g {
            for (d, gi) in ws.div.iter_mut().zip(g) {
                *d -= gi;
            }
        }
        let mut div_res = vec![0.0f64; r];
        let mut vmax = vec![0.0f64; r];
        for row in ws.div.chunks_exact(r) {
            for (m, v) in div_res.iter_mut().zip(row) {
                *m = m.max(v.abs());
            }
        }
        for row in velocity.chunks_exact(r) {
            for (m, v) in vmax.iter_mut().zip(row) {
                *m = m.max(v.abs());
            }
        }
        for c in 0..r {
            if div_res[c] > DIVERGENCE_TOLERANCE * vmax[c].max(1.0) {
                return Err(Error::Residual {
                    residual: div_res[c],
                    tolerance: DIVERGENCE_TOLERANCE,
                });
            }
            out[c] = (ws.rel[c], div_res[c]);
        }
        Ok(())
    }
}
