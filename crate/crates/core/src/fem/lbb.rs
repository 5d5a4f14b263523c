//! Discrete inf-sup constant of the Taylor-Hood pair.
//!
//! `β₁(h)² ` is the smallest nonzero eigenvalue of `D A⁺ Dᵀ q = λ M_p q`
//! over mean-zero pressures. The Schur complement is formed densely from
//! mean-constrained P2 stiffness solves and the eigenvalue is found by
//! inverse iteration, with the constant mode shifted out of the way.

use nalgebra::{Cholesky, DMatrix, DVector};

use crate::error::{Error, Result};
use crate::fem::space::TaylorHood;
use crate::solve::ldlt::{factorize, FactorKind};
use crate::sparse::SparseOperator;

pub const MAX_ITERATIONS: usize = 5000;
const CONVERGENCE: f64 = 1e-12;

/// Dense pressure Schur complement `D A⁺ Dᵀ` and pressure mass matrix.
pub fn pressure_schur(th: &TaylorHood) -> Result<(DMatrix<f64>, DMatrix<f64>)> {
    let n2 = th.mass_p2().nrows();
    let np = th.pressure_dim();
    let stiff = crate::fem::assemble::assemble_stiffness(th.mesh(), crate::fem::Space::P2Scalar);
    let weights = th.mass_p2().matvec(&vec![1.0; n2]);
    let mut t = stiff.triplets();
    for (i, &w) in weights.iter().enumerate() {
        t.push((i, n2, w));
        t.push((n2, i, w));
    }
    let bordered = SparseOperator::from_triplets(n2 + 1, n2 + 1, &t);
    let factor = factorize(&bordered, FactorKind::SymmetricIndefinite)?;

    let dt = th.divergence().transpose();
    let mut s = DMatrix::zeros(np, np);
    let mut unit = vec![0.0; np];
    for q in 0..np {
        unit[q] = 1.0;
        let col = dt.matvec(&unit);
        unit[q] = 0.0;
        let mut y = vec![0.0; 2 * n2];
        for c in 0..2 {
            let mut b = col[c * n2..(c + 1) * n2].to_vec();
            b.push(0.0);
            let x = factor.solve(&b)?;
            y[c * n2..(c + 1) * n2].copy_from_slice(&x[..n2]);
        }
        let sy = th.divergence().matvec(&y);
        for (p, v) in sy.into_iter().enumerate() {
            s[(p, q)] = v;
        }
    }
    // symmetrize rounding
    let s = (&s + s.transpose()) * 0.5;
    let m = DMatrix::from_row_iterator(
        np,
        np,
        th.mass_p1().to_dense().into_iter().flatten(),
    );
    Ok((s, m))
}

/// `β₁(h)`, the square root of the smallest nonzero Schur eigenvalue.
pub fn discrete_lbb_constant(th: &TaylorHood) -> Result<f64> {
    let (s, m) = pressure_schur(th)?;
    let l = th.mesh().side_length();
    let w = DVector::from_column_slice(th.pressure_weights());
    let mu = 10.0 / (l * l);
    let shifted = &s + &w * w.transpose() * mu;
    let chol = Cholesky::new(shifted).ok_or_else(|| Error::Factorization {
        index: 0,
        reason: "shifted pressure Schur complement is not positive definite".into(),
    })?;

    let np = s.nrows();
    let area = l * l;
    let mut x = DVector::from_fn(np, |i, _| ((i * 7 + 3) % 11) as f64 - 5.0);
    let mut lambda = f64::INFINITY;
    for _ in 0..MAX_ITERATIONS {
        let mean = w.dot(&x) / area;
        x.add_scalar_mut(-mean);
        let y = chol.solve(&(&m * &x));
        let norm = y.dot(&(&m * &y)).sqrt();
        x = y / norm;
        let next = x.dot(&(&s * &x));
        if (next - lambda).abs() <= CONVERGENCE * next.abs() {
            return Ok(next.max(0.0).sqrt());
        }
        lambda = next;
    }
    Err(Error::EigenNotConverged(MAX_ITERATIONS))
}
