//! Brownian driving paths and the multiplicative noise operator `B`.

use std::f64::consts::PI;

use rand_chacha::ChaCha8Rng;
use rand_core::{RngCore, SeedableRng};
use serde::{Deserialize, Serialize};
use statrs::distribution::{ContinuousCDF, Normal};

use crate::error::{Error, Result};
use crate::fem::space::TaylorHood;
use crate::sparse::norm_inf;

/// Refinement-consistent increments of a scalar Wiener process on `[0,T]`.
///
/// Fine increment `j` is a deterministic function of `(seed, stream, j)`, so
/// paths do not depend on how samples are scheduled. Coarser levels are
/// built by summing neighbouring pairs, level by level.
#[derive(Clone, Debug)]
pub struct BrownianDriver {
    seed: u64,
    stream: u64,
    t: f64,
    /// `levels[ℓ]` holds `M_fine / 2^ℓ` increments.
    levels: Vec<Vec<f64>>,
}

impl BrownianDriver {
    pub fn new(seed: u64, t: f64, m_fine: usize) -> Result<Self> {
        Self::with_stream(seed, 0, t, m_fine)
    }

    /// Driver for Monte Carlo sample `stream` of an experiment seeded with
    /// `seed`.
    pub fn with_stream(seed: u64, stream: u64, t: f64, m_fine: usize) -> Result<Self> {
        if !(t.is_finite() && t > 0.0) {
            return Err(Error::InvalidDriver(format!("final time must be positive, got {t}")));
        }
        if m_fine == 0 || !m_fine.is_power_of_two() {
            return Err(Error::InvalidDriver(format!(
                "fine step count must be a power of two, got {m_fine}"
            )));
        }
        let mut rng = rng_for(seed, stream);
        let scale = (t / m_fine as f64).sqrt();
        let fine: Vec<f64> = (0..m_fine).map(|_| scale * standard_normal(&mut rng)).collect();
        let mut levels = vec![fine];
        while levels.last().unwrap().len() > 1 {
            let prev = levels.last().unwrap();
            let next = prev.chunks(2).map(|p| p[0] + p[1]).collect();
            levels.push(next);
        }
        Ok(Self {
            seed,
            stream,
            t,
            levels,
        })
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn stream(&self) -> u64 {
        self.stream
    }

    pub fn final_time(&self) -> f64 {
        self.t
    }

    pub fn fine_steps(&self) -> usize {
        self.levels[0].len()
    }

    pub fn fine_increments(&self) -> &[f64] {
        &self.levels[0]
    }

    /// Increments for `m` uniform steps; `m` must be `M_fine / 2^ℓ`.
    pub fn increments(&self, m: usize) -> Result<&[f64]> {
        self.levels
            .iter()
            .find(|l| l.len() == m)
            .map(|l| l.as_slice())
            .ok_or_else(|| {
                Error::InvalidDriver(format!(
                    "{m} steps is not a power-of-two coarsening of {}",
                    self.fine_steps()
                ))
            })
    }

    pub fn increments_at_level(&self, level: usize) -> Result<&[f64]> {
        self.levels
            .get(level)
            .map(|l| l.as_slice())
            .ok_or_else(|| Error::InvalidDriver(format!("no level {level}")))
    }

    /// FNV-1a hash of the fine increments' bit patterns.
    pub fn checksum(&self) -> u64 {
        let mut h: u64 = 0xcbf2_9ce4_8422_2325;
        for x in &self.levels[0] {
            for b in x.to_bits().to_le_bytes() {
                h ^= b as u64;
                h = h.wrapping_mul(0x0100_0000_01b3);
            }
        }
        h
    }
}

fn rng_for(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

/// Fine increment `j` computed directly from its counter position.
pub fn fine_increment(seed: u64, stream: u64, t: f64, m_fine: usize, j: usize) -> f64 {
    let mut rng = rng_for(seed, stream);
    rng.set_word_pos(2 * j as u128);
    (t / m_fine as f64).sqrt() * standard_normal(&mut rng)
}

fn standard_normal(rng: &mut ChaCha8Rng) -> f64 {
    // midpoint of a 2^-53 bin, so never exactly 0 or 1
    let u = ((rng.next_u64() >> 11) as f64 + 0.5) * (1.0 / (1u64 << 53) as f64);
    Normal::standard().inverse_cdf(u)
}

/// Sum of a power-of-two-length slice by adjacent pairs, bottom up. Totals
/// of every aggregation level of a driver agree bitwise under this order.
pub fn pairwise_sum(xs: &[f64]) -> f64 {
    assert!(xs.len().is_power_of_two(), "pairwise_sum needs a power-of-two length");
    let mut buf = xs.to_vec();
    while buf.len() > 1 {
        buf = buf.chunks(2).map(|p| p[0] + p[1]).collect();
    }
    buf[0]
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum NoiseFamily {
    Affine,
    LerayProjected,
    GradientAugmented,
}

impl NoiseFamily {
    pub fn name(self) -> &'static str {
        match self {
            NoiseFamily::Affine => "affine",
            NoiseFamily::LerayProjected => "leray-projected",
            NoiseFamily::GradientAugmented => "gradient-augmented",
        }
    }
}

/// `B(u) = σ₀ g + σ₁ u`, optionally Leray-projected or augmented by `c ∇ζ`,
/// with `g = (sin 2πy/L, sin 2πx/L)` and `ζ = cos(2πx/L) cos(2πy/L) / (2π)`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct NoiseModel {
    pub family: NoiseFamily,
    pub sigma0: f64,
    pub sigma1: f64,
    pub c: f64,
}

impl NoiseModel {
    pub fn zero() -> Self {
        Self {
            family: NoiseFamily::Affine,
            sigma0: 0.0,
            sigma1: 0.0,
            c: 0.0,
        }
    }

    pub fn is_zero(&self) -> bool {
        self.sigma0 == 0.0 && self.sigma1 == 0.0 && (self.c == 0.0 || self.family != NoiseFamily::GradientAugmented)
    }

    /// Gradient amplitude actually applied (zero outside the
    /// gradient-augmented family).
    pub fn gradient_amplitude(&self) -> f64 {
        if self.family == NoiseFamily::GradientAugmented {
            self.c
        } else {
            0.0
        }
    }

    pub fn profile(x: [f64; 2], l: f64) -> [f64; 2] {
        let w = 2.0 * PI / l;
        [(w * x[1]).sin(), (w * x[0]).sin()]
    }

    pub fn potential(x: [f64; 2], l: f64) -> f64 {
        let w = 2.0 * PI / l;
        (w * x[0]).cos() * (w * x[1]).cos() / (2.0 * PI)
    }

    pub fn potential_gradient(x: [f64; 2], l: f64) -> [f64; 2] {
        let w = 2.0 * PI / l;
        [
            -(w * x[0]).sin() * (w * x[1]).cos() / l,
            -(w * x[0]).cos() * (w * x[1]).sin() / l,
        ]
    }

    /// Linear growth constant `max(σ₁, σ₀‖g‖ + c‖∇ζ‖)` on a box of side `l`.
    pub fn growth_constant(&self, l: f64) -> f64 {
        // ‖g‖² = L², ‖∇ζ‖² = 1/2
        let g_norm = l;
        let grad_norm = 0.5f64.sqrt();
        self.sigma1
            .abs()
            .max(self.sigma0.abs() * g_norm + self.gradient_amplitude().abs() * grad_norm)
    }
}

/// `B` evaluated on a Taylor-Hood velocity space, with the fixed profiles
/// projected once.
#[derive(Clone, Debug)]
pub struct FemNoise {
    model: NoiseModel,
    /// velocity-space coefficients of the constant part of `B`
    offset: Vec<f64>,
}

impl FemNoise {
    pub fn new(th: &TaylorHood, model: NoiseModel) -> Result<Self> {
        let l = th.mesh().side_length();
        let nv = th.velocity_dim();
        let mut offset = vec![0.0; nv];
        if model.sigma0 != 0.0 {
            let g = th.l2_project_vector(&|x| NoiseModel::profile(x, l))?;
            offset.iter_mut().zip(&g).for_each(|(o, gi)| *o += model.sigma0 * gi);
        }
        let c = model.gradient_amplitude();
        if c != 0.0 {
            let dz = th.l2_project_vector(&|x| NoiseModel::potential_gradient(x, l))?;
            offset.iter_mut().zip(&dz).for_each(|(o, d)| *o += c * d);
        }
        if model.family == NoiseFamily::LerayProjected {
            offset = th.project_divfree_coeffs(&offset)?.velocity;
        }
        Ok(Self { model, offset })
    }

    pub fn model(&self) -> &NoiseModel {
        &self.model
    }

    /// Velocity-space coefficients of `B(u)`.
    pub fn eval(&self, th: &TaylorHood, u: &[f64]) -> Result<Vec<f64>> {
        let mut out = self.offset.clone();
        if self.model.sigma1 != 0.0 {
            let su: Vec<f64> = u.iter().map(|v| self.model.sigma1 * v).collect();
            let su = if self.model.family == NoiseFamily::LerayProjected {
                th.project_divfree_coeffs(&su)?.velocity
            } else {
                su
            };
            out.iter_mut().zip(&su).for_each(|(o, s)| *o += s);
        }
        Ok(out)
    }
}

/// Discrete Helmholtz split `field = η + ∇ξ` with `(η, ∇ψ) = 0` for every
/// P1 test function.
#[derive(Clone, Debug)]
pub struct HelmholtzSplit {
    pub xi: Vec<f64>,
    /// `field - Π∇ξ` in the velocity space.
    pub eta: Vec<f64>,
}

/// `(field, ∇ψ_q)` for every P1 basis function; equals `-(D field)_q`.
pub fn gradient_pairing(th: &TaylorHood, field: &[f64]) -> Vec<f64> {
    th.divergence().matvec(field).into_iter().map(|v| -v).collect()
}

pub fn helmholtz_split_fem(th: &TaylorHood, field: &[f64]) -> Result<HelmholtzSplit> {
    let xi = helmholtz_potential(th, field)?;
    let grad = th.gradient_to_velocity(&xi)?;
    let eta = field.iter().zip(&grad).map(|(f, g)| f - g).collect();
    Ok(HelmholtzSplit { xi, eta })
}

/// Only the potential `ξ` of the split.
pub fn helmholtz_potential(th: &TaylorHood, field: &[f64]) -> Result<Vec<f64>> {
    let rhs = gradient_pairing(th, field);
    if norm_inf(&rhs) == 0.0 {
        return Ok(vec![0.0; th.pressure_dim()]);
    }
    th.solve_poisson(&rhs)
}

/// `max_q |(field - ∇ξ, ∇ψ_q)|`, the weak orthogonality defect of a split.
pub fn orthogonality_residual(th: &TaylorHood, field: &[f64], xi: &[f64]) -> f64 {
    let mut r = gradient_pairing(th, field);
    th.stiffness_p1().matvec_add(-1.0, xi, &mut r);
    norm_inf(&r)
}
