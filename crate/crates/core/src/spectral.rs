//! Truncated Fourier representation on the torus and the spectral
//! Euler-Maruyama integrator.
//!
//! A field is `u(x) = Σ_m û(m) e^{iκ_m·x}` with `κ_m = 2πm/L` and
//! `m ∈ {-N/2, ..., N/2-1}²`. The Stokes operator is diagonal, so the
//! implicit step is a per-mode division.

use std::f64::consts::PI;

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::model::{Model, SchemeKind};
use crate::noise::{NoiseFamily, NoiseModel};

/// Longitudinal parts below this multiple of machine epsilon (relative to
/// `|m| |û(m)|`) are treated as exactly zero, which makes the projector
/// idempotent bitwise.
const SNAP: f64 = 16.0 * f64::EPSILON;

#[derive(Clone, Debug, PartialEq)]
pub struct SpectralField {
    n: usize,
    l: f64,
    comps: usize,
    /// component-major, then `ix * N + iy` with `m = (ix - N/2, iy - N/2)`
    data: Vec<Complex64>,
}

impl SpectralField {
    pub fn zeros(n: usize, l: f64, comps: usize) -> Result<Self> {
        if n < 4 || n % 2 != 0 {
            return Err(Error::Dimension(format!(
                "spectral grid needs an even mode count >= 4, got {n}"
            )));
        }
        if !(l > 0.0) || !(comps == 1 || comps == 2) {
            return Err(Error::Dimension("bad box size or component count".into()));
        }
        Ok(Self {
            n,
            l,
            comps,
            data: vec![Complex64::new(0.0, 0.0); comps * n * n],
        })
    }

    pub fn zeros_like(&self, comps: usize) -> Self {
        Self {
            n: self.n,
            l: self.l,
            comps,
            data: vec![Complex64::new(0.0, 0.0); comps * self.n * self.n],
        }
    }

    /// Coefficients of a real vector field from its values on the `N x N`
    /// grid. Coefficients below `1e-14` of the largest are dropped so
    /// trigonometric polynomials come out with exact zeros elsewhere.
    pub fn from_fn_vector(n: usize, l: f64, f: &dyn Fn([f64; 2]) -> [f64; 2]) -> Result<Self> {
        let mut out = Self::zeros(n, l, 2)?;
        let samples: Vec<[f64; 2]> = (0..n * n)
            .map(|j| f([l * (j / n) as f64 / n as f64, l * (j % n) as f64 / n as f64]))
            .collect();
        for c in 0..2 {
            let vals: Vec<f64> = samples.iter().map(|v| v[c]).collect();
            out.fill_component(c, &vals);
        }
        out.clean();
        Ok(out)
    }

    pub fn from_fn_scalar(n: usize, l: f64, f: &dyn Fn([f64; 2]) -> f64) -> Result<Self> {
        let mut out = Self::zeros(n, l, 1)?;
        let vals: Vec<f64> = (0..n * n)
            .map(|j| f([l * (j / n) as f64 / n as f64, l * (j % n) as f64 / n as f64]))
            .collect();
        out.fill_component(0, &vals);
        out.clean();
        Ok(out)
    }

    /// Separable DFT of grid values `vals[jx * N + jy]`.
    fn fill_component(&mut self, c: usize, vals: &[f64]) {
        let n = self.n;
        let half = (n / 2) as i64;
        let tw = |m: i64, j: usize| {
            Complex64::from_polar(1.0, -2.0 * PI * (m * j as i64) as f64 / n as f64)
        };
        // transform along y for every x row
        let mut partial = vec![Complex64::new(0.0, 0.0); n * n];
        for jx in 0..n {
            for iy in 0..n {
                let my = iy as i64 - half;
                let mut s = Complex64::new(0.0, 0.0);
                for jy in 0..n {
                    s += vals[jx * n + jy] * tw(my, jy);
                }
                partial[jx * n + iy] = s;
            }
        }
        let scale = 1.0 / (n * n) as f64;
        for ix in 0..n {
            let mx = ix as i64 - half;
            for iy in 0..n {
                let mut s = Complex64::new(0.0, 0.0);
                for jx in 0..n {
                    s += partial[jx * n + iy] * tw(mx, jx);
                }
                self.data[c * n * n + ix * n + iy] = s * scale;
            }
        }
        // unpaired Nyquist modes and the mean are dropped
        for i in 0..n {
            self.data[c * n * n + i] = Complex64::new(0.0, 0.0);
            self.data[c * n * n + i * n] = Complex64::new(0.0, 0.0);
        }
        self.data[c * n * n + (n / 2) * n + n / 2] = Complex64::new(0.0, 0.0);
    }

    fn clean(&mut self) {
        let max = self.data.iter().fold(0.0f64, |m, z| m.max(z.norm()));
        let cut = 1e-14 * max;
        for z in &mut self.data {
            if z.norm() <= cut {
                *z = Complex64::new(0.0, 0.0);
            }
        }
    }

    pub fn modes_per_side(&self) -> usize {
        self.n
    }

    pub fn side_length(&self) -> f64 {
        self.l
    }

    pub fn components(&self) -> usize {
        self.comps
    }

    pub fn data(&self) -> &[Complex64] {
        &self.data
    }

    pub fn data_mut(&mut self) -> &mut [Complex64] {
        &mut self.data
    }

    /// Mode of storage slot `i` (within one component).
    pub fn mode_of(&self, i: usize) -> [i64; 2] {
        let half = (self.n / 2) as i64;
        [(i / self.n) as i64 - half, (i % self.n) as i64 - half]
    }

    fn slot(&self, m: [i64; 2]) -> Option<usize> {
        let half = (self.n / 2) as i64;
        let (ix, iy) = (m[0] + half, m[1] + half);
        if ix < 0 || iy < 0 || ix >= self.n as i64 || iy >= self.n as i64 {
            None
        } else {
            Some(ix as usize * self.n + iy as usize)
        }
    }

    pub fn get(&self, c: usize, m: [i64; 2]) -> Complex64 {
        match self.slot(m) {
            Some(i) => self.data[c * self.n * self.n + i],
            None => Complex64::new(0.0, 0.0),
        }
    }

    pub fn set(&mut self, c: usize, m: [i64; 2], v: Complex64) -> Result<()> {
        let i = self
            .slot(m)
            .ok_or_else(|| Error::Dimension(format!("mode {m:?} outside the grid")))?;
        let nn = self.n * self.n;
        self.data[c * nn + i] = v;
        Ok(())
    }

    /// Modes with a nonzero coefficient in some component.
    pub fn support(&self) -> Vec<[i64; 2]> {
        let nn = self.n * self.n;
        (0..nn)
            .filter(|&i| (0..self.comps).any(|c| self.data[c * nn + i] != Complex64::new(0.0, 0.0)))
            .map(|i| self.mode_of(i))
            .collect()
    }

    /// `‖u‖_{L²}` by Parseval.
    pub fn l2_norm(&self) -> f64 {
        self.l * self.data.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
    }

    /// `‖∇u‖_{L²}` by Parseval.
    pub fn h1_seminorm(&self) -> f64 {
        let nn = self.n * self.n;
        let w = 2.0 * PI / self.l;
        let mut s = 0.0;
        for c in 0..self.comps {
            for i in 0..nn {
                let m = self.mode_of(i);
                let k2 = w * w * (m[0] * m[0] + m[1] * m[1]) as f64;
                s += k2 * self.data[c * nn + i].norm_sqr();
            }
        }
        self.l * s.sqrt()
    }

    /// `self += a * other`
    pub fn axpy(&mut self, a: f64, other: &Self) {
        debug_assert_eq!(self.data.len(), other.data.len());
        for (x, y) in self.data.iter_mut().zip(&other.data) {
            *x += a * y;
        }
    }

    pub fn difference(&self, other: &Self) -> Self {
        let mut d = self.clone();
        d.axpy(-1.0, other);
        d
    }

    /// Largest `|û(-m) - conj û(m)|` over paired modes.
    pub fn conjugate_symmetry_defect(&self) -> f64 {
        let nn = self.n * self.n;
        let mut worst: f64 = 0.0;
        for c in 0..self.comps {
            for i in 0..nn {
                let m = self.mode_of(i);
                if let Some(j) = self.slot([-m[0], -m[1]]) {
                    let d = self.data[c * nn + j] - self.data[c * nn + i].conj();
                    worst = worst.max(d.norm());
                }
            }
        }
        worst
    }

    /// `max_m |m·û(m)| / (|m| ‖û‖_coef)`, zero for the zero field.
    pub fn divergence_defect(&self) -> f64 {
        assert_eq!(self.comps, 2);
        let nn = self.n * self.n;
        let total = self.data.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
        if total == 0.0 {
            return 0.0;
        }
        let mut worst: f64 = 0.0;
        for i in 0..nn {
            let m = self.mode_of(i);
            let mm = ((m[0] * m[0] + m[1] * m[1]) as f64).sqrt();
            if mm == 0.0 {
                continue;
            }
            let d = self.data[i] * m[0] as f64 + self.data[nn + i] * m[1] as f64;
            worst = worst.max(d.norm() / mm);
        }
        worst / total
    }

    /// Gradient, component-major: `[∂x f₀, ∂y f₀, ∂x f₁, ∂y f₁, ...]`.
    pub fn gradient(&self) -> Self {
        let nn = self.n * self.n;
        let w = 2.0 * PI / self.l;
        let mut g = self.zeros_like(2 * self.comps);
        for c in 0..self.comps {
            for i in 0..nn {
                let m = self.mode_of(i);
                let z = self.data[c * nn + i] * Complex64::new(0.0, w);
                g.data[2 * c * nn + i] = z * m[0] as f64;
                g.data[(2 * c + 1) * nn + i] = z * m[1] as f64;
            }
        }
        g
    }

    /// Point values at `points`, summing only the nonzero modes.
    pub fn eval_points(&self, points: &[[f64; 2]]) -> Vec<Vec<f64>> {
        let nn = self.n * self.n;
        let w = 2.0 * PI / self.l;
        let active: Vec<(usize, [i64; 2])> = (0..nn)
            .filter(|&i| (0..self.comps).any(|c| self.data[c * nn + i] != Complex64::new(0.0, 0.0)))
            .map(|i| (i, self.mode_of(i)))
            .collect();
        points
            .iter()
            .map(|x| {
                let mut v = vec![0.0; self.comps];
                for &(i, m) in &active {
                    let phase = Complex64::from_polar(1.0, w * (m[0] as f64 * x[0] + m[1] as f64 * x[1]));
                    for (c, vc) in v.iter_mut().enumerate() {
                        *vc += (self.data[c * nn + i] * phase).re;
                    }
                }
                v
            })
            .collect()
    }
}

/// Values of a spectral field at the points of a mesh quadrature table.
pub fn eval_on_mesh(field: &SpectralField, points: &[[f64; 2]]) -> Vec<Vec<f64>> {
    field.eval_points(points)
}

/// `(m·v)/|m|²` with rounding-level results snapped to zero.
fn longitudinal(m: [i64; 2], vx: Complex64, vy: Complex64) -> Complex64 {
    let m2 = (m[0] * m[0] + m[1] * m[1]) as f64;
    if m2 == 0.0 {
        return Complex64::new(0.0, 0.0);
    }
    let d = vx * m[0] as f64 + vy * m[1] as f64;
    let scale = m2.sqrt() * (vx.norm_sqr() + vy.norm_sqr()).sqrt();
    if d.norm() <= SNAP * scale {
        Complex64::new(0.0, 0.0)
    } else {
        d / m2
    }
}

/// Helmholtz (Leray) projection onto divergence-free fields.
pub fn leray_project(field: &SpectralField) -> SpectralField {
    assert_eq!(field.comps, 2);
    let mut out = field.clone();
    leray_in_place(&mut out);
    out
}

fn leray_in_place(f: &mut SpectralField) {
    let nn = f.n * f.n;
    for i in 0..nn {
        let m = f.mode_of(i);
        let s = longitudinal(m, f.data[i], f.data[nn + i]);
        if s != Complex64::new(0.0, 0.0) {
            f.data[i] -= s * m[0] as f64;
            f.data[nn + i] -= s * m[1] as f64;
        }
    }
}

/// Mean-zero potential `ξ` with `∇ξ = (I - P_H) v`.
pub fn helmholtz_potential(v: &SpectralField) -> SpectralField {
    let nn = v.n * v.n;
    let w = 2.0 * PI / v.l;
    let mut xi = v.zeros_like(1);
    for i in 0..nn {
        let m = v.mode_of(i);
        let s = longitudinal(m, v.data[i], v.data[nn + i]);
        // i κ ξ̂ = m s  =>  ξ̂ = s / (i w)
        xi.data[i] = s / Complex64::new(0.0, w);
    }
    xi
}

/// Spectral coefficients of the model's fixed fields on an `N`-mode grid.
#[derive(Clone, Debug)]
pub struct SpectralData {
    pub n: usize,
    pub l: f64,
    pub nu: f64,
    pub noise: NoiseModel,
    /// `σ₀ g + c ∇ζ`, Leray-projected for the projected family
    pub noise_offset: SpectralField,
    pub forcing_shape: SpectralField,
    pub forcing: crate::model::Forcing,
    pub u0: SpectralField,
}

impl SpectralData {
    pub fn new(model: &Model, n: usize) -> Result<Self> {
        model.validate()?;
        let l = model.l;
        let g = SpectralField::from_fn_vector(n, l, &|x| NoiseModel::profile(x, l))?;
        let dz = SpectralField::from_fn_vector(n, l, &|x| NoiseModel::potential_gradient(x, l))?;
        let mut offset = g.zeros_like(2);
        offset.axpy(model.noise.sigma0, &g);
        offset.axpy(model.noise.gradient_amplitude(), &dz);
        if model.noise.family == NoiseFamily::LerayProjected {
            leray_in_place(&mut offset);
        }
        let forcing = model.forcing;
        let forcing_shape = SpectralField::from_fn_vector(n, l, &|x| forcing.shape_at(x, l))?;
        let u0m = model.u0;
        let u0 = leray_project(&SpectralField::from_fn_vector(n, l, &|x| u0m.eval(x, l))?);
        Ok(Self {
            n,
            l,
            nu: model.nu,
            noise: model.noise,
            noise_offset: offset,
            forcing_shape,
            forcing,
            u0,
        })
    }

    /// `B̂(u)`.
    pub fn noise(&self, u: &SpectralField) -> SpectralField {
        let mut b = self.noise_offset.clone();
        if self.noise.sigma1 != 0.0 {
            if self.noise.family == NoiseFamily::LerayProjected {
                let mut su = u.clone();
                su.data.iter_mut().for_each(|z| *z *= self.noise.sigma1);
                leray_in_place(&mut su);
                b.axpy(1.0, &su);
            } else {
                b.axpy(self.noise.sigma1, u);
            }
        }
        b
    }

    /// Modes that any trajectory of this model can excite.
    pub fn support(&self) -> Vec<[i64; 2]> {
        let mut s: Vec<[i64; 2]> = self.noise_offset.support();
        s.extend(self.forcing_shape.support());
        s.extend(self.u0.support());
        s.sort();
        s.dedup();
        s
    }
}

/// Iterate of the spectral scheme plus the running functionals.
#[derive(Clone, Debug)]
pub struct SpectralState {
    pub u: SpectralField,
    /// `k Σ p̂^n`
    pub pressure_sum: SpectralField,
    /// `k Σ r̂^n`
    pub pseudo_pressure_sum: SpectralField,
    /// `Σ ξ̂^n ΔW_{n+1}`
    pub potential_noise_sum: SpectralField,
    /// `ν k Σ û^n`
    pub velocity_sum: SpectralField,
}

impl SpectralState {
    pub fn new(data: &SpectralData) -> Self {
        let scalar = data.u0.zeros_like(1);
        Self {
            u: data.u0.clone(),
            pressure_sum: scalar.clone(),
            pseudo_pressure_sum: scalar.clone(),
            potential_noise_sum: scalar,
            velocity_sum: data.u0.zeros_like(2),
        }
    }
}

/// Per-step by-products of [`em_step_spectral`].
#[derive(Clone, Debug)]
pub struct SpectralStep {
    pub pressure: SpectralField,
    pub pseudo_pressure: SpectralField,
    pub xi: SpectralField,
}

/// One Euler-Maruyama step from `t_n` to `t_{n+1} = t_n + k` with
/// increment `dw`. Both kinds advance the velocity with the Leray part of
/// `B̂(u^n) ΔW`; they differ in how the pressure is assembled.
pub fn em_step_spectral(
    data: &SpectralData,
    state: &mut SpectralState,
    t_next: f64,
    k: f64,
    dw: f64,
    kind: SchemeKind,
) -> SpectralStep {
    let n = data.n;
    let nn = n * n;
    let w = 2.0 * PI / data.l;
    let iw = Complex64::new(0.0, w);
    let fa = data.forcing.time_factor(t_next);
    let b = data.noise(&state.u);

    let mut pressure = state.u.zeros_like(1);
    let mut pseudo = state.u.zeros_like(1);
    let mut xi = state.u.zeros_like(1);
    let u = &mut state.u.data;
    for i in 0..nn {
        let m = data.u0.mode_of(i);
        let lambda = w * w * (m[0] * m[0] + m[1] * m[1]) as f64;
        let (bx, by) = (b.data[i], b.data[nn + i]);
        let (fx, fy) = (fa * data.forcing_shape.data[i], fa * data.forcing_shape.data[nn + i]);

        let sb = longitudinal(m, bx, by);
        let sf = longitudinal(m, fx, fy);
        let (ex, ey) = (bx - sb * m[0] as f64, by - sb * m[1] as f64);
        let (gx, gy) = (fx - sf * m[0] as f64, fy - sf * m[1] as f64);

        let denom = 1.0 + data.nu * k * lambda;
        u[i] = (u[i] + k * gx + dw * ex) / denom;
        u[nn + i] = (u[nn + i] + k * gy + dw * ey) / denom;

        xi.data[i] = sb / iw;
        pseudo.data[i] = sf / iw;
        pressure.data[i] = match kind {
            SchemeKind::Standard => longitudinal(m, fx + bx * (dw / k), fy + by * (dw / k)) / iw,
            SchemeKind::Modified => pseudo.data[i] + xi.data[i] * (dw / k),
        };
    }
    state.pressure_sum.axpy(k, &pressure);
    state.pseudo_pressure_sum.axpy(k, &pseudo);
    state.potential_noise_sum.axpy(dw, &xi);
    state.velocity_sum.axpy(data.nu * k, &state.u);
    SpectralStep {
        pressure,
        pseudo_pressure: pseudo,
        xi,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{Forcing, InitialData};
    use crate::noise::NoiseFamily;

    fn model(noise: NoiseModel, u0: InitialData) -> Model {
        Model {
            nu: 1.0,
            t: 0.1,
            l: 1.0,
            u0,
            forcing: Forcing::zero(),
            noise,
        }
    }

    fn noise(family: NoiseFamily, s0: f64, s1: f64, c: f64) -> NoiseModel {
        NoiseModel { family, sigma0: s0, sigma1: s1, c }
    }

    #[test]
    fn single_mode_round_trip() {
        let f = SpectralField::from_fn_vector(8, 2.0, &|x| [(PI * x[0]).sin(), 0.0]).unwrap();
        assert_eq!(f.support(), vec![[-1, 0], [1, 0]]);
        assert!((f.get(0, [1, 0]) - Complex64::new(0.0, -0.5)).norm() < 1e-15);
        let pts = [[0.3, 0.1], [1.7, 0.9], [0.0, 0.0]];
        for (x, v) in pts.iter().zip(f.eval_points(&pts)) {
            assert!((v[0] - (PI * x[0]).sin()).abs() < 1e-13);
            assert!(v[1].abs() < 1e-15);
        }
        let zero = f.zeros_like(2);
        assert!(zero.eval_points(&pts).iter().all(|v| v[0] == 0.0 && v[1] == 0.0));
    }

    #[test]
    fn leray_kills_gradients_and_is_idempotent() {
        let zeta = SpectralField::from_fn_scalar(16, 1.0, &|x| NoiseModel::potential(x, 1.0)).unwrap();
        let g = zeta.gradient();
        assert!(leray_project(&g).l2_norm() < 1e-15);

        let x = SpectralField::from_fn_vector(16, 1.0, &|x| {
            let (a, b) = (2.0 * PI * x[0], 2.0 * PI * x[1]);
            [a.sin() + (2.0 * b).cos() * a.cos(), (a + 2.0 * b).sin() - b.cos()]
        })
        .unwrap();
        let p = leray_project(&x);
        let pp = leray_project(&p);
        assert_eq!(p, pp);
        let q = x.difference(&p);
        let lhs = p.l2_norm().powi(2) + q.l2_norm().powi(2);
        assert!((lhs - x.l2_norm().powi(2)).abs() < 1e-12);
        assert!(p.divergence_defect() < 1e-12);
        assert!(p.conjugate_symmetry_defect() < 1e-15);
    }

    #[test]
    fn deterministic_decay_is_the_scalar_recursion() {
        let m = model(NoiseModel::zero(), InitialData::TaylorGreen { amplitude: 1.0 });
        let data = SpectralData::new(&m, 8).unwrap();
        let mut st = SpectralState::new(&data);
        let (k, steps) = (0.01, 10);
        for s in 0..steps {
            em_step_spectral(&data, &mut st, (s + 1) as f64 * k, k, 0.0, SchemeKind::Standard);
        }
        let lambda = 2.0 * (2.0 * PI).powi(2);
        let factor = (1.0 + k * lambda).powi(-(steps as i32));
        for c in 0..2 {
            for mode in data.u0.support() {
                let want = data.u0.get(c, mode) * factor;
                assert!((st.u.get(c, mode) - want).norm() <= 1e-15);
            }
        }
        assert_eq!(st.pressure_sum.l2_norm(), 0.0);
    }

    #[test]
    fn modified_and_standard_agree_for_divergence_free_noise() {
        let m = model(noise(NoiseFamily::LerayProjected, 0.5, 0.5, 0.0), InitialData::Shear { amplitude: 1.0 });
        let data = SpectralData::new(&m, 8).unwrap();
        let (mut a, mut b) = (SpectralState::new(&data), SpectralState::new(&data));
        for (s, dw) in [0.1, -0.05, 0.2, 0.03].iter().enumerate() {
            let t = (s + 1) as f64 * 0.01;
            let sa = em_step_spectral(&data, &mut a, t, 0.01, *dw, SchemeKind::Standard);
            let sb = em_step_spectral(&data, &mut b, t, 0.01, *dw, SchemeKind::Modified);
            assert_eq!(a.u, b.u);
            assert_eq!(sb.xi.l2_norm(), 0.0);
            assert_eq!(sa.pressure, sb.pressure);
        }
    }

    #[test]
    fn single_mode_noise_step_by_hand() {
        // u⁰ = 0, B ≡ σ₀ g with g = (sin 2πy, sin 2πx), one step
        let m = model(noise(NoiseFamily::Affine, 0.7, 0.0, 0.0), InitialData::Zero);
        let data = SpectralData::new(&m, 8).unwrap();
        let mut st = SpectralState::new(&data);
        let (k, dw) = (0.02, 0.3);
        em_step_spectral(&data, &mut st, k, k, dw, SchemeKind::Standard);
        let denom = 1.0 + k * 4.0 * PI * PI;
        // sin θ = (e^{iθ} - e^{-iθ}) / 2i
        let want = Complex64::new(0.0, -0.5) * (0.7 * dw / denom);
        assert!((st.u.get(0, [0, 1]) - want).norm() < 1e-14);
        assert!((st.u.get(1, [1, 0]) - want).norm() < 1e-14);
        assert!((st.u.get(1, [-1, 0]) - want.conj()).norm() < 1e-14);
        assert_eq!(st.u.get(0, [1, 0]), Complex64::new(0.0, 0.0));
    }

    #[test]
    fn gradient_noise_feeds_the_pressure_only() {
        let m = model(noise(NoiseFamily::GradientAugmented, 0.0, 0.0, 1.0), InitialData::Zero);
        let data = SpectralData::new(&m, 8).unwrap();
        let mut st = SpectralState::new(&data);
        let (k, dw) = (0.01, 0.2);
        let step = em_step_spectral(&data, &mut st, k, k, dw, SchemeKind::Modified);
        assert!(st.u.l2_norm() < 1e-15);
        // ξ = ζ exactly, p = ξ ΔW / k, r = 0
        let zeta = SpectralField::from_fn_scalar(8, 1.0, &|x| NoiseModel::potential(x, 1.0)).unwrap();
        assert!(step.xi.difference(&zeta).l2_norm() < 1e-15);
        assert_eq!(step.pseudo_pressure.l2_norm(), 0.0);
        let mut p = zeta.clone();
        p.data_mut().iter_mut().for_each(|z| *z *= dw / k);
        assert!(step.pressure.difference(&p).l2_norm() < 1e-13);
        // R = P - Σ ξ ΔW vanishes
        let mut r = st.pressure_sum.clone();
        r.axpy(-1.0, &st.potential_noise_sum);
        assert!(r.l2_norm() < 1e-15);
    }

    #[test]
    fn parseval_matches_point_quadrature() {
        let mesh = crate::mesh::TorusMesh::new(1.0, 16).unwrap();
        let th = crate::fem::TaylorHood::new(mesh).unwrap();
        let f = SpectralField::from_fn_vector(16, 1.0, &|x| {
            let (a, b) = (2.0 * PI * x[0], 2.0 * PI * x[1]);
            [a.sin() * b.cos(), (2.0 * a).cos() - 0.5 * b.sin()]
        })
        .unwrap();
        let q = th.quadrature();
        let vals = eval_on_mesh(&f, &q.points);
        let quad: f64 = vals
            .iter()
            .zip(&q.weights)
            .map(|(v, w)| w * (v[0] * v[0] + v[1] * v[1]))
            .sum::<f64>()
            .sqrt();
        assert!((quad - f.l2_norm()).abs() <= 1e-6, "{quad} {}", f.l2_norm());
    }
}
