//! Distances between spectral reference fields and finite element fields,
//! measured with the degree-6 quadrature of the finite element mesh.

use std::f64::consts::PI;

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::fem::{load_scalar, Space, TaylorHood};
use crate::spectral::SpectralField;

/// Quadrature pairings of a fixed set of Fourier modes with the P2 or P1
/// basis. For a spectral field supported on those modes,
///
/// ```text
/// ‖u_ref - u_h‖² = Σ û(a) conj(û(b)) G(a, b) - 2 Re Σ û(a) (b_a · u_h) + u_hᵀ M u_h
/// ```
///
/// with `b_a[i] = Q(e^{iκ_a·x} φ_i)` and `G(a, b) = Q(e^{i(κ_a - κ_b)·x})`,
/// `Q` the mesh quadrature. This equals evaluating both fields at the
/// quadrature nodes, at the cost of a few dot products per call.
#[derive(Clone, Debug)]
pub struct ModalPairing {
    space: Space,
    modes: Vec<[i64; 2]>,
    /// `(re, im)` of `b_a`, one pair per mode
    pairs: Vec<(Vec<f64>, Vec<f64>)>,
    gram: Vec<Complex64>,
}

impl ModalPairing {
    /// `space` selects the scalar basis: `P2Scalar` for velocity
    /// components, `P1` for pressures.
    pub fn new(th: &TaylorHood, space: Space, modes: &[[i64; 2]]) -> Result<Self> {
        if space == Space::P2Vector {
            return Err(Error::Dimension("pairings are built per scalar component".into()));
        }
        let l = th.mesh().side_length();
        let w = 2.0 * PI / l;
        let phase = move |m: [i64; 2], x: [f64; 2]| w * (m[0] as f64 * x[0] + m[1] as f64 * x[1]);
        let pairs = modes
            .iter()
            .map(|&m| {
                let re = load_scalar(th.mesh(), space, &|x| phase(m, x).cos());
                let im = load_scalar(th.mesh(), space, &|x| phase(m, x).sin());
                (re, im)
            })
            .collect();
        let quad = th.quadrature();
        let s = modes.len();
        let mut gram = vec![Complex64::new(0.0, 0.0); s * s];
        for a in 0..s {
            for b in 0..s {
                let d = [modes[a][0] - modes[b][0], modes[a][1] - modes[b][1]];
                gram[a * s + b] = quad
                    .points
                    .iter()
                    .zip(&quad.weights)
                    .map(|(x, wq)| Complex64::from_polar(*wq, phase(d, *x)))
                    .sum();
            }
        }
        Ok(Self {
            space,
            modes: modes.to_vec(),
            pairs,
            gram,
        })
    }

    pub fn modes(&self) -> &[[i64; 2]] {
        &self.modes
    }

    pub fn space(&self) -> Space {
        self.space
    }

    fn coefficients(&self, field: &SpectralField, c: usize) -> Result<Vec<Complex64>> {
        let total: f64 = (0..field.modes_per_side() * field.modes_per_side())
            .map(|i| field.get(c, field.mode_of(i)).norm_sqr())
            .sum();
        let coeffs: Vec<Complex64> = self.modes.iter().map(|&m| field.get(c, m)).collect();
        let kept: f64 = coeffs.iter().map(|z| z.norm_sqr()).sum();
        if total - kept > 1e-24 * total.max(1e-300) {
            return Err(Error::Dimension("spectral field has modes outside the pairing".into()));
        }
        Ok(coeffs)
    }

    /// Squared distance between component `c` of `field` and the scalar
    /// finite element function `coeffs`, given `coeffs_mass = coeffsᵀ M coeffs`.
    pub fn component_distance_sq(
        &self,
        field: &SpectralField,
        c: usize,
        coeffs: &[f64],
        coeffs_mass: f64,
    ) -> Result<f64> {
        let z = self.coefficients(field, c)?;
        let s = self.modes.len();
        let mut ref_sq = Complex64::new(0.0, 0.0);
        for a in 0..s {
            for b in 0..s {
                ref_sq += z[a] * z[b].conj() * self.gram[a * s + b];
            }
        }
        let mut cross = 0.0;
        for (za, (re, im)) in z.iter().zip(&self.pairs) {
            let pr: f64 = re.iter().zip(coeffs).map(|(b, u)| b * u).sum();
            let pi: f64 = im.iter().zip(coeffs).map(|(b, u)| b * u).sum();
            cross += za.re * pr - za.im * pi;
        }
        Ok(ref_sq.re - 2.0 * cross + coeffs_mass)
    }

    /// `‖u_ref - u_h‖_{L²}` for a velocity pair, given `u_hᵀ M u_h`.
    pub fn velocity_distance(&self, field: &SpectralField, u: &[f64], u_mass: f64) -> Result<f64> {
        if self.space != Space::P2Scalar || field.components() != 2 || u.len() % 2 != 0 {
            return Err(Error::Dimension("velocity distance needs P2 pairings and 2 components".into()));
        }
        let n2 = u.len() / 2;
        let zero_mass = 0.0;
        let dx = self.component_distance_sq(field, 0, &u[..n2], zero_mass)?;
        let dy = self.component_distance_sq(field, 1, &u[n2..], zero_mass)?;
        Ok((dx + dy + u_mass).max(0.0).sqrt())
    }
}

/// `‖v_ref - v_h‖_{L²}` for velocities by direct quadrature.
pub fn velocity_l2_distance(th: &TaylorHood, field: &SpectralField, u: &[f64]) -> f64 {
    let r = field.eval_points(&th.quadrature().points);
    let h = th.eval_velocity(u);
    let diff: Vec<[f64; 2]> = r.iter().zip(&h).map(|(a, b)| [a[0] - b[0], a[1] - b[1]]).collect();
    th.quadrature_norm(&diff)
}

/// `‖∇(v_ref - v_h)‖_{L²}` by direct quadrature.
pub fn velocity_h1_distance(th: &TaylorHood, field: &SpectralField, u: &[f64]) -> f64 {
    let r = field.gradient().eval_points(&th.quadrature().points);
    let h = th.eval_velocity_gradient(u);
    let diff: Vec<[f64; 4]> = r
        .iter()
        .zip(&h)
        .map(|(a, b)| [a[0] - b[0], a[1] - b[1], a[2] - b[2], a[3] - b[3]])
        .collect();
    th.quadrature_norm(&diff)
}

/// `‖q_ref - q_h‖_{L²}` for a scalar spectral field and a P1 function.
pub fn p1_l2_distance(th: &TaylorHood, field: &SpectralField, p: &[f64]) -> f64 {
    let r = field.eval_points(&th.quadrature().points);
    let h = th.eval_p1(p);
    let diff: Vec<[f64; 1]> = r.iter().zip(&h).map(|(a, b)| [a[0] - b]).collect();
    th.quadrature_norm(&diff)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mesh::TorusMesh;
    use crate::model::{Forcing, InitialData, Model, SchemeKind};
    use crate::noise::{NoiseFamily, NoiseModel};
    use crate::scheme::FemScheme;
    use crate::spectral::SpectralData;

    fn setup() -> (TaylorHood, Model) {
        let th = TaylorHood::new(TorusMesh::new(1.0, 6).unwrap()).unwrap();
        let model = Model {
            nu: 1.0,
            t: 0.1,
            l: 1.0,
            u0: InitialData::Shear { amplitude: 1.0 },
            forcing: Forcing::zero(),
            noise: NoiseModel {
                family: NoiseFamily::GradientAugmented,
                sigma0: 0.5,
                sigma1: 0.5,
                c: 1.0,
            },
        };
        (th, model)
    }

    #[test]
    fn pairing_matches_direct_quadrature() {
        let (th, model) = setup();
        let data = SpectralData::new(&model, 8).unwrap();
        let pairing = ModalPairing::new(&th, Space::P2Scalar, &data.support()).unwrap();
        let reference = crate::spectral::leray_project(&data.noise_offset);
        let scheme = FemScheme::new(&th, &model, SchemeKind::Modified, 2).unwrap();
        let tr = scheme.run(&[0.2, -0.1], &[], &mut |_| Ok(())).unwrap();
        let u = &tr.state.u;
        let fast = pairing
            .velocity_distance(&reference, u, th.mass_velocity().bilinear(u, u))
            .unwrap();
        let direct = velocity_l2_distance(&th, &reference, u);
        assert!(fast > 0.1);
        assert!((fast - direct).abs() <= 1e-12 * direct.max(1.0));
    }

    #[test]
    fn pairing_of_a_field_with_itself_is_the_interpolation_error() {
        // the L² projection of a resolved mode differs from it by O(h³)
        let (th, model) = setup();
        let data = SpectralData::new(&model, 8).unwrap();
        let pairing = ModalPairing::new(&th, Space::P2Scalar, &data.support()).unwrap();
        let proj = th
            .l2_project_vector(&|x| InitialData::Shear { amplitude: 1.0 }.eval(x, 1.0))
            .unwrap();
        let d = pairing
            .velocity_distance(&data.u0, &proj, th.mass_velocity().bilinear(&proj, &proj))
            .unwrap();
        assert!(d < 5e-3, "{d}");
        assert!((d - velocity_l2_distance(&th, &data.u0, &proj)).abs() < 1e-10);
    }

    #[test]
    fn fields_outside_the_pairing_are_rejected() {
        let (th, _) = setup();
        let pairing = ModalPairing::new(&th, Space::P2Scalar, &[[0, 1], [0, -1]]).unwrap();
        let f = SpectralField::from_fn_vector(8, 1.0, &|x| [(2.0 * PI * x[0]).sin(), 0.0]).unwrap();
        let u = vec![0.0; th.velocity_dim()];
        assert!(pairing.velocity_distance(&f, &u, 0.0).is_err());
    }

    #[test]
    fn h1_distance_of_a_shear_mode() {
        // ‖∇(sin 2πy, 0)‖ = 2π/√2 against the zero function
        let (th, model) = setup();
        let data = SpectralData::new(&model, 8).unwrap();
        let u = vec![0.0; th.velocity_dim()];
        let d = velocity_h1_distance(&th, &data.u0, &u);
        assert!((d - 2.0 * PI / 2f64.sqrt()).abs() < 1e-6 * d);
    }

    #[test]
    fn direct_distances_vanish_for_zero_fields() {
        let (th, _) = setup();
        let zero = SpectralField::zeros(8, 1.0, 2).unwrap();
        let u = vec![0.0; th.velocity_dim()];
        assert_eq!(velocity_l2_distance(&th, &zero, &u), 0.0);
        assert_eq!(velocity_h1_distance(&th, &zero, &u), 0.0);
        let p = vec![0.0; th.pressure_dim()];
        assert_eq!(p1_l2_distance(&th, &SpectralField::zeros(8, 1.0, 1).unwrap(), &p), 0.0);
    }
}
