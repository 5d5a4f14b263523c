//! Assembly of Taylor-Hood operators on a [`TorusMesh`].

use crate::fem::element::{p1_values, p2_values, Element};
use crate::fem::quadrature::QuadratureRule;
use crate::mesh::TorusMesh;
use crate::sparse::SparseOperator;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Space {
    P1,
    P2Scalar,
    P2Vector,
}

impl Space {
    pub fn dim(self, mesh: &TorusMesh) -> usize {
        let c = mesh.dof_counts();
        match self {
            Space::P1 => c.p1,
            Space::P2Scalar => c.p2_scalar,
            Space::P2Vector => c.velocity,
        }
    }
}

pub fn element(mesh: &TorusMesh, t: usize) -> Element {
    Element::new(*mesh.corners(t))
}

fn scalar_dofs(mesh: &TorusMesh, t: usize, space: Space) -> Vec<usize> {
    match space {
        Space::P1 => mesh.p1_dofs(t).to_vec(),
        _ => mesh.p2_dofs(t).to_vec(),
    }
}

fn scalar_values(space: Space, l: &[f64; 3]) -> Vec<f64> {
    match space {
        Space::P1 => p1_values(l).to_vec(),
        _ => p2_values(l).to_vec(),
    }
}

fn scalar_grads(space: Space, e: &Element, l: &[f64; 3]) -> Vec<[f64; 2]> {
    match space {
        Space::P1 => e.p1_grads().to_vec(),
        _ => e.p2_grads(l).to_vec(),
    }
}

/// Mass matrix with a given rule (exposed so tests can compare rules).
pub fn assemble_mass_with(mesh: &TorusMesh, space: Space, rule: &QuadratureRule) -> SparseOperator {
    let scalar = if space == Space::P1 { Space::P1 } else { Space::P2Scalar };
    let n = scalar.dim(mesh);
    let mut trip = Vec::new();
    for t in 0..mesh.num_triangles() {
        let e = element(mesh, t);
        let dofs = scalar_dofs(mesh, t, scalar);
        let k = dofs.len();
        let mut local = vec![0.0; k * k];
        for (l, w) in rule.points.iter().zip(&rule.weights) {
            let phi = scalar_values(scalar, l);
            for a in 0..k {
                for b in 0..k {
                    local[a * k + b] += w * e.area * phi[a] * phi[b];
                }
            }
        }
        for a in 0..k {
            for b in 0..k {
                trip.push((dofs[a], dofs[b], local[a * k + b]));
            }
        }
    }
    let m = SparseOperator::from_triplets(n, n, &trip);
    if space == Space::P2Vector {
        m.block_diagonal(2)
    } else {
        m
    }
}

pub fn assemble_mass(mesh: &TorusMesh, space: Space) -> SparseOperator {
    assemble_mass_with(mesh, space, &QuadratureRule::degree4())
}

pub fn assemble_stiffness_with(
    mesh: &TorusMesh,
    space: Space,
    rule: &QuadratureRule,
) -> SparseOperator {
    let scalar = if space == Space::P1 { Space::P1 } else { Space::P2Scalar };
    let n = scalar.dim(mesh);
    let mut trip = Vec::new();
    for t in 0..mesh.num_triangles() {
        let e = element(mesh, t);
        let dofs = scalar_dofs(mesh, t, scalar);
        let k = dofs.len();
        let mut local = vec![0.0; k * k];
        for (l, w) in rule.points.iter().zip(&rule.weights) {
            let g = scalar_grads(scalar, &e, l);
            for a in 0..k {
                for b in 0..k {
                    local[a * k + b] += w * e.area * (g[a][0] * g[b][0] + g[a][1] * g[b][1]);
                }
            }
        }
        for a in 0..k {
            for b in 0..k {
                trip.push((dofs[a], dofs[b], local[a * k + b]));
            }
        }
    }
    let a = SparseOperator::from_triplets(n, n, &trip);
    if space == Space::P2Vector {
        a.block_diagonal(2)
    } else {
        a
    }
}

pub fn assemble_stiffness(mesh: &TorusMesh, space: Space) -> SparseOperator {
    assemble_stiffness_with(mesh, space, &QuadratureRule::degree4())
}

/// `D[q, v] = ∫ ψ_q div φ_v`, pressures (P1) by velocities (P2 vector).
pub fn assemble_divergence_with(mesh: &TorusMesh, rule: &QuadratureRule) -> SparseOperator {
    let c = mesh.dof_counts();
    let mut trip = Vec::new();
    for t in 0..mesh.num_triangles() {
        let e = element(mesh, t);
        let pd = mesh.p1_dofs(t);
        let vd = mesh.p2_dofs(t);
        let mut local = [[[0.0; 6]; 2]; 3];
        for (l, w) in rule.points.iter().zip(&rule.weights) {
            let psi = p1_values(l);
            let g = e.p2_grads(l);
            for q in 0..3 {
                for i in 0..6 {
                    for comp in 0..2 {
                        local[q][comp][i] += w * e.area * psi[q] * g[i][comp];
                    }
                }
            }
        }
        for q in 0..3 {
            for comp in 0..2 {
                for i in 0..6 {
                    trip.push((pd[q], comp * c.p2_scalar + vd[i], local[q][comp][i]));
                }
            }
        }
    }
    SparseOperator::from_triplets(c.p1, c.velocity, &trip)
}

pub fn assemble_divergence(mesh: &TorusMesh) -> SparseOperator {
    assemble_divergence_with(mesh, &QuadratureRule::degree4())
}

/// `b_i = ∫ f φ_i` for a scalar function, degree-6 rule.
pub fn load_scalar(mesh: &TorusMesh, space: Space, f: &dyn Fn([f64; 2]) -> f64) -> Vec<f64> {
    let scalar = if space == Space::P1 { Space::P1 } else { Space::P2Scalar };
    let rule = QuadratureRule::degree6();
    let mut b = vec![0.0; scalar.dim(mesh)];
    for t in 0..mesh.num_triangles() {
        let e = element(mesh, t);
        let dofs = scalar_dofs(mesh, t, scalar);
        for (l, w) in rule.points.iter().zip(&rule.weights) {
            let fx = f(e.point(l));
            let phi = scalar_values(scalar, l);
            for (d, p) in dofs.iter().zip(&phi) {
                b[*d] += w * e.area * fx * p;
            }
        }
    }
    b
}

/// `b = ∫ f · φ` for a vector function on the P2 vector space.
pub fn load_vector(mesh: &TorusMesh, f: &dyn Fn([f64; 2]) -> [f64; 2]) -> Vec<f64> {
    let n2 = mesh.dof_counts().p2_scalar;
    let rule = QuadratureRule::degree6();
    let mut b = vec![0.0; 2 * n2];
    for t in 0..mesh.num_triangles() {
        let e = element(mesh, t);
        let dofs = mesh.p2_dofs(t);
        for (l, w) in rule.points.iter().zip(&rule.weights) {
            let fx = f(e.point(l));
            let phi = p2_values(l);
            for (d, p) in dofs.iter().zip(&phi) {
                b[*d] += w * e.area * fx[0] * p;
                b[n2 + *d] += w * e.area * fx[1] * p;
            }
        }
    }
    b
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fem::quadrature::QuadratureRule;
    use std::f64::consts::PI;

    fn ones(n: usize) -> Vec<f64> {
        vec![1.0; n]
    }

    #[test]
    fn mass_partition_of_unity() {
        let m = TorusMesh::new(1.0, 2).unwrap();
        let mp1 = assemble_mass(&m, Space::P1);
        assert!((mp1.bilinear(&ones(4), &ones(4)) - 1.0).abs() < 1e-14);
        let m = TorusMesh::new(1.7, 5).unwrap();
        let mp2 = assemble_mass(&m, Space::P2Scalar);
        let n = mp2.nrows();
        assert!((mp2.bilinear(&ones(n), &ones(n)) - 1.7 * 1.7).abs() < 1e-13);
    }

    #[test]
    fn reference_p1_mass_block() {
        // one triangle's contribution, via the single-element assembly path
        let e = Element::new([[0.0, 0.0], [1.0, 0.0], [0.0, 1.0]]);
        let rule = QuadratureRule::degree4();
        for a in 0..3 {
            for b in 0..3 {
                let v: f64 = rule
                    .points
                    .iter()
                    .zip(&rule.weights)
                    .map(|(l, w)| w * e.area * l[a] * l[b])
                    .sum();
                let want = e.area / 12.0 * if a == b { 2.0 } else { 1.0 };
                assert!((v - want).abs() < 1e-15);
            }
        }
    }

    #[test]
    fn operators_are_symmetric_and_match_higher_order_rule() {
        let m = TorusMesh::new(1.0, 4).unwrap();
        let hi = QuadratureRule::degree6();
        for space in [Space::P1, Space::P2Scalar, Space::P2Vector] {
            let mass = assemble_mass(&m, space);
            let stiff = assemble_stiffness(&m, space);
            assert!(mass.asymmetry() <= 1e-13 * mass.max_abs());
            assert!(stiff.asymmetry() <= 1e-13 * stiff.max_abs());
            let mass_hi = assemble_mass_with(&m, space, &hi);
            let stiff_hi = assemble_stiffness_with(&m, space, &hi);
            let dm = SparseOperator::linear_combination(1.0, &mass, -1.0, &mass_hi).unwrap();
            let ds = SparseOperator::linear_combination(1.0, &stiff, -1.0, &stiff_hi).unwrap();
            assert!(dm.max_abs() <= 1e-12 * mass.max_abs());
            assert!(ds.max_abs() <= 1e-12 * stiff.max_abs());
        }
        let d = assemble_divergence(&m);
        let d_hi = assemble_divergence_with(&m, &hi);
        let dd = SparseOperator::linear_combination(1.0, &d, -1.0, &d_hi).unwrap();
        assert!(dd.max_abs() <= 1e-12 * d.max_abs());
    }

    #[test]
    fn stiffness_annihilates_constants() {
        let m = TorusMesh::new(1.0, 6).unwrap();
        for space in [Space::P1, Space::P2Scalar, Space::P2Vector] {
            let a = assemble_stiffness(&m, space);
            let y = a.matvec(&ones(a.nrows()));
            assert!(crate::sparse::norm_inf(&y) <= 1e-12);
            // a nonconstant hat has positive energy
            let mut hat = vec![0.0; a.nrows()];
            hat[3] = 1.0;
            assert!(a.bilinear(&hat, &hat) > 0.0);
        }
    }

    #[test]
    fn divergence_kills_constants_and_integrates_to_zero() {
        let m = TorusMesh::new(1.0, 5).unwrap();
        let d = assemble_divergence(&m);
        let c = m.dof_counts();
        let mut v = vec![0.0; c.velocity];
        v[..c.p2_scalar].iter_mut().for_each(|x| *x = 2.0);
        v[c.p2_scalar..].iter_mut().for_each(|x| *x = -0.5);
        assert!(crate::sparse::norm_inf(&d.matvec(&v)) < 1e-13);
        // constant pressure row: sum of rows applied to an arbitrary field
        let w: Vec<f64> = (0..c.velocity).map(|i| ((i * 37) % 11) as f64 - 5.0).collect();
        let total: f64 = d.matvec(&w).iter().sum();
        assert!(total.abs() < 1e-12);
    }

    #[test]
    fn divergence_matches_independent_quadrature() {
        // v = P2 interpolant of (sin 2πx, 0); q = hat function at the origin
        let m = TorusMesh::new(1.0, 8).unwrap();
        let c = m.dof_counts();
        let d = assemble_divergence(&m);
        let mut v = vec![0.0; c.velocity];
        for dof in 0..c.p2_scalar {
            v[dof] = (2.0 * PI * m.p2_node(dof)[0]).sin();
        }
        let got = d.matvec(&v)[0];

        // oracle: element-by-element with the 6-point rule applied to the
        // derivative of the interpolant, written out from scratch
        let rule = QuadratureRule::degree4();
        let mut want = 0.0;
        for t in 0..m.num_triangles() {
            let tri = m.triangles()[t];
            let Some(local) = tri.iter().position(|&x| x == 0) else {
                continue;
            };
            let e = element(&m, t);
            let dofs = m.p2_dofs(t);
            for (l, w) in rule.points.iter().zip(&rule.weights) {
                let g = e.p2_grads(l);
                let dudx: f64 = (0..6).map(|i| v[dofs[i]] * g[i][0]).sum();
                want += w * e.area * l[local] * dudx;
            }
        }
        assert!((got - want).abs() < 1e-12, "{got} vs {want}");
        // and it approximates ∫ψ 2π cos(2πx) for the exact field
        let exact_like = load_scalar(&m, Space::P1, &|x| 2.0 * PI * (2.0 * PI * x[0]).cos())[0];
        assert!((got - exact_like).abs() < 1e-3);
    }
}
