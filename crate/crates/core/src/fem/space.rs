//! Assembled Taylor-Hood operators, projections and norms on one mesh.

use crate::error::{Error, Result};
use crate::fem::assemble::{
    assemble_divergence, assemble_mass, assemble_stiffness, element, load_scalar, load_vector,
    Space,
};
use crate::fem::element::{p1_values, p2_values};
use crate::fem::quadrature::QuadratureRule;
use crate::mesh::TorusMesh;
use crate::solve::ldlt::{factorize, FactorKind, Factorization};
use crate::solve::saddle::SaddleSolver;
use crate::sparse::{dot, norm2, norm_inf, SparseOperator};

/// Residual accepted for the mean-zero Poisson problem on P1.
pub const POISSON_TOLERANCE: f64 = 1e-11;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum PressureRole {
    Pressure,
    PseudoPressure,
    Helmholtz,
}

#[derive(Clone, Debug)]
pub struct MixedField {
    /// P2 x-block followed by the P2 y-block.
    pub velocity: Vec<f64>,
    /// P1 coefficients with zero mean.
    pub pressure: Vec<f64>,
    pub role: PressureRole,
}

/// Degree-6 quadrature nodes over the whole mesh, triangle by triangle.
#[derive(Clone, Debug)]
pub struct QuadratureTable {
    pub points: Vec<[f64; 2]>,
    /// Rule weight times triangle area.
    pub weights: Vec<f64>,
    pub per_triangle: usize,
}

#[derive(Debug)]
pub struct TaylorHood {
    mesh: TorusMesh,
    mass_p1: SparseOperator,
    mass_p2: SparseOperator,
    mass_vel: SparseOperator,
    stiff_p1: SparseOperator,
    stiff_vel: SparseOperator,
    divergence: SparseOperator,
    pressure_weights: Vec<f64>,
    p1_mass_factor: Factorization,
    p2_mass_factor: Factorization,
    poisson: Factorization,
    divfree: SaddleSolver,
    quad: QuadratureTable,
    rule6: QuadratureRule,
}

impl TaylorHood {
    pub fn new(mesh: TorusMesh) -> Result<Self> {
        let mass_p1 = assemble_mass(&mesh, Space::P1);
        let mass_p2 = assemble_mass(&mesh, Space::P2Scalar);
        let mass_vel = mass_p2.block_diagonal(2);
        let stiff_p1 = assemble_stiffness(&mesh, Space::P1);
        let stiff_vel = assemble_stiffness(&mesh, Space::P2Vector);
        let divergence = assemble_divergence(&mesh);
        let np = mass_p1.nrows();
        let pressure_weights = mass_p1.matvec(&vec![1.0; np]);

        let p1_mass_factor = factorize(&mass_p1, FactorKind::Spd)?;
        let p2_mass_factor = factorize(&mass_p2, FactorKind::Spd)?;

        let mut t = stiff_p1.triplets();
        for (q, &w) in pressure_weights.iter().enumerate() {
            t.push((q, np, w));
            t.push((np, q, w));
        }
        let bordered = SparseOperator::from_triplets(np + 1, np + 1, &t);
        let poisson = factorize(&bordered, FactorKind::SymmetricIndefinite)?;

        let blocks = saddle_blocks(&mesh);
        let divfree = SaddleSolver::new(&mass_vel, &divergence, &pressure_weights, Some(&blocks))?;

        let rule6 = QuadratureRule::degree6();
        let quad = quadrature_table(&mesh, &rule6);
        Ok(Self {
            mesh,
            mass_p1,
            mass_p2,
            mass_vel,
            stiff_p1,
            stiff_vel,
            divergence,
            pressure_weights,
            p1_mass_factor,
            p2_mass_factor,
            poisson,
            divfree,
            quad,
            rule6,
        })
    }

    pub fn mesh(&self) -> &TorusMesh {
        &self.mesh
    }

    pub fn velocity_dim(&self) -> usize {
        self.mass_vel.nrows()
    }

    pub fn pressure_dim(&self) -> usize {
        self.mass_p1.nrows()
    }

    pub fn mass_p1(&self) -> &SparseOperator {
        &self.mass_p1
    }

    pub fn mass_p2(&self) -> &SparseOperator {
        &self.mass_p2
    }

    pub fn mass_velocity(&self) -> &SparseOperator {
        &self.mass_vel
    }

    pub fn stiffness_p1(&self) -> &SparseOperator {
        &self.stiff_p1
    }

    pub fn stiffness_velocity(&self) -> &SparseOperator {
        &self.stiff_vel
    }

    pub fn divergence(&self) -> &SparseOperator {
        &self.divergence
    }

    /// `∫ ψ_q` for every P1 basis function.
    pub fn pressure_weights(&self) -> &[f64] {
        &self.pressure_weights
    }

    pub fn quadrature(&self) -> &QuadratureTable {
        &self.quad
    }

    /// Discrete mean `(p, 1) / L^2` of a P1 field.
    pub fn p1_mean(&self, p: &[f64]) -> f64 {
        let l = self.mesh.side_length();
        dot(&self.pressure_weights, p) / (l * l)
    }

    pub fn l2_project_scalar(&self, space: Space, f: &dyn Fn([f64; 2]) -> f64) -> Result<Vec<f64>> {
        let b = load_scalar(&self.mesh, space, f);
        match space {
            Space::P1 => self.p1_mass_factor.solve(&b),
            Space::P2Scalar => self.p2_mass_factor.solve(&b),
            Space::P2Vector => Err(Error::Dimension(
                "use l2_project_vector for vector fields".into(),
            )),
        }
    }

    pub fn l2_project_vector(&self, f: &dyn Fn([f64; 2]) -> [f64; 2]) -> Result<Vec<f64>> {
        let b = load_vector(&self.mesh, f);
        self.solve_velocity_mass(&b)
    }

    /// `M_vel^{-1} b`, solved componentwise.
    pub fn solve_velocity_mass(&self, b: &[f64]) -> Result<Vec<f64>> {
        let n2 = self.mass_p2.nrows();
        let mut x = self.p2_mass_factor.solve(&b[..n2])?;
        x.extend(self.p2_mass_factor.solve(&b[n2..])?);
        Ok(x)
    }

    /// Nodal interpolant of a vector field in the velocity space.
    pub fn interpolate_vector(&self, f: &dyn Fn([f64; 2]) -> [f64; 2]) -> Vec<f64> {
        let n2 = self.mass_p2.nrows();
        let mut u = vec![0.0; 2 * n2];
        for d in 0..n2 {
            let v = f(self.mesh.p2_node(d));
            u[d] = v[0];
            u[n2 + d] = v[1];
        }
        u
    }

    pub fn interpolate_p1(&self, f: &dyn Fn([f64; 2]) -> f64) -> Vec<f64> {
        self.mesh.vertices().iter().map(|&x| f(x)).collect()
    }

    /// L²-closest discretely divergence-free velocity to `f`.
    pub fn project_divfree(&self, f: &dyn Fn([f64; 2]) -> [f64; 2]) -> Result<MixedField> {
        let b = load_vector(&self.mesh, f);
        self.project_divfree_load(&b)
    }

    /// As [`project_divfree`](Self::project_divfree) for a velocity-space
    /// vector.
    pub fn project_divfree_coeffs(&self, u: &[f64]) -> Result<MixedField> {
        let b = self.mass_vel.matvec(u);
        self.project_divfree_load(&b)
    }

    /// Projection given the load vector `(f, φ_i)`.
    pub fn project_divfree_load(&self, b: &[f64]) -> Result<MixedField> {
        let sol = self.divfree.solve(b, None)?;
        Ok(MixedField {
            velocity: sol.velocity,
            pressure: sol.multiplier,
            role: PressureRole::Helmholtz,
        })
    }

    /// Mean-zero solution of `A_p1 ξ = rhs`. `rhs` must be orthogonal to
    /// constants up to rounding; the rounding part is removed first.
    pub fn solve_poisson(&self, rhs: &[f64]) -> Result<Vec<f64>> {
        let np = self.pressure_dim();
        let shift = rhs.iter().sum::<f64>() / np as f64;
        let rhs: Vec<f64> = rhs.iter().map(|v| v - shift).collect();
        let rhs = &rhs[..];
        let mut b = rhs.to_vec();
        b.push(0.0);
        let x = self.poisson.solve(&b)?;
        let xi = x[..np].to_vec();
        let mut r = self.stiff_p1.matvec(&xi);
        for (ri, bi) in r.iter_mut().zip(rhs) {
            *ri -= bi;
        }
        let scale = norm2(rhs).max(f64::MIN_POSITIVE);
        let rel = norm2(&r) / scale;
        if norm2(rhs) > 0.0 && rel > POISSON_TOLERANCE {
            return Err(Error::Residual {
                residual: rel,
                tolerance: POISSON_TOLERANCE,
            });
        }
        Ok(xi)
    }

    /// Load vector `(∇ξ, φ_i)` of a P1 function, which equals `-D^T ξ`.
    pub fn gradient_load(&self, xi: &[f64]) -> Vec<f64> {
        let mut b = vec![0.0; self.velocity_dim()];
        self.divergence.matvec_transpose_add(-1.0, xi, &mut b);
        b
    }

    /// L² projection of `∇ξ` onto the velocity space.
    pub fn gradient_to_velocity(&self, xi: &[f64]) -> Result<Vec<f64>> {
        self.solve_velocity_mass(&self.gradient_load(xi))
    }

    pub fn velocity_l2(&self, u: &[f64]) -> f64 {
        self.mass_vel.bilinear(u, u).max(0.0).sqrt()
    }

    pub fn velocity_h1_seminorm(&self, u: &[f64]) -> f64 {
        self.stiff_vel.bilinear(u, u).max(0.0).sqrt()
    }

    pub fn p1_l2(&self, p: &[f64]) -> f64 {
        self.mass_p1.bilinear(p, p).max(0.0).sqrt()
    }

    pub fn p1_h1_seminorm(&self, p: &[f64]) -> f64 {
        self.stiff_p1.bilinear(p, p).max(0.0).sqrt()
    }

    /// `max_q |(D u)_q|`.
    pub fn divergence_residual(&self, u: &[f64]) -> f64 {
        norm_inf(&self.divergence.matvec(u))
    }

    /// Velocity values at the nodes of [`quadrature`](Self::quadrature).
    pub fn eval_velocity(&self, u: &[f64]) -> Vec<[f64; 2]> {
        let n2 = self.mass_p2.nrows();
        let tables: Vec<[f64; 6]> = self.rule6.points.iter().map(p2_values).collect();
        let mut out = Vec::with_capacity(self.quad.points.len());
        for t in 0..self.mesh.num_triangles() {
            let dofs = self.mesh.p2_dofs(t);
            for phi in &tables {
                let mut v = [0.0; 2];
                for (d, p) in dofs.iter().zip(phi) {
                    v[0] += u[*d] * p;
                    v[1] += u[n2 + *d] * p;
                }
                out.push(v);
            }
        }
        out
    }

    /// Velocity gradients `[∂x ux, ∂y ux, ∂x uy, ∂y uy]` at the quadrature nodes.
    pub fn eval_velocity_gradient(&self, u: &[f64]) -> Vec<[f64; 4]> {
        let n2 = self.mass_p2.nrows();
        let mut out = Vec::with_capacity(self.quad.points.len());
        for t in 0..self.mesh.num_triangles() {
            let e = element(&self.mesh, t);
            let dofs = self.mesh.p2_dofs(t);
            for l in &self.rule6.points {
                let g = e.p2_grads(l);
                let mut v = [0.0; 4];
                for (d, gi) in dofs.iter().zip(&g) {
                    v[0] += u[*d] * gi[0];
                    v[1] += u[*d] * gi[1];
                    v[2] += u[n2 + *d] * gi[0];
                    v[3] += u[n2 + *d] * gi[1];
                }
                out.push(v);
            }
        }
        out
    }

    pub fn eval_p1(&self, p: &[f64]) -> Vec<f64> {
        let tables: Vec<[f64; 3]> = self.rule6.points.iter().map(p1_values).collect();
        let mut out = Vec::with_capacity(self.quad.points.len());
        for t in 0..self.mesh.num_triangles() {
            let dofs = self.mesh.p1_dofs(t);
            for psi in &tables {
                out.push(dofs.iter().zip(psi).map(|(d, s)| p[*d] * s).sum());
            }
        }
        out
    }

    /// Quadrature L² norm of a sampled field with `C` components.
    pub fn quadrature_norm<const C: usize>(&self, values: &[[f64; C]]) -> f64 {
        values
            .iter()
            .zip(&self.quad.weights)
            .map(|(v, w)| w * v.iter().map(|x| x * x).sum::<f64>())
            .sum::<f64>()
            .sqrt()
    }
}

/// Elimination groups for saddle systems on this mesh: each vertex's P2
/// dofs in both components, then its pressure dof.
pub fn saddle_blocks(mesh: &TorusMesh) -> Vec<Vec<usize>> {
    let c = mesh.dof_counts();
    (0..mesh.num_vertices())
        .map(|v| {
            let owned = mesh.vertex_owned_p2(v);
            let mut b: Vec<usize> = owned.to_vec();
            b.extend(owned.iter().map(|d| d + c.p2_scalar));
            b.push(c.velocity + v);
            b
        })
        .collect()
}

fn quadrature_table(mesh: &TorusMesh, rule: &QuadratureRule) -> QuadratureTable {
    let mut points = Vec::with_capacity(mesh.num_triangles() * rule.len());
    let mut weights = Vec::with_capacity(points.capacity());
    for t in 0..mesh.num_triangles() {
        let e = element(mesh, t);
        for (l, w) in rule.points.iter().zip(&rule.weights) {
            points.push(e.point(l));
            weights.push(w * e.area);
        }
    }
    QuadratureTable {
        points,
        weights,
        per_triangle: rule.len(),
    }
}
