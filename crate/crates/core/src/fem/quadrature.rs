//! Symmetric quadrature rules on triangles in barycentric coordinates.
//!
//! Weights are normalized to sum to one; multiply by the triangle area.

#[derive(Clone, Debug)]
pub struct QuadratureRule {
    pub points: Vec<[f64; 3]>,
    pub weights: Vec<f64>,
    pub degree: usize,
}

impl QuadratureRule {
    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    /// Six points, exact for polynomials of degree 4.
    pub fn degree4() -> Self {
        let mut r = Self {
            points: Vec::new(),
            weights: Vec::new(),
            degree: 4,
        };
        r.push_orbit3(0.445948490915965, 0.223381589678011);
        r.push_orbit3(0.091576213509771, 0.109951743655322);
        r
    }

    /// Twelve points, exact for polynomials of degree 6.
    pub fn degree6() -> Self {
        let mut r = Self {
            points: Vec::new(),
            weights: Vec::new(),
            degree: 6,
        };
        r.push_orbit3(0.249286745170910, 0.116786275726379);
        r.push_orbit3(0.063089014491502, 0.050844906370207);
        r.push_orbit6(
            [0.053145049844817, 0.310352451033784, 0.636502499121399],
            0.082851075618374,
        );
        r
    }

    /// Points `(1-2a, a, a)` and permutations.
    fn push_orbit3(&mut self, a: f64, w: f64) {
        let b = 1.0 - 2.0 * a;
        for p in [[b, a, a], [a, b, a], [a, a, b]] {
            self.points.push(p);
            self.weights.push(w);
        }
    }

    fn push_orbit6(&mut self, abc: [f64; 3], w: f64) {
        let [a, b, c] = abc;
        for p in [[a, b, c], [a, c, b], [b, a, c], [b, c, a], [c, a, b], [c, b, a]] {
            self.points.push(p);
            self.weights.push(w);
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn factorial(n: u32) -> f64 {
        (1..=n).map(f64::from).product()
    }

    /// Exact mean of l0^i l1^j l2^k over a triangle.
    fn monomial_mean(i: u32, j: u32, k: u32) -> f64 {
        2.0 * factorial(i) * factorial(j) * factorial(k) / factorial(i + j + k + 2)
    }

    fn check(rule: &QuadratureRule) {
        let wsum: f64 = rule.weights.iter().sum();
        assert!((wsum - 1.0).abs() < 1e-14);
        for p in &rule.points {
            assert!((p.iter().sum::<f64>() - 1.0).abs() < 1e-14);
        }
        let d = rule.degree as u32;
        for i in 0..=d {
            for j in 0..=d - i {
                for k in 0..=d - i - j {
                    let q: f64 = rule
                        .points
                        .iter()
                        .zip(&rule.weights)
                        .map(|(p, w)| w * p[0].powi(i as i32) * p[1].powi(j as i32) * p[2].powi(k as i32))
                        .sum();
                    let exact = monomial_mean(i, j, k);
                    assert!((q - exact).abs() < 1e-13, "degree ({i},{j},{k}): {q} vs {exact}");
                }
            }
        }
    }

    #[test]
    fn degree4_rule_is_exact() {
        check(&QuadratureRule::degree4());
    }

    #[test]
    fn degree6_rule_is_exact() {
        check(&QuadratureRule::degree6());
    }
}
