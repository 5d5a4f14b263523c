//! Affine triangle geometry and the P1/P2 Lagrange bases.
//!
//! Local P2 ordering: vertices 0,1,2, then the edges opposite vertex 0,1,2.

#[derive(Clone, Copy, Debug)]
pub struct Element {
    pub corners: [[f64; 2]; 3],
    pub area: f64,
    /// Gradients of the barycentric coordinates.
    pub grad_lambda: [[f64; 2]; 3],
}

impl Element {
    pub fn new(corners: [[f64; 2]; 3]) -> Self {
        let [p0, p1, p2] = corners;
        let det = (p1[0] - p0[0]) * (p2[1] - p0[1]) - (p2[0] - p0[0]) * (p1[1] - p0[1]);
        let inv = 1.0 / det;
        let grad_lambda = [
            [(p1[1] - p2[1]) * inv, (p2[0] - p1[0]) * inv],
            [(p2[1] - p0[1]) * inv, (p0[0] - p2[0]) * inv],
            [(p0[1] - p1[1]) * inv, (p1[0] - p0[0]) * inv],
        ];
        Self {
            corners,
            area: 0.5 * det,
            grad_lambda,
        }
    }

    pub fn point(&self, lambda: &[f64; 3]) -> [f64; 2] {
        let c = &self.corners;
        [
            lambda[0] * c[0][0] + lambda[1] * c[1][0] + lambda[2] * c[2][0],
            lambda[0] * c[0][1] + lambda[1] * c[1][1] + lambda[2] * c[2][1],
        ]
    }

    pub fn p1_grads(&self) -> [[f64; 2]; 3] {
        self.grad_lambda
    }

    pub fn p2_grads(&self, l: &[f64; 3]) -> [[f64; 2]; 6] {
        let g = &self.grad_lambda;
        let mut out = [[0.0; 2]; 6];
        for i in 0..3 {
            let s = 4.0 * l[i] - 1.0;
            out[i] = [s * g[i][0], s * g[i][1]];
        }
        for k in 0..3 {
            let (a, b) = ((k + 1) % 3, (k + 2) % 3);
            out[3 + k] = [
                4.0 * (l[a] * g[b][0] + l[b] * g[a][0]),
                4.0 * (l[a] * g[b][1] + l[b] * g[a][1]),
            ];
        }
        out
    }
}

pub fn p1_values(l: &[f64; 3]) -> [f64; 3] {
    *l
}

pub fn p2_values(l: &[f64; 3]) -> [f64; 6] {
    [
        l[0] * (2.0 * l[0] - 1.0),
        l[1] * (2.0 * l[1] - 1.0),
        l[2] * (2.0 * l[2] - 1.0),
        4.0 * l[1] * l[2],
        4.0 * l[2] * l[0],
        4.0 * l[0] * l[1],
    ]
}
