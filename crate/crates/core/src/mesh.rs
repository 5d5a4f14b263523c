//! Uniform periodic triangulations of the torus `(0,L)^2`.
//!
//! The box is cut into an `n x n` grid of squares and every square is split
//! along the same diagonal, from its lower-left to its upper-right corner.
//! Vertices and edges that are periodic images of each other are folded onto
//! one representative, so the mesh has `n^2` vertices, `3n^2` edges and
//! `2n^2` triangles.
//!
//! Scalar P1 degrees of freedom are the vertices. Scalar P2 degrees of
//! freedom are the vertices followed by the edges, `4n^2` in total. Vector
//! velocity fields store the x-component block first, then the y-component
//! block.

use std::collections::HashMap;

use serde::Serialize;

use crate::error::{Error, Result};

/// Degree-of-freedom counts of the Taylor-Hood spaces on a mesh.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub struct DofCounts {
    pub p1: usize,
    pub p2_scalar: usize,
    pub velocity: usize,
}

#[derive(Clone, Debug)]
pub struct TorusMesh {
    l: f64,
    n: usize,
    h: f64,
    vertices: Vec<[f64; 2]>,
    triangles: Vec<[usize; 3]>,
    /// Unwrapped corner coordinates; may reach `L` on the right/top border.
    corners: Vec<[[f64; 2]; 3]>,
    /// Local edge `k` is the edge opposite local vertex `k`.
    triangle_edges: Vec<[usize; 3]>,
    edge_vertices: Vec<[usize; 2]>,
    edge_midpoints: Vec<[f64; 2]>,
    p1_dof_of_vertex: Vec<usize>,
    p2_dof_of_vertex: Vec<usize>,
    p2_dof_of_edge: Vec<usize>,
}

/// Edge key: unordered endpoint pair plus the folded midpoint on the
/// half-spacing lattice.
type EdgeKey = (usize, usize, usize, usize);

impl TorusMesh {
    pub fn new(l: f64, n: usize) -> Result<Self> {
        if !(l.is_finite() && l > 0.0) {
            return Err(Error::InvalidMesh(format!("side length must be positive, got {l}")));
        }
        if n < 2 {
            return Err(Error::InvalidMesh(format!(
                "need at least 2 subdivisions per side for periodic identification, got {n}"
            )));
        }
        let a = l / n as f64;
        let vid = |i: usize, j: usize| (i % n) + n * (j % n);

        let mut vertices = Vec::with_capacity(n * n);
        for j in 0..n {
            for i in 0..n {
                vertices.push([i as f64 * a, j as f64 * a]);
            }
        }

        let key = |p: (usize, usize), q: (usize, usize)| -> EdgeKey {
            let (va, vb) = (vid(p.0, p.1), vid(q.0, q.1));
            // midpoint on the half lattice, folded
            let mx = (p.0 + q.0) % (2 * n);
            let my = (p.1 + q.1) % (2 * n);
            (va.min(vb), va.max(vb), mx, my)
        };

        // Edges are registered square by square as horizontal, vertical,
        // diagonal, so edge 3s+k is owned by the lower-left vertex s.
        let mut edge_index: HashMap<EdgeKey, usize> = HashMap::with_capacity(3 * n * n);
        let mut edge_vertices = Vec::with_capacity(3 * n * n);
        let mut edge_midpoints = Vec::with_capacity(3 * n * n);
        for j in 0..n {
            for i in 0..n {
                let ends = [
                    ((i, j), (i + 1, j)),
                    ((i, j), (i, j + 1)),
                    ((i, j), (i + 1, j + 1)),
                ];
                for (p, q) in ends {
                    let k = key(p, q);
                    let id = edge_vertices.len();
                    if edge_index.insert(k, id).is_some() {
                        return Err(Error::InvalidMesh(format!(
                            "edge identification collided for n = {n}"
                        )));
                    }
                    edge_vertices.push([vid(p.0, p.1), vid(q.0, q.1)]);
                    let mid = [
                        fold_coord((p.0 + q.0) as f64 * 0.5 * a, l),
                        fold_coord((p.1 + q.1) as f64 * 0.5 * a, l),
                    ];
                    edge_midpoints.push(mid);
                }
            }
        }

        let mut triangles = Vec::with_capacity(2 * n * n);
        let mut corners = Vec::with_capacity(2 * n * n);
        let mut triangle_edges = Vec::with_capacity(2 * n * n);
        for j in 0..n {
            for i in 0..n {
                let c00 = (i, j);
                let c10 = (i + 1, j);
                let c11 = (i + 1, j + 1);
                let c01 = (i, j + 1);
                for tri in [[c00, c10, c11], [c00, c11, c01]] {
                    let idx = [
                        vid(tri[0].0, tri[0].1),
                        vid(tri[1].0, tri[1].1),
                        vid(tri[2].0, tri[2].1),
                    ];
                    let xy = tri.map(|(p, q)| [p as f64 * a, q as f64 * a]);
                    let mut edges = [0usize; 3];
                    for (k, e) in edges.iter_mut().enumerate() {
                        let (p, q) = (tri[(k + 1) % 3], tri[(k + 2) % 3]);
                        *e = *edge_index.get(&key(p, q)).ok_or_else(|| {
                            Error::InvalidMesh("triangle edge missing from edge table".into())
                        })?;
                    }
                    triangles.push(idx);
                    corners.push(xy);
                    triangle_edges.push(edges);
                }
            }
        }

        let nv = vertices.len();
        let ne = edge_vertices.len();
        Ok(Self {
            l,
            n,
            h: l * std::f64::consts::SQRT_2 / n as f64,
            vertices,
            triangles,
            corners,
            triangle_edges,
            edge_vertices,
            edge_midpoints,
            p1_dof_of_vertex: (0..nv).collect(),
            p2_dof_of_vertex: (0..nv).collect(),
            p2_dof_of_edge: (nv..nv + ne).collect(),
        })
    }

    pub fn side_length(&self) -> f64 {
        self.l
    }

    pub fn subdivisions(&self) -> usize {
        self.n
    }

    /// Mesh size: the diameter of every triangle.
    pub fn h(&self) -> f64 {
        self.h
    }

    /// Grid spacing `L/n`.
    pub fn spacing(&self) -> f64 {
        self.l / self.n as f64
    }

    pub fn vertices(&self) -> &[[f64; 2]] {
        &self.vertices
    }

    pub fn triangles(&self) -> &[[usize; 3]] {
        &self.triangles
    }

    pub fn triangle_edges(&self) -> &[[usize; 3]] {
        &self.triangle_edges
    }

    pub fn edge_vertices(&self) -> &[[usize; 2]] {
        &self.edge_vertices
    }

    pub fn edge_midpoints(&self) -> &[[f64; 2]] {
        &self.edge_midpoints
    }

    pub fn num_vertices(&self) -> usize {
        self.vertices.len()
    }

    pub fn num_edges(&self) -> usize {
        self.edge_vertices.len()
    }

    pub fn num_triangles(&self) -> usize {
        self.triangles.len()
    }

    pub fn p1_dof_of_vertex(&self) -> &[usize] {
        &self.p1_dof_of_vertex
    }

    pub fn p2_dof_of_vertex(&self) -> &[usize] {
        &self.p2_dof_of_vertex
    }

    pub fn p2_dof_of_edge(&self) -> &[usize] {
        &self.p2_dof_of_edge
    }

    /// Unwrapped corner coordinates of triangle `t`, counter-clockwise.
    pub fn corners(&self, t: usize) -> &[[f64; 2]; 3] {
        &self.corners[t]
    }

    pub fn triangle_area(&self, t: usize) -> f64 {
        let [a, b, c] = self.corners[t];
        0.5 * ((b[0] - a[0]) * (c[1] - a[1]) - (c[0] - a[0]) * (b[1] - a[1]))
    }

    /// Local P1 dofs of triangle `t`.
    pub fn p1_dofs(&self, t: usize) -> [usize; 3] {
        self.triangles[t].map(|v| self.p1_dof_of_vertex[v])
    }

    /// Local scalar P2 dofs of triangle `t`: three vertices, then the edges
    /// opposite vertex 0, 1, 2.
    pub fn p2_dofs(&self, t: usize) -> [usize; 6] {
        let v = self.triangles[t];
        let e = self.triangle_edges[t];
        [
            self.p2_dof_of_vertex[v[0]],
            self.p2_dof_of_vertex[v[1]],
            self.p2_dof_of_vertex[v[2]],
            self.p2_dof_of_edge[e[0]],
            self.p2_dof_of_edge[e[1]],
            self.p2_dof_of_edge[e[2]],
        ]
    }

    /// Coordinates of a scalar P2 node.
    pub fn p2_node(&self, dof: usize) -> [f64; 2] {
        let nv = self.vertices.len();
        if dof < nv {
            self.vertices[dof]
        } else {
            self.edge_midpoints[dof - nv]
        }
    }

    pub fn dof_counts(&self) -> DofCounts {
        let p2 = self.vertices.len() + self.edge_vertices.len();
        DofCounts {
            p1: self.vertices.len(),
            p2_scalar: p2,
            velocity: 2 * p2,
        }
    }

    /// Groups of scalar P2 dofs owned by each vertex (the vertex and the
    /// three edges registered with its square). Used to build elimination
    /// orderings for saddle systems.
    pub fn vertex_owned_p2(&self, v: usize) -> [usize; 4] {
        let nv = self.vertices.len();
        [v, nv + 3 * v, nv + 3 * v + 1, nv + 3 * v + 2]
    }

    pub fn fold(&self, x: [f64; 2]) -> [f64; 2] {
        [fold_coord(x[0], self.l), fold_coord(x[1], self.l)]
    }
}

/// Reduce a coordinate into `[0, L)`.
pub fn fold_coord(x: f64, l: f64) -> f64 {
    let r = x.rem_euclid(l);
    // rem_euclid can round up to exactly l for tiny negative inputs
    if r >= l {
        0.0
    } else {
        r
    }
}
