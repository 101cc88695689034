use crate::error::{LagoError, Result};

/// Uniform triangulation of the unit square: `n × n` squares, each cut along
/// its lower-left to upper-right diagonal.
#[derive(Debug, Clone, PartialEq)]
pub struct Mesh {
    pub n: usize,
    pub vertices: Vec<[f64; 2]>,
    /// Counter-clockwise vertex triples.
    pub triangles: Vec<[usize; 3]>,
    pub boundary: Vec<bool>,
}

impl Mesh {
    pub fn unit_square(n: usize) -> Result<Self> {
        if n < 2 {
            return Err(LagoError::Mesh(format!("need at least 2 cells per side, got {n}")));
        }
        let h = 1.0 / n as f64;
        let id = |i: usize, j: usize| j * (n + 1) + i;
        let mut vertices = Vec::with_capacity((n + 1) * (n + 1));
        let mut boundary = Vec::with_capacity((n + 1) * (n + 1));
        for j in 0..=n {
            for i in 0..=n {
                vertices.push([i as f64 * h, j as f64 * h]);
                boundary.push(i == 0 || j == 0 || i == n || j == n);
            }
        }
        let mut triangles = Vec::with_capacity(2 * n * n);
        for j in 0..n {
            for i in 0..n {
                let (a, b, c, d) = (id(i, j), id(i + 1, j), id(i + 1, j + 1), id(i, j + 1));
                triangles.push([a, b, c]);
                triangles.push([a, c, d]);
            }
        }
        let mesh = Self { n, vertices, triangles, boundary };
        for t in 0..mesh.triangles.len() {
            if mesh.signed_area(t) <= 0.0 {
                return Err(LagoError::Mesh(format!("triangle {t} is degenerate")));
            }
        }
        Ok(mesh)
    }

    pub fn h(&self) -> f64 {
        1.0 / self.n as f64
    }

    pub fn signed_area(&self, t: usize) -> f64 {
        let [a, b, c] = self.triangles[t].map(|v| self.vertices[v]);
        0.5 * ((b[0] - a[0]) * (c[1] - a[1]) - (c[0] - a[0]) * (b[1] - a[1]))
    }

    /// Interior vertex `(i, j)`, `1 ≤ i, j ≤ n-1`, maps to `(j-1)(n-1) + i-1`.
    /// Boundary vertices map to `None`.
    pub fn interior_index(&self, v: usize) -> Option<usize> {
        if self.boundary[v] {
            return None;
        }
        let (i, j) = (v % (self.n + 1), v / (self.n + 1));
        Some((j - 1) * (self.n - 1) + (i - 1))
    }

    pub fn interior_count(&self) -> usize {
        (self.n - 1) * (self.n - 1)
    }

    /// Vertex index of interior unknown `k`.
    pub fn interior_vertex(&self, k: usize) -> usize {
        let m = self.n - 1;
        (k / m + 1) * (self.n + 1) + (k % m + 1)
    }
}
