//! Source placement for a variable-coefficient Poisson equation on the unit
//! square, discretized with P1 finite elements.
//!
//! The control `c ∈ [0,1]²` places a Gaussian source
//! `u(x, c) = α exp(-β ‖x - c‖²)`; the cost is `J(c) = ½ ‖y(c) - y_d‖²` in the
//! discrete L² norm, and its gradient comes from one adjoint solve. All of
//! this is computed in `f64`; the [`Problem`] impl converts at the boundary.

mod banded;
mod mesh;

use std::sync::Arc;

use nalgebra::DVector;

pub use banded::{BandCholesky, SymBand};
pub use mesh::Mesh;

use crate::domain::Bounds;
use crate::error::{LagoError, Result};
use crate::problems::Problem;
use crate::scalar::Scalar;

pub const PROBLEM_NAME: &str = "pde-source-2d";
pub const DEFAULT_MESH_N: usize = 50;
pub const ALPHA: f64 = 5e2;
pub const BETA: f64 = 5e3;

pub fn diffusion(x1: f64, x2: f64) -> f64 {
    use std::f64::consts::PI;
    let s = (PI * x1).cos() * (PI * x2).sin()
        + (2.0 * PI * x1).cos() * (PI * x2).sin()
        + (2.0 * PI * x1).cos() * (2.0 * PI * x2).sin();
    ((-1.125f64).exp() * s).exp()
}

pub fn desired_state(x1: f64, x2: f64) -> f64 {
    use std::f64::consts::PI;
    (2.0 * x1 + 2.0 * x2).exp() * (4.0 * PI * x1).sin() * (4.0 * PI * x2).sin()
}

pub fn unit_diffusion(_: f64, _: f64) -> f64 {
    1.0
}

#[derive(Debug, Clone)]
pub enum Target {
    /// Interpolated at the interior nodes.
    Field(fn(f64, f64) -> f64),
    /// One value per interior node.
    Nodal(Vec<f64>),
}

/// Quadrature for the source load `∫ u(·, c) φ_i`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LoadRule {
    /// Three edge midpoints per triangle.
    EdgeMidpoint,
    /// The seven-point degree-5 rule on each of `k²` congruent sub-triangles.
    Refined(usize),
}

#[derive(Debug, Clone)]
pub struct PdeSpec {
    pub n: usize,
    pub load_rule: LoadRule,
    pub alpha: f64,
    pub beta: f64,
    pub kappa: fn(f64, f64) -> f64,
    pub target: Target,
}

impl Default for PdeSpec {
    fn default() -> Self {
        Self {
            n: DEFAULT_MESH_N,
            load_rule: LoadRule::Refined(2),
            alpha: ALPHA,
            beta: BETA,
            kappa: diffusion,
            target: Target::Field(desired_state),
        }
    }
}

impl PdeSpec {
    pub fn with_mesh(n: usize) -> Self {
        Self { n, ..Self::default() }
    }
}

/// Assembled and factorized system; immutable and shareable across threads.
#[derive(Debug, Clone)]
pub struct FemSystem {
    pub mesh: Mesh,
    pub stiffness: SymBand,
    pub mass: SymBand,
    factor: BandCholesky,
    alpha: f64,
    beta: f64,
    load_elements: Vec<LoadElement>,
    load_points: Vec<LoadPoint>,
    /// `g_i = ∫ y_d φ_i`.
    target_load: Vec<f64>,
    /// `½ ‖y_d‖²`.
    target_energy: f64,
}

/// Degree-5 seven-point rule on a triangle: barycentric points and weights
/// summing to one.
const TRIANGLE_RULE: [([f64; 3], f64); 7] = {
    const A1: f64 = 0.059_715_871_789_770;
    const B1: f64 = 0.470_142_064_105_115;
    const W1: f64 = 0.132_394_152_788_506;
    const A2: f64 = 0.797_426_985_353_087;
    const B2: f64 = 0.101_286_507_323_456;
    const W2: f64 = 0.125_939_180_544_827;
    [
        ([1.0 / 3.0, 1.0 / 3.0, 1.0 / 3.0], 0.225),
        ([A1, B1, B1], W1),
        ([B1, A1, B1], W1),
        ([B1, B1, A1], W1),
        ([A2, B2, B2], W2),
        ([B2, A2, B2], W2),
        ([B2, B2, A2], W2),
    ]
};

impl FemSystem {
    pub fn assemble(spec: &PdeSpec) -> Result<Self> {
        let mesh = Mesh::unit_square(spec.n)?;
        let size = mesh.interior_count();
        let bandwidth = spec.n;
        let mut stiffness = SymBand::zeros(size, bandwidth);
        let mut mass = SymBand::zeros(size, bandwidth);
        for (t, tri) in mesh.triangles.iter().enumerate() {
            let p = tri.map(|v| mesh.vertices[v]);
            let area = mesh.signed_area(t);
            if area <= 0.0 {
                return Err(LagoError::Mesh(format!("triangle {t} is degenerate")));
            }
            let centroid = [(p[0][0] + p[1][0] + p[2][0]) / 3.0, (p[0][1] + p[1][1] + p[2][1]) / 3.0];
            let kappa = (spec.kappa)(centroid[0], centroid[1]);
            // Barycentric gradients: rotate the opposite edge by 90°.
            let grads: [[f64; 2]; 3] = std::array::from_fn(|a| {
                let (b, c) = ((a + 1) % 3, (a + 2) % 3);
                [(p[b][1] - p[c][1]) / (2.0 * area), (p[c][0] - p[b][0]) / (2.0 * area)]
            });
            for a in 0..3 {
                let Some(i) = mesh.interior_index(tri[a]) else { continue };
                for b in 0..3 {
                    let Some(j) = mesh.interior_index(tri[b]) else { continue };
                    if j > i {
                        continue;
                    }
                    let k = kappa * area * (grads[a][0] * grads[b][0] + grads[a][1] * grads[b][1]);
                    let m = area / 12.0 * if a == b { 2.0 } else { 1.0 };
                    stiffness.add(i, j, k);
                    mass.add(i, j, m);
                }
            }
        }
        let factor = stiffness.cholesky()?;
        let (target_load, target_energy) = match &spec.target {
            Target::Field(g) => field_target(&mesh, *g),
            Target::Nodal(values) => nodal_target(&mass, values)?,
        };
        let (load_elements, load_points) = load_quadrature(&mesh, spec.load_rule);
        Ok(Self {
            mesh,
            stiffness,
            mass,
            factor,
            alpha: spec.alpha,
            beta: spec.beta,
            load_elements,
            load_points,
            target_load,
            target_energy,
        })
    }

    pub fn size(&self) -> usize {
        self.mesh.interior_count()
    }

    /// Replaces the desired state by a nodal one (its P1 interpolant).
    pub fn with_target(mut self, target: Vec<f64>) -> Result<Self> {
        (self.target_load, self.target_energy) = nodal_target(&self.mass, &target)?;
        Ok(self)
    }

    pub fn source(&self, x: [f64; 2], c: [f64; 2]) -> f64 {
        let r2 = (x[0] - c[0]).powi(2) + (x[1] - c[1]).powi(2);
        self.alpha * (-self.beta * r2).exp()
    }

    /// Load vector and its derivatives with respect to `c₁`, `c₂`.
    pub fn load_with_jacobian(&self, c: [f64; 2]) -> (Vec<f64>, [Vec<f64>; 2]) {
        let size = self.size();
        let mut b = vec![0.0; size];
        let mut db = [vec![0.0; size], vec![0.0; size]];
        for el in &self.load_elements {
            let gap = [0, 1].map(|k| (el.lo[k] - c[k]).max(c[k] - el.hi[k]).max(0.0));
            if self.beta * (gap[0] * gap[0] + gap[1] * gap[1]) > SOURCE_CUTOFF {
                continue;
            }
            for q in &self.load_points[el.points.clone()] {
                let r2 = (q.x[0] - c[0]).powi(2) + (q.x[1] - c[1]).powi(2);
                let u = self.alpha * (-self.beta * r2).exp();
                let du = [0, 1].map(|j| 2.0 * self.beta * (q.x[j] - c[j]) * u);
                for (node, w) in el.nodes.iter().zip(q.weights) {
                    if let Some(i) = *node {
                        b[i] += w * u;
                        db[0][i] += w * du[0];
                        db[1][i] += w * du[1];
                    }
                }
            }
        }
        (b, db)
    }

    pub fn load(&self, c: [f64; 2]) -> Vec<f64> {
        self.load_with_jacobian(c).0
    }

    pub fn solve(&self, rhs: &[f64]) -> Vec<f64> {
        self.factor.solve(rhs)
    }

    pub fn solve_state(&self, c: [f64; 2]) -> Vec<f64> {
        self.solve(&self.load(c))
    }

    /// Solves `A p = M y - g`, the discrete form of `(y - y_d, v)`.
    pub fn solve_adjoint(&self, y: &[f64]) -> Vec<f64> {
        let rhs: Vec<f64> = self.mass.mul(y).iter().zip(&self.target_load).map(|(a, b)| a - b).collect();
        self.solve(&rhs)
    }

    /// `½ ‖y - y_d‖²` with `y` the P1 function of nodal values `y`.
    pub fn cost(&self, y: &[f64]) -> f64 {
        0.5 * dot(y, &self.mass.mul(y)) - dot(y, &self.target_load) + self.target_energy
    }

    /// Reduced cost and its gradient `∂J/∂cᵢ = pᵀ ∂b/∂cᵢ`, exact for the
    /// discrete cost.
    pub fn cost_and_gradient(&self, c: [f64; 2]) -> (f64, [f64; 2]) {
        let (b, db) = self.load_with_jacobian(c);
        let y = self.solve(&b);
        let p = self.solve_adjoint(&y);
        (self.cost(&y), [dot(&p, &db[0]), dot(&p, &db[1])])
    }

    /// Discrete L² norm of a nodal vector over interior unknowns.
    pub fn l2_norm(&self, v: &[f64]) -> f64 {
        dot(v, &self.mass.mul(v)).sqrt()
    }
}

/// Source contributions with `β r²` above this are below `4e-18` of the
/// peak, under the rounding of everything they would be added to.
const SOURCE_CUTOFF: f64 = 40.0;

#[derive(Debug, Clone)]
struct LoadElement {
    lo: [f64; 2],
    hi: [f64; 2],
    nodes: [Option<usize>; 3],
    points: std::ops::Range<usize>,
}

/// A quadrature node and `w_q φ_a(x_q)` for the element's three vertices.
#[derive(Debug, Clone, Copy)]
struct LoadPoint {
    x: [f64; 2],
    weights: [f64; 3],
}

fn load_quadrature(mesh: &Mesh, rule: LoadRule) -> (Vec<LoadElement>, Vec<LoadPoint>) {
    // Barycentric nodes and weights on the reference triangle.
    let reference: Vec<([f64; 3], f64)> = match rule {
        LoadRule::EdgeMidpoint => {
            vec![([0.0, 0.5, 0.5], 1.0 / 3.0), ([0.5, 0.0, 0.5], 1.0 / 3.0), ([0.5, 0.5, 0.0], 1.0 / 3.0)]
        }
        LoadRule::Refined(k) => {
            let k = k.max(1);
            let kf = k as f64;
            let mut nodes = Vec::new();
            // Sub-triangles of the k-fold split, upward and downward.
            for i in 0..k {
                for j in 0..k - i {
                    let up = [[i as f64, j as f64], [i as f64 + 1.0, j as f64], [i as f64, j as f64 + 1.0]];
                    let mut subs = vec![up];
                    if i + j + 1 < k {
                        subs.push([
                            [i as f64 + 1.0, j as f64],
                            [i as f64 + 1.0, j as f64 + 1.0],
                            [i as f64, j as f64 + 1.0],
                        ]);
                    }
                    for sub in subs {
                        for (l, w) in TRIANGLE_RULE {
                            let s = [0, 1].map(|m| (l[0] * sub[0][m] + l[1] * sub[1][m] + l[2] * sub[2][m]) / kf);
                            nodes.push(([1.0 - s[0] - s[1], s[0], s[1]], w / (kf * kf)));
                        }
                    }
                }
            }
            nodes
        }
    };
    let mut elements = Vec::with_capacity(mesh.triangles.len());
    let mut points = Vec::with_capacity(mesh.triangles.len() * reference.len());
    for (t, tri) in mesh.triangles.iter().enumerate() {
        let p = tri.map(|v| mesh.vertices[v]);
        let area = mesh.signed_area(t);
        let start = points.len();
        for (lambda, w) in &reference {
            let x = [0, 1].map(|k| lambda[0] * p[0][k] + lambda[1] * p[1][k] + lambda[2] * p[2][k]);
            points.push(LoadPoint { x, weights: lambda.map(|l| area * w * l) });
        }
        elements.push(LoadElement {
            lo: [0, 1].map(|k| p[0][k].min(p[1][k]).min(p[2][k])),
            hi: [0, 1].map(|k| p[0][k].max(p[1][k]).max(p[2][k])),
            nodes: tri.map(|v| mesh.interior_index(v)),
            points: start..points.len(),
        });
    }
    (elements, points)
}

fn field_target(mesh: &Mesh, g: fn(f64, f64) -> f64) -> (Vec<f64>, f64) {
    let mut load = vec![0.0; mesh.interior_count()];
    let mut energy = 0.0;
    for (t, tri) in mesh.triangles.iter().enumerate() {
        let p = tri.map(|v| mesh.vertices[v]);
        let area = mesh.signed_area(t);
        for (lambda, w) in TRIANGLE_RULE {
            let x = [0, 1].map(|k| lambda[0] * p[0][k] + lambda[1] * p[1][k] + lambda[2] * p[2][k]);
            let gx = g(x[0], x[1]);
            energy += 0.5 * area * w * gx * gx;
            for a in 0..3 {
                if let Some(i) = mesh.interior_index(tri[a]) {
                    load[i] += area * w * gx * lambda[a];
                }
            }
        }
    }
    (load, energy)
}

fn nodal_target(mass: &SymBand, values: &[f64]) -> Result<(Vec<f64>, f64)> {
    if values.len() != mass.size {
        return Err(LagoError::DimensionMismatch { expected: mass.size, got: values.len() });
    }
    let load = mass.mul(values);
    let energy = 0.5 * dot(values, &load);
    Ok((load, energy))
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// The source-placement objective over `c ∈ [0,1]²`.
#[derive(Debug, Clone)]
pub struct PdeProblem<T: Scalar> {
    system: Arc<FemSystem>,
    bounds: Bounds<T>,
}

impl<T: Scalar> PdeProblem<T> {
    pub fn new(spec: &PdeSpec) -> Result<Self> {
        Ok(Self::from_system(Arc::new(FemSystem::assemble(spec)?)))
    }

    pub fn with_mesh(n: usize) -> Result<Self> {
        Self::new(&PdeSpec::with_mesh(n))
    }

    pub fn from_system(system: Arc<FemSystem>) -> Self {
        Self { system, bounds: Bounds::cube(2, 0.0, 1.0).expect("unit square") }
    }

    pub fn system(&self) -> &FemSystem {
        &self.system
    }
}

impl<T: Scalar> Problem<T> for PdeProblem<T> {
    fn name(&self) -> &str {
        PROBLEM_NAME
    }

    fn bounds(&self) -> &Bounds<T> {
        &self.bounds
    }

    fn evaluate(&self, x: &DVector<T>) -> (T, DVector<T>) {
        let c = [x[0].to_f64_lossy(), x[1].to_f64_lossy()];
        let (j, g) = self.system.cost_and_gradient(c);
        (T::lit(j), DVector::from_vec(vec![T::lit(g[0]), T::lit(g[1])]))
    }

    /// One adjoint solve costs about as much as the state solve.
    fn default_gradient_cost(&self) -> usize {
        1
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn unit_spec(n: usize) -> PdeSpec {
        PdeSpec { n, kappa: unit_diffusion, ..PdeSpec::default() }
    }

    #[test]
    fn laplacian_stencil() {
        let sys = FemSystem::assemble(&unit_spec(8)).unwrap();
        let m = 7;
        for k in 0..sys.size() {
            assert!((sys.stiffness.get(k, k) - 4.0).abs() < 1e-13);
            let (i, j) = (k % m, k / m);
            let mut row_sum = 0.0;
            for l in 0..sys.size() {
                row_sum += sys.stiffness.get(k, l);
            }
            if i > 0 && j > 0 && i < m - 1 && j < m - 1 {
                assert!(row_sum.abs() < 1e-13);
            }
            if i + 1 < m {
                assert!((sys.stiffness.get(k, k + 1) + 1.0).abs() < 1e-13);
            }
            if j + 1 < m {
                assert!((sys.stiffness.get(k, k + m) + 1.0).abs() < 1e-13);
                if i + 1 < m {
                    assert!(sys.stiffness.get(k, k + m + 1).abs() < 1e-13);
                }
            }
        }
    }

    #[test]
    fn mass_totals_area() {
        let sys = FemSystem::assemble(&PdeSpec::with_mesh(10)).unwrap();
        let ones = vec![1.0; sys.size()];
        let total: f64 = sys.mass.mul(&ones).iter().sum();
        // Interior hat functions integrate to h² each, minus boundary coupling.
        assert!(total > 0.0 && total < 1.0);
    }

    #[test]
    fn state_is_linear_in_amplitude() {
        let a = FemSystem::assemble(&PdeSpec::with_mesh(16)).unwrap();
        let b = FemSystem::assemble(&PdeSpec { alpha: 2.0 * ALPHA, ..PdeSpec::with_mesh(16) }).unwrap();
        let (ya, yb) = (a.solve_state([0.3, 0.6]), b.solve_state([0.3, 0.6]));
        for (u, v) in ya.iter().zip(&yb) {
            assert!((2.0 * u - v).abs() <= 1e-12 * v.abs().max(1e-300));
        }
    }

    #[test]
    fn positive_source_gives_positive_state() {
        let sys = FemSystem::assemble(&PdeSpec::with_mesh(20)).unwrap();
        assert!(sys.solve_state([0.5, 0.5]).iter().all(|v| *v > 0.0));
    }

    #[test]
    fn matching_target_is_stationary() {
        let sys = FemSystem::assemble(&PdeSpec::with_mesh(16)).unwrap();
        let c0 = [0.4, 0.7];
        let y0 = sys.solve_state(c0);
        let sys = sys.with_target(y0.clone()).unwrap();
        let (j, g) = sys.cost_and_gradient(c0);
        assert!(j.abs() < 1e-10 * sys.l2_norm(&y0).powi(2));
        assert!(g[0].abs() < 1e-10 && g[1].abs() < 1e-10);
        assert!(sys.solve_adjoint(&y0).iter().all(|p| p.abs() < 1e-12));
    }

    #[test]
    fn wrong_target_length() {
        let sys = FemSystem::assemble(&PdeSpec::with_mesh(4)).unwrap();
        assert!(sys.with_target(vec![0.0; 3]).is_err());
    }

    #[test]
    fn problem_interface() {
        let p = PdeProblem::<f64>::with_mesh(8).unwrap();
        assert_eq!(p.name(), PROBLEM_NAME);
        assert_eq!(p.dim(), 2);
        assert_eq!(p.default_gradient_cost(), 1);
        let (f, g) = p.evaluate(&DVector::from_vec(vec![0.5, 0.5]));
        assert!(f.is_finite() && g.iter().all(|v| v.is_finite()));
    }
}
