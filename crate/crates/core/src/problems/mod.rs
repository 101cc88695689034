//! Objectives with analytic gradients, initial designs and cost accounting.

mod design;
mod ledger;
mod synthetic;

pub use design::latin_hypercube;
pub use ledger::EvaluationLedger;
pub use synthetic::{make_problem, SyntheticKind, SyntheticProblem, SUITE};

use nalgebra::DVector;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::domain::Bounds;
use crate::error::{LagoError, Result};
use crate::pde::{PdeProblem, DEFAULT_MESH_N, PROBLEM_NAME as PDE_NAME};
use crate::scalar::Scalar;

/// Every registered problem name with the dimensions it accepts.
pub fn registry() -> Vec<(&'static str, &'static [usize])> {
    let mut out: Vec<(&'static str, &'static [usize])> = SUITE
        .iter()
        .map(|&name| {
            let dims: &'static [usize] = if name == "styblinski-tang" { &[2, 5] } else { &[2] };
            (name, dims)
        })
        .collect();
    out.push((PDE_NAME, &[2]));
    out
}

/// Any registered problem by name; `mesh_n` only affects the PDE problem
/// (`None`: a 50 × 50 mesh).
pub fn build_problem<T: Scalar>(name: &str, d: usize, mesh_n: Option<usize>) -> Result<Box<dyn Problem<T>>> {
    if name == PDE_NAME {
        if d != 2 {
            return Err(LagoError::UnknownProblem { name: name.to_string(), dim: d });
        }
        return Ok(Box::new(PdeProblem::with_mesh(mesh_n.unwrap_or(DEFAULT_MESH_N))?));
    }
    Ok(Box::new(make_problem(name, d)?))
}

/// An objective with gradient over a box.
pub trait Problem<T: Scalar>: Send + Sync {
    fn name(&self) -> &str;

    fn dim(&self) -> usize {
        self.bounds().dim()
    }

    fn bounds(&self) -> &Bounds<T>;

    /// Joint evaluation of `f(x)` and `∇f(x)`.
    fn evaluate(&self, x: &DVector<T>) -> (T, DVector<T>);

    fn known_min(&self) -> Option<T> {
        None
    }

    /// Function-evaluation units charged for one gradient.
    fn default_gradient_cost(&self) -> usize {
        self.dim()
    }
}

impl<T: Scalar, P: Problem<T> + ?Sized> Problem<T> for Box<P> {
    fn name(&self) -> &str {
        (**self).name()
    }
    fn dim(&self) -> usize {
        (**self).dim()
    }
    fn bounds(&self) -> &Bounds<T> {
        (**self).bounds()
    }
    fn evaluate(&self, x: &DVector<T>) -> (T, DVector<T>) {
        (**self).evaluate(x)
    }
    fn known_min(&self) -> Option<T> {
        (**self).known_min()
    }
    fn default_gradient_cost(&self) -> usize {
        (**self).default_gradient_cost()
    }
}

/// Largest relative discrepancy between the analytic gradient and central
/// finite differences over `n_points` uniform interior points.
///
/// Per point the error is `‖g - g_fd‖∞ / max(‖g‖∞, 1)`.
pub fn gradient_check<T: Scalar, P: Problem<T> + ?Sized>(problem: &P, n_points: usize, seed: u64) -> T {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let b = problem.bounds();
    let d = problem.dim();
    let mut worst = T::zero();
    for _ in 0..n_points {
        let x = DVector::from_fn(d, |i, _| {
            let u: f64 = rng.random_range(0.01..0.99);
            b.lower[i] + (b.upper[i] - b.lower[i]) * T::lit(u)
        });
        let (_, g) = problem.evaluate(&x);
        let mut err = T::zero();
        for i in 0..d {
            let h = T::lit(1e-6) * x[i].abs().max(T::one());
            let mut xp = x.clone();
            let mut xm = x.clone();
            xp[i] += h;
            xm[i] -= h;
            let fd = (problem.evaluate(&xp).0 - problem.evaluate(&xm).0) / (h * T::lit(2.0));
            err = err.max((fd - g[i]).abs());
        }
        worst = worst.max(err / g.amax().max(T::one()));
    }
    worst
}
