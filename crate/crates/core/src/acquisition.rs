//! Expected Improvement and its maximization outside the trust-region ball.

use nalgebra::DVector;
use rand::Rng;

use crate::domain::Bounds;
use crate::error::{LagoError, Result};
use crate::gradient_gp::GradientGp;
use crate::scalar::Scalar;
use crate::search::nelder_mead;

/// Below this standard deviation EI uses its deterministic limit.
pub const STD_FLOOR: f64 = 1e-12;

fn normal_pdf(t: f64) -> f64 {
    (-0.5 * t * t).exp() / (2.0 * std::f64::consts::PI).sqrt()
}

fn normal_cdf(t: f64) -> f64 {
    0.5 * libm::erfc(-t / std::f64::consts::SQRT_2)
}

/// `E[(f_best - F)_+]` for `F ~ N(mean, std²)`.
pub fn expected_improvement<T: Scalar>(mean: T, std: T, f_best: T) -> T {
    let z = f_best - mean;
    if !(std >= T::lit(STD_FLOOR)) {
        return z.max(T::zero());
    }
    let (z64, s64) = (z.to_f64_lossy(), std.to_f64_lossy());
    let t = z64 / s64;
    let ei = s64 * (t * normal_cdf(t) + normal_pdf(t));
    T::lit(ei.max(0.0))
}

/// Where EI may be maximized: the domain minus the open ball
/// `B(exclusion_center, exclusion_radius)`.
#[derive(Debug, Clone, PartialEq)]
pub struct AcquisitionContext<T: Scalar> {
    pub f_best: T,
    pub exclusion_center: DVector<T>,
    pub exclusion_radius: T,
    pub domain: Bounds<T>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct AcquisitionOptions {
    pub starts: usize,
    pub evals_per_start: usize,
}

impl Default for AcquisitionOptions {
    fn default() -> Self {
        Self { starts: 32, evals_per_start: 40 }
    }
}

impl<T: Scalar> AcquisitionContext<T> {
    /// True when some point of the box lies at distance `≥ radius` from the
    /// center.
    pub fn is_feasible(&self) -> bool {
        let corner = self.domain.farthest_corner(&self.exclusion_center);
        (corner - &self.exclusion_center).norm() >= self.exclusion_radius
    }

    /// Maps `x` into the feasible set: clip to the box, then push radially out
    /// of the ball. Coordinates the push drives onto a face stay there and the
    /// remaining ones are pushed again. If every coordinate ends up pinned
    /// inside the ball, the point on the segment towards the farthest corner
    /// at distance `radius` is used. `None` only when the exterior is empty.
    pub fn project(&self, x: &DVector<T>) -> Option<DVector<T>> {
        let y = self.domain.clip(x);
        if self.is_outside(&y) {
            return Some(y);
        }
        self.push_out(y).or_else(|| {
            let c = &self.exclusion_center;
            let dir = self.domain.farthest_corner(c) - c;
            let n = dir.norm();
            if n < self.exclusion_radius {
                return None;
            }
            let mut scale = self.exclusion_radius / n;
            for _ in 0..8 {
                let z = self.domain.clip(&(c + &dir * scale.min(T::one())));
                if self.is_outside(&z) {
                    return Some(z);
                }
                scale *= T::one() + T::lit(4.0) * T::epsilon();
            }
            None
        })
    }

    fn push_out(&self, mut y: DVector<T>) -> Option<DVector<T>> {
        let c = &self.exclusion_center;
        let d = y.len();
        let mut pinned = vec![false; d];
        for _ in 0..=d {
            let mut dir = DVector::from_fn(d, |i, _| if pinned[i] { T::zero() } else { y[i] - c[i] });
            if dir.norm() == T::zero() {
                let corner = self.domain.farthest_corner(c);
                dir = DVector::from_fn(d, |i, _| if pinned[i] { T::zero() } else { corner[i] - c[i] });
            }
            let n = dir.norm();
            if n == T::zero() {
                return None;
            }
            let pinned_sq = (0..d).filter(|&i| pinned[i]).fold(T::zero(), |a, i| a + (y[i] - c[i]) * (y[i] - c[i]));
            let need = (self.exclusion_radius * self.exclusion_radius - pinned_sq).max(T::zero()).sqrt();
            let mut scale = need / n;
            let mut pushed = y.clone();
            for _ in 0..8 {
                pushed = DVector::from_fn(d, |i, _| if pinned[i] { y[i] } else { c[i] + dir[i] * scale });
                let z = self.domain.clip(&pushed);
                if self.is_outside(&z) {
                    return Some(z);
                }
                scale *= T::one() + T::lit(4.0) * T::epsilon();
            }
            let z = self.domain.clip(&pushed);
            let mut grew = false;
            for i in 0..d {
                if !pinned[i] && z[i] != pushed[i] {
                    pinned[i] = true;
                    grew = true;
                }
            }
            if !grew {
                return None;
            }
            y = z;
        }
        None
    }

    pub fn is_outside(&self, x: &DVector<T>) -> bool {
        (x - &self.exclusion_center).norm() >= self.exclusion_radius
    }
}

/// Multi-start Nelder–Mead ascent of EI over the feasible exterior.
///
/// Starts are drawn uniformly from the box; every iterate is evaluated at its
/// projection. Ties between starts go to the lowest start index.
pub fn maximize_outside_ball<T: Scalar, R: Rng + ?Sized>(
    model: &GradientGp<T>,
    ctx: &AcquisitionContext<T>,
    options: AcquisitionOptions,
    rng: &mut R,
) -> Result<(DVector<T>, T)> {
    if ctx.domain.dim() != model.dim() {
        return Err(LagoError::DimensionMismatch { expected: model.dim(), got: ctx.domain.dim() });
    }
    if !ctx.is_feasible() {
        return Err(LagoError::InfeasibleExclusion);
    }
    let ei_at = |x: &DVector<T>| -> T {
        let (m, s) = model.mean_std(x);
        expected_improvement(m, s, ctx.f_best)
    };
    let step = ctx.domain.widths() * T::lit(0.05);

    let starts: Vec<DVector<T>> = (0..options.starts).map(|_| ctx.domain.sample_uniform(rng)).collect();
    let mut best: Option<(DVector<T>, T)> = None;
    for start in &starts {
        let Some(x0) = ctx.project(start) else { continue };
        let neg_ei = |x: &DVector<T>| match ctx.project(x) {
            Some(p) => -ei_at(&p),
            None => T::infinity(),
        };
        let (x, _) = nelder_mead(neg_ei, &x0, &step, options.evals_per_start, T::lit(1e-10));
        let Some(p) = ctx.project(&x) else { continue };
        let v = ei_at(&p);
        if best.as_ref().is_none_or(|(_, bv)| v > *bv) {
            best = Some((p, v));
        }
    }
    Ok(best.unwrap_or_else(|| {
        let corner = ctx.domain.farthest_corner(&ctx.exclusion_center);
        let v = ei_at(&corner);
        (corner, v)
    }))
}
