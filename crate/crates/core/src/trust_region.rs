//! SR1 trust-region machinery: exact subproblem solves, the guarded SR1
//! update, and the single accept/reject/resize step.

use nalgebra::{DMatrix, DVector, SymmetricEigen};

use crate::error::{LagoError, Result};
use crate::scalar::Scalar;

/// Radius growth applies when `ρ` exceeds this and the step reached the
/// outer part of the region.
pub const EXPAND_RATIO: f64 = 0.75;
pub const EXPAND_STEP_FRACTION: f64 = 0.8;
pub const SHRINK_RATIO: f64 = 0.1;

#[derive(Debug, Clone, PartialEq)]
pub struct TrustRegionState<T: Scalar> {
    pub center: DVector<T>,
    pub radius: T,
    pub max_radius: T,
    /// Symmetric, possibly indefinite, Hessian approximation.
    pub hessian: DMatrix<T>,
    pub f_center: T,
    pub grad_center: DVector<T>,
}

impl<T: Scalar> TrustRegionState<T> {
    pub fn new(
        center: DVector<T>,
        f_center: T,
        grad_center: DVector<T>,
        hessian: DMatrix<T>,
        radius: T,
        max_radius: T,
    ) -> Result<Self> {
        let d = center.len();
        if grad_center.len() != d {
            return Err(LagoError::DimensionMismatch { expected: d, got: grad_center.len() });
        }
        if hessian.nrows() != d || hessian.ncols() != d {
            return Err(LagoError::DimensionMismatch { expected: d, got: hessian.nrows() });
        }
        if !(radius > T::zero() && max_radius > T::zero()) {
            return Err(LagoError::Config("trust-region radii must be positive".into()));
        }
        Ok(Self { center, radius: radius.min(max_radius), max_radius, hessian, f_center, grad_center })
    }

    pub fn dim(&self) -> usize {
        self.center.len()
    }
}

/// `f(x_c) + ∇f(x_c)ᵀs + ½ sᵀHs`.
pub fn quadratic_model<T: Scalar>(state: &TrustRegionState<T>, s: &DVector<T>) -> T {
    state.f_center + state.grad_center.dot(s) + T::lit(0.5) * s.dot(&(&state.hessian * s))
}

#[derive(Debug, Clone, PartialEq)]
pub struct SubproblemSolution<T: Scalar> {
    pub step: DVector<T>,
    /// `m(0) - m(s)`, never negative.
    pub model_decrease: T,
    /// KKT multiplier of the norm constraint.
    pub lambda: T,
    pub hard_case: bool,
}

fn check_symmetric<T: Scalar>(h: &DMatrix<T>) -> Result<()> {
    if h.nrows() != h.ncols() {
        return Err(LagoError::DimensionMismatch { expected: h.nrows(), got: h.ncols() });
    }
    let scale = h.amax().max(T::one());
    let asym = (h - h.transpose()).amax();
    if asym > T::lit(1e-10) * scale {
        return Err(LagoError::NotSymmetric(asym.to_f64_lossy()));
    }
    Ok(())
}

/// Globally minimizes `gᵀs + ½ sᵀHs` subject to `‖s‖ ≤ Δ`.
///
/// Works in the eigenbasis of `H`: the multiplier solves the secular equation
/// `‖s(λ)‖ = Δ` for `λ ≥ max(0, -λ_min)` by safeguarded Newton iteration on
/// `1/‖s(λ)‖`. When the gradient has no component along the bottom
/// eigenspace and the shifted step stays inside the ball (the hard case), a
/// bottom eigenvector is added to reach the boundary; its sign is chosen so
/// the first nonzero coordinate of the added component is positive.
pub fn solve_subproblem<T: Scalar>(
    grad: &DVector<T>,
    hessian: &DMatrix<T>,
    radius: T,
) -> Result<SubproblemSolution<T>> {
    check_symmetric(hessian)?;
    let d = grad.len();
    if hessian.nrows() != d {
        return Err(LagoError::DimensionMismatch { expected: d, got: hessian.nrows() });
    }
    if !(radius > T::zero()) {
        return Err(LagoError::Config("trust-region radius must be positive".into()));
    }
    let sym = (hessian + hessian.transpose()) * T::lit(0.5);
    let eig = SymmetricEigen::new(sym.clone());
    let evals = eig.eigenvalues.clone();
    let q = eig.eigenvectors.clone();
    let coef = q.transpose() * grad;
    let gnorm = grad.norm();
    let hscale = evals.amax().max(T::one());

    let lambda_min = evals.iter().copied().fold(T::infinity(), |a, b| a.min(b));

    let step_for = |lambda: T, skip: &dyn Fn(usize) -> bool| -> DVector<T> {
        let mut s = DVector::zeros(d);
        for i in 0..d {
            if skip(i) {
                continue;
            }
            let den = evals[i] + lambda;
            s -= q.column(i) * (coef[i] / den);
        }
        s
    };
    let finish = |s: DVector<T>, lambda: T, hard_case: bool| -> SubproblemSolution<T> {
        let m = grad.dot(&s) + T::lit(0.5) * s.dot(&(&sym * &s));
        SubproblemSolution { model_decrease: (-m).max(T::zero()), step: s, lambda, hard_case }
    };

    if gnorm == T::zero() && lambda_min >= T::zero() {
        return Ok(finish(DVector::zeros(d), T::zero(), false));
    }

    // Interior Newton step.
    if lambda_min > T::zero() {
        let s = step_for(T::zero(), &|_| false);
        if s.norm() <= radius {
            return Ok(finish(s, T::zero(), false));
        }
    }

    let lo = (-lambda_min).max(T::zero());
    let eig_tol = T::lit(1e-10) * hscale;
    let coef_tol = T::lit(1e-12) * gnorm.max(T::lit(1e-300).max(T::epsilon()));
    let bottom: Vec<usize> = (0..d).filter(|&i| evals[i] - lambda_min <= eig_tol).collect();

    if lambda_min <= T::zero() && bottom.iter().all(|&i| coef[i].abs() <= coef_tol) {
        let in_bottom = |i: usize| bottom.contains(&i);
        let s_rest = step_for(lo, &in_bottom);
        let rest_norm = s_rest.norm();
        if rest_norm <= radius {
            let tau = (radius * radius - rest_norm * rest_norm).max(T::zero()).sqrt();
            let mut z: DVector<T> = q.column(bottom[0]).into_owned();
            if let Some(first) = z.iter().copied().find(|v| v.abs() > T::lit(1e-14)) {
                if first < T::zero() {
                    z = -z;
                }
            }
            return Ok(finish(s_rest + z * tau, lo, true));
        }
    }

    // Secular equation on φ(λ) = 1/‖s(λ)‖ - 1/Δ, increasing in λ.
    let norm_and_slope = |lambda: T| -> (T, T) {
        let mut n2 = T::zero();
        let mut dn2 = T::zero();
        for i in 0..d {
            let den = evals[i] + lambda;
            let t = coef[i] / den;
            n2 += t * t;
            dn2 += t * t / den;
        }
        // d‖s‖/dλ = -Σ c²/(λ_i+λ)³ / ‖s‖
        let n = n2.sqrt();
        (n, -dn2 / n)
    };
    let mut a = lo;
    let mut b = lo + gnorm / radius;
    if b <= a {
        b = a + T::one();
    }
    let mut lambda = b;
    let inv_r = T::one() / radius;
    for _ in 0..200 {
        let (n, dn) = norm_and_slope(lambda);
        if !n.is_finite() || n > radius {
            a = lambda;
        } else {
            b = lambda;
        }
        if n.is_finite() && (n - radius).abs() <= T::lit(1e-14) * radius {
            break;
        }
        if b - a <= T::epsilon() * b.abs().max(T::one()) * T::lit(4.0) {
            break;
        }
        let mut next = T::nan();
        if n.is_finite() && n > T::zero() {
            let phi = T::one() / n - inv_r;
            let dphi = -dn / (n * n);
            if dphi > T::zero() {
                next = lambda - phi / dphi;
            }
        }
        if !(next > a && next < b) {
            next = (a + b) * T::lit(0.5);
        }
        lambda = next;
    }
    let s = step_for(lambda, &|_| false);
    Ok(finish(s, lambda, false))
}

/// KKT residuals of a subproblem solution, for verification.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct KktReport<T> {
    /// `‖(H + λI)s + g‖`.
    pub stationarity: T,
    /// `λ (Δ - ‖s‖)`.
    pub complementarity: T,
    /// `max(0, ‖s‖ - Δ)`.
    pub feasibility: T,
    /// Smallest eigenvalue of `H + λI`.
    pub min_shifted_eigenvalue: T,
}

pub fn kkt_report<T: Scalar>(
    grad: &DVector<T>,
    hessian: &DMatrix<T>,
    radius: T,
    sol: &SubproblemSolution<T>,
) -> KktReport<T> {
    let d = grad.len();
    let shifted = hessian + DMatrix::identity(d, d) * sol.lambda;
    let stationarity = (&shifted * &sol.step + grad).norm();
    let snorm = sol.step.norm();
    let min_eig = SymmetricEigen::new(shifted).eigenvalues.iter().copied().fold(T::infinity(), |a, b| a.min(b));
    KktReport {
        stationarity,
        complementarity: (sol.lambda * (radius - snorm)).abs(),
        feasibility: (snorm - radius).max(T::zero()),
        min_shifted_eigenvalue: min_eig,
    }
}

/// Rank-one update `H + v vᵀ / (vᵀs)` with `v = y - Hs`, skipped unless
/// `|vᵀs| ≥ r ‖s‖ ‖v‖` holds with a nonzero denominator.
pub fn sr1_update<T: Scalar>(hessian: &DMatrix<T>, s: &DVector<T>, y: &DVector<T>, r: T) -> (DMatrix<T>, bool) {
    let v = y - hessian * s;
    let den = v.dot(s);
    if den == T::zero() || den.abs() < r * s.norm() * v.norm() {
        return (hessian.clone(), false);
    }
    let d = s.len();
    let mut h = hessian.clone();
    for i in 0..d {
        for j in 0..d {
            h[(i, j)] += v[i] * v[j] / den;
        }
    }
    (h, true)
}

/// `(f_old - f_trial) / model_decrease`, with a sign-preserving infinite
/// sentinel when the predicted decrease vanishes.
pub fn improvement_ratio<T: Scalar>(f_old: T, f_trial: T, model_decrease: T) -> T {
    let num = f_old - f_trial;
    if model_decrease.abs() < T::lit(1e-14) {
        return if num > T::zero() { T::infinity() } else { T::neg_infinity() };
    }
    num / model_decrease
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrStepOutcome<T: Scalar> {
    pub accepted: bool,
    pub new_state: TrustRegionState<T>,
    pub trial_point: DVector<T>,
    pub rho: T,
    pub step_norm: T,
    pub hessian_updated: bool,
}

/// One step of the SR1 trust-region method given the evaluated trial point.
///
/// The SR1 update uses the trial gradient whether or not the step is accepted.
pub fn tr_step<T: Scalar>(
    state: &TrustRegionState<T>,
    f_trial: T,
    grad_trial: &DVector<T>,
    s: &DVector<T>,
    model_decrease: T,
    eta: T,
    r: T,
) -> TrStepOutcome<T> {
    let rho = improvement_ratio(state.f_center, f_trial, model_decrease);
    let accepted = rho > eta;
    let step_norm = s.norm();
    let trial_point = &state.center + s;

    let radius = if rho > T::lit(EXPAND_RATIO) && step_norm > T::lit(EXPAND_STEP_FRACTION) * state.radius {
        (state.radius * T::lit(2.0)).min(state.max_radius)
    } else if rho < T::lit(SHRINK_RATIO) {
        state.radius * T::lit(0.5)
    } else {
        state.radius
    };

    let y = grad_trial - &state.grad_center;
    let (hessian, hessian_updated) = sr1_update(&state.hessian, s, &y, r);

    let new_state = if accepted {
        TrustRegionState {
            center: trial_point.clone(),
            radius,
            max_radius: state.max_radius,
            hessian,
            f_center: f_trial,
            grad_center: grad_trial.clone(),
        }
    } else {
        TrustRegionState { radius, hessian, ..state.clone() }
    };
    TrStepOutcome { accepted, new_state, trial_point, rho, step_norm, hessian_updated }
}
