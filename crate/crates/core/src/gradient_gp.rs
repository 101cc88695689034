//! Gaussian-process regression conditioned jointly on function values and
//! gradients.
//!
//! Observations are stacked point by point as `[f(x_i), ∇f(x_i)]`, giving a
//! kernel matrix of `n` blocks of size `d + 1`. With gradient channels switched
//! off each point contributes a single row, which recovers ordinary GP
//! regression on values only.
//!
//! The nugget is expressed relative to the signal variance, so the regularized
//! matrix is `K + σ_n² σ_f² I`. This keeps the conditioning independent of the
//! output scale and lets the signal variance be profiled out of the likelihood.

use log::warn;
use nalgebra::{Cholesky, DMatrix, DVector, SymmetricEigen};

use crate::error::{LagoError, Result};
use crate::kernels::{Kernel, KernelFamily, KernelHyper};
use crate::scalar::Scalar;

/// One evaluated point with its value and gradient.
#[derive(Debug, Clone, PartialEq)]
pub struct Observation<T> {
    pub x: DVector<T>,
    pub f: T,
    pub grad: DVector<T>,
    /// Order in which the point was acquired during a run.
    pub eval_index: usize,
}

impl<T: Scalar> Observation<T> {
    pub fn new(x: DVector<T>, f: T, grad: DVector<T>, eval_index: usize) -> Self {
        Self { x, f, grad, eval_index }
    }

    pub fn dim(&self) -> usize {
        self.x.len()
    }

    pub fn is_finite(&self) -> bool {
        self.f.is_finite() && self.grad.iter().all(|g| g.is_finite()) && self.x.iter().all(|v| v.is_finite())
    }
}

/// Everything that defines the prior, independent of the data.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GpPrior<T> {
    pub family: KernelFamily,
    pub hyper: KernelHyper<T>,
    /// Diagonal regularization relative to the signal variance.
    pub nugget: T,
    /// Constant prior mean of `f`; the gradient prior mean is zero.
    pub mean: T,
    /// Condition on gradients as well as values.
    pub use_gradients: bool,
}

impl<T: Scalar> GpPrior<T> {
    pub fn new(family: KernelFamily, hyper: KernelHyper<T>) -> Self {
        Self { family, hyper, nugget: T::lit(1e-9), mean: T::zero(), use_gradients: true }
    }

    pub fn with_nugget(mut self, nugget: T) -> Self {
        self.nugget = nugget;
        self
    }

    pub fn with_mean(mut self, mean: T) -> Self {
        self.mean = mean;
        self
    }

    pub fn with_gradients(mut self, use_gradients: bool) -> Self {
        self.use_gradients = use_gradients;
        self
    }

    pub fn with_hyper(mut self, hyper: KernelHyper<T>) -> Self {
        self.hyper = hyper;
        self
    }

    pub fn kernel(&self) -> Kernel<T> {
        Kernel::new(self.family, self.hyper)
    }

    fn block_size(&self, d: usize) -> usize {
        if self.use_gradients {
            d + 1
        } else {
            1
        }
    }
}

/// Posterior moments of `f` at one point.
#[derive(Debug, Clone, PartialEq)]
pub struct PosteriorQuery<T> {
    pub mean: T,
    pub variance: T,
    pub mean_grad: Option<DVector<T>>,
    pub mean_hessian: Option<DMatrix<T>>,
}

impl<T: Scalar> PosteriorQuery<T> {
    pub fn std(&self) -> T {
        self.variance.sqrt()
    }
}

/// A conditioned gradient-enhanced GP. Immutable; conditioning produces a new
/// value.
#[derive(Debug, Clone)]
pub struct GradientGp<T: Scalar> {
    prior: GpPrior<T>,
    dim: usize,
    points: Vec<DVector<T>>,
    k_tilde: DMatrix<T>,
    chol_l: DMatrix<T>,
    alpha: DVector<T>,
    log_det: T,
    residual: DVector<T>,
}

fn check_dataset<T: Scalar>(data: &[Observation<T>]) -> Result<usize> {
    let first = data.first().ok_or(LagoError::EmptyDataset)?;
    let d = first.dim();
    for obs in data {
        if obs.x.len() != d {
            return Err(LagoError::DimensionMismatch { expected: d, got: obs.x.len() });
        }
        if obs.grad.len() != d {
            return Err(LagoError::DimensionMismatch { expected: d, got: obs.grad.len() });
        }
    }
    Ok(d)
}

/// Stacked kernel matrix with the relative nugget on the diagonal.
fn assemble<T: Scalar>(prior: &GpPrior<T>, data: &[Observation<T>], d: usize) -> DMatrix<T> {
    let b = prior.block_size(d);
    let n = data.len();
    let kernel = prior.kernel();
    let mut k = DMatrix::zeros(n * b, n * b);
    for i in 0..n {
        for j in 0..=i {
            let u = &data[i].x - &data[j].x;
            let rad = kernel.radial(u.norm());
            let (ri, rj) = (i * b, j * b);
            k[(ri, rj)] = rad.phi;
            if prior.use_gradients {
                for p in 0..d {
                    k[(ri + 1 + p, rj)] = rad.g1 * u[p];
                    k[(ri, rj + 1 + p)] = -rad.g1 * u[p];
                    for q in 0..d {
                        let delta = if p == q { rad.g1 } else { T::zero() };
                        k[(ri + 1 + p, rj + 1 + q)] = -(delta + rad.g2 * u[p] * u[q]);
                    }
                }
            }
            if i != j {
                for p in 0..b {
                    for q in 0..b {
                        k[(rj + q, ri + p)] = k[(ri + p, rj + q)];
                    }
                }
            }
        }
    }
    let jitter = prior.nugget * prior.hyper.scale;
    for i in 0..n * b {
        k[(i, i)] += jitter;
    }
    k
}

fn residual_vector<T: Scalar>(prior: &GpPrior<T>, data: &[Observation<T>], d: usize) -> DVector<T> {
    let b = prior.block_size(d);
    let mut r = DVector::zeros(data.len() * b);
    for (i, obs) in data.iter().enumerate() {
        r[i * b] = obs.f - prior.mean;
        if prior.use_gradients {
            for p in 0..d {
                r[i * b + 1 + p] = obs.grad[p];
            }
        }
    }
    r
}

/// 2-norm condition number of a symmetric matrix; `+∞` when singular or
/// indefinite.
pub fn symmetric_condition_number<T: Scalar>(m: &DMatrix<T>) -> T {
    if m.nrows() == 0 {
        return T::one();
    }
    let eig = SymmetricEigen::new(m.clone()).eigenvalues;
    let mut lo = T::infinity();
    let mut hi = T::zero();
    for &ev in eig.iter() {
        if !ev.is_finite() {
            return T::infinity();
        }
        lo = lo.min(ev);
        hi = hi.max(ev.abs());
    }
    if lo <= T::zero() {
        T::infinity()
    } else {
        hi / lo
    }
}

impl<T: Scalar> GradientGp<T> {
    /// Conditions the prior on `data`.
    pub fn condition(prior: GpPrior<T>, data: &[Observation<T>]) -> Result<Self> {
        let dim = check_dataset(data)?;
        let k_tilde = assemble(&prior, data, dim);
        let residual = residual_vector(&prior, data, dim);
        let chol = match Cholesky::new(k_tilde.clone()) {
            Some(c) => c,
            None => {
                let condition = symmetric_condition_number(&k_tilde).to_f64_lossy();
                return Err(LagoError::IllConditioned { condition });
            }
        };
        let alpha = chol.solve(&residual);
        if alpha.iter().any(|a| !a.is_finite()) {
            let condition = symmetric_condition_number(&k_tilde).to_f64_lossy();
            return Err(LagoError::IllConditioned { condition });
        }
        let chol_l = chol.unpack();
        let log_det = chol_l.diagonal().iter().fold(T::zero(), |acc, v| acc + v.ln()) * T::lit(2.0);
        Ok(Self {
            prior,
            dim,
            points: data.iter().map(|o| o.x.clone()).collect(),
            k_tilde,
            chol_l,
            alpha,
            log_det,
            residual,
        })
    }

    /// Conditions a copy of this model's prior on a new dataset.
    pub fn recondition(&self, data: &[Observation<T>]) -> Result<Self> {
        Self::condition(self.prior, data)
    }

    pub fn prior(&self) -> &GpPrior<T> {
        &self.prior
    }

    pub fn hyper(&self) -> KernelHyper<T> {
        self.prior.hyper
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    /// The regularized kernel matrix the model was factorized from.
    pub fn kernel_matrix(&self) -> &DMatrix<T> {
        &self.k_tilde
    }

    fn block(&self) -> usize {
        self.prior.block_size(self.dim)
    }

    /// Covariance between `f(x)` and every stacked observation.
    fn cross_row(&self, x: &DVector<T>) -> DVector<T> {
        let b = self.block();
        let kernel = self.prior.kernel();
        let mut row = DVector::zeros(self.points.len() * b);
        for (j, xj) in self.points.iter().enumerate() {
            let u = x - xj;
            let rad = kernel.radial(u.norm());
            row[j * b] = rad.phi;
            if self.prior.use_gradients {
                for p in 0..self.dim {
                    row[j * b + 1 + p] = -rad.g1 * u[p];
                }
            }
        }
        row
    }

    fn check_point(&self, x: &DVector<T>) -> Result<()> {
        if x.len() != self.dim {
            return Err(LagoError::DimensionMismatch { expected: self.dim, got: x.len() });
        }
        Ok(())
    }

    /// Posterior mean and standard deviation of `f(x)`; the hot path of
    /// acquisition maximization.
    pub fn mean_std(&self, x: &DVector<T>) -> (T, T) {
        let mut row = self.cross_row(x);
        let mean = self.prior.mean + row.dot(&self.alpha);
        self.chol_l.solve_lower_triangular_mut(&mut row);
        let var = (self.prior.hyper.scale - row.norm_squared()).max(T::zero());
        (mean, var.sqrt())
    }

    pub fn mean(&self, x: &DVector<T>) -> T {
        self.prior.mean + self.cross_row(x).dot(&self.alpha)
    }

    pub fn posterior(&self, x: &DVector<T>, want_grad: bool, want_hessian: bool) -> Result<PosteriorQuery<T>> {
        self.check_point(x)?;
        if want_hessian && !self.prior.family.has_third_derivatives() {
            return Err(LagoError::UnsupportedSmoothness(self.prior.family.name()));
        }
        let (mean, std) = self.mean_std(x);
        let d = self.dim;
        let b = self.block();
        let kernel = self.prior.kernel();

        let mean_grad = want_grad.then(|| {
            let mut g = DVector::zeros(d);
            for (j, xj) in self.points.iter().enumerate() {
                let u = x - xj;
                let rad = kernel.radial(u.norm());
                let a0 = self.alpha[j * b];
                for p in 0..d {
                    g[p] += rad.g1 * u[p] * a0;
                }
                if self.prior.use_gradients {
                    // ∂_{x_p} of -g1 u_q is -(g1 δ_pq + g2 u_p u_q).
                    let mut ua = T::zero();
                    for q in 0..d {
                        ua += u[q] * self.alpha[j * b + 1 + q];
                    }
                    for p in 0..d {
                        g[p] -= rad.g1 * self.alpha[j * b + 1 + p] + rad.g2 * u[p] * ua;
                    }
                }
            }
            g
        });

        let mean_hessian = if want_hessian {
            let mut h = DMatrix::zeros(d, d);
            for (j, xj) in self.points.iter().enumerate() {
                let rows = kernel.hessian_row(x, xj)?;
                let channels = if self.prior.use_gradients { d + 1 } else { 1 };
                for (c, m) in rows.iter().take(channels).enumerate() {
                    h += m * self.alpha[j * b + c];
                }
            }
            // Symmetrize away round-off.
            let ht = h.transpose();
            Some((h + ht) * T::lit(0.5))
        } else {
            None
        };

        Ok(PosteriorQuery { mean, variance: std * std, mean_grad, mean_hessian })
    }

    /// Spectral condition number of the regularized kernel matrix.
    pub fn condition_number(&self) -> T {
        symmetric_condition_number(&self.k_tilde)
    }

    /// Negative log marginal likelihood of the conditioned data under this
    /// model's own hyperparameters.
    pub fn neg_log_marginal_likelihood(&self) -> T {
        let n = T::from_usize_lossy(self.residual.len());
        T::lit(0.5) * self.residual.dot(&self.alpha) + T::lit(0.5) * self.log_det + T::lit(0.5) * n * T::two_pi().ln()
    }
}

/// Negative log marginal likelihood of `data` under `prior` with its
/// hyperparameters replaced by `hyper`. Returns `+∞` when the kernel matrix
/// cannot be factorized.
pub fn neg_log_marginal_likelihood<T: Scalar>(prior: &GpPrior<T>, data: &[Observation<T>], hyper: KernelHyper<T>) -> T {
    match GradientGp::condition(prior.with_hyper(hyper), data) {
        Ok(gp) => {
            let v = gp.neg_log_marginal_likelihood();
            if v.is_finite() {
                v
            } else {
                T::infinity()
            }
        }
        Err(_) => T::infinity(),
    }
}

/// Box (in log space) searched by [`fit_hyperparameters`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HyperBounds<T> {
    pub lengthscale: (T, T),
    pub scale: (T, T),
}

impl<T: Scalar> HyperBounds<T> {
    /// `ℓ ∈ [10⁻², 10¹]·diagonal`, `σ_f² ∈ [10⁻⁴, 10⁶]·var(f)`.
    pub fn from_data(domain_diagonal: T, data: &[Observation<T>]) -> Self {
        let var = empirical_variance(data);
        let var = if var > T::zero() && var.is_finite() { var } else { T::one() };
        Self {
            lengthscale: (T::lit(1e-2) * domain_diagonal, T::lit(10.0) * domain_diagonal),
            scale: (T::lit(1e-4) * var, T::lit(1e6) * var),
        }
    }
}

fn empirical_variance<T: Scalar>(data: &[Observation<T>]) -> T {
    if data.is_empty() {
        return T::zero();
    }
    let n = T::from_usize_lossy(data.len());
    let mean = data.iter().fold(T::zero(), |acc, o| acc + o.f) / n;
    data.iter().fold(T::zero(), |acc, o| acc + (o.f - mean) * (o.f - mean)) / n
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HyperFit<T> {
    pub hyper: KernelHyper<T>,
    pub nlml: T,
    /// True when every candidate failed and the input hyperparameters were kept.
    pub kept_previous: bool,
}

const FIT_STARTS: usize = 8;
const GOLDEN_ITERS: usize = 30;

/// Profiled objective for one lengthscale: the signal variance is set to its
/// closed-form optimum (clamped to the bounds). Returns `(nlml, σ_f²)`.
fn profiled_nlml<T: Scalar>(
    prior: &GpPrior<T>,
    data: &[Observation<T>],
    bounds: &HyperBounds<T>,
    log_ell: T,
) -> (T, T) {
    let unit = match KernelHyper::new(log_ell.exp(), T::one()) {
        Ok(h) => h,
        Err(_) => return (T::infinity(), T::one()),
    };
    let gp = match GradientGp::condition(prior.with_hyper(unit), data) {
        Ok(gp) => gp,
        Err(_) => return (T::infinity(), T::one()),
    };
    let n = T::from_usize_lossy(gp.residual.len());
    let quad = gp.residual.dot(&gp.alpha);
    let scale = (quad / n).max(bounds.scale.0).min(bounds.scale.1);
    let half = T::lit(0.5);
    let v = half * quad / scale + half * n * scale.ln() + half * gp.log_det + half * n * T::two_pi().ln();
    if v.is_finite() {
        (v, scale)
    } else {
        (T::infinity(), scale)
    }
}

/// Maximum-likelihood lengthscale and signal variance.
///
/// The signal variance is profiled out analytically, leaving a one-dimensional
/// search over `log ℓ`: evenly spaced starts across the bounds, followed by a
/// golden-section refinement of the bracket around the best start.
pub fn fit_hyperparameters<T: Scalar>(
    prior: &GpPrior<T>,
    data: &[Observation<T>],
    bounds: &HyperBounds<T>,
) -> Result<HyperFit<T>> {
    check_dataset(data)?;
    let lo = bounds.lengthscale.0.ln();
    let hi = bounds.lengthscale.1.ln();
    let step = (hi - lo) / T::from_usize_lossy(FIT_STARTS - 1);
    let grid: Vec<T> = (0..FIT_STARTS).map(|i| lo + step * T::from_usize_lossy(i)).collect();
    let values: Vec<(T, T)> = grid.iter().map(|&g| profiled_nlml(prior, data, bounds, g)).collect();

    let mut best = None;
    for (i, (v, _)) in values.iter().enumerate() {
        if v.is_finite() && best.is_none_or(|b: usize| *v < values[b].0) {
            best = Some(i);
        }
    }
    let Some(best) = best else {
        warn!("hyperparameter fit failed at every start; keeping previous values");
        return Ok(HyperFit {
            hyper: prior.hyper,
            nlml: neg_log_marginal_likelihood(prior, data, prior.hyper),
            kept_previous: true,
        });
    };

    let mut best_point = (grid[best], values[best].0, values[best].1);
    let mut a = if best == 0 { grid[0] } else { grid[best - 1] };
    let mut b = if best + 1 == FIT_STARTS { grid[FIT_STARTS - 1] } else { grid[best + 1] };
    let inv_phi = T::lit((5f64.sqrt() - 1.0) / 2.0);
    let mut c = b - inv_phi * (b - a);
    let mut e = a + inv_phi * (b - a);
    let mut fc = profiled_nlml(prior, data, bounds, c);
    let mut fe = profiled_nlml(prior, data, bounds, e);
    for _ in 0..GOLDEN_ITERS {
        if fc.0 < fe.0 {
            b = e;
            e = c;
            fe = fc;
            c = b - inv_phi * (b - a);
            fc = profiled_nlml(prior, data, bounds, c);
        } else {
            a = c;
            c = e;
            fc = fe;
            e = a + inv_phi * (b - a);
            fe = profiled_nlml(prior, data, bounds, e);
        }
    }
    for (x, (v, s)) in [(c, fc), (e, fe)] {
        if v < best_point.1 {
            best_point = (x, v, s);
        }
    }
    let hyper = KernelHyper::new(best_point.0.exp(), best_point.2)?;
    Ok(HyperFit { hyper, nlml: best_point.1, kept_previous: false })
}
