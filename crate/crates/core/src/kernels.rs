//! Half-integer Matérn covariance functions and their derivative blocks.
//!
//! Every quantity is expressed through the radial profile `φ(r)` and the
//! scaled derivatives
//!
//! ```text
//! g1 = φ'(r) / r,   g2 = g1'(r) / r,   g3 = g2'(r) / r
//! ```
//!
//! which stay finite at `r = 0` (except `g3` for Matérn 5/2), so coincident
//! points need no special casing. With `u = x - x'`:
//!
//! ```text
//! ∂_i k          = σ² g1 u_i
//! ∂_i ∂_j k      = σ² (g1 δ_ij + g2 u_i u_j)
//! ∂_i ∂_j ∂_l k  = σ² (g2 (δ_ij u_l + δ_il u_j + δ_jl u_i) + g3 u_i u_j u_l)
//! ```
//!
//! Derivatives with respect to `x'` flip the sign of each factor.

use nalgebra::{DMatrix, DVector};

use crate::error::{LagoError, Result};
use crate::scalar::Scalar;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum KernelFamily {
    Matern52,
    Matern72,
}

impl KernelFamily {
    pub fn name(self) -> &'static str {
        match self {
            KernelFamily::Matern52 => "matern52",
            KernelFamily::Matern72 => "matern72",
        }
    }

    /// Whether third derivatives exist everywhere (needed for the Hessian of
    /// the posterior mean).
    pub fn has_third_derivatives(self) -> bool {
        matches!(self, KernelFamily::Matern72)
    }
}

impl std::str::FromStr for KernelFamily {
    type Err = LagoError;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "matern52" => Ok(KernelFamily::Matern52),
            "matern72" => Ok(KernelFamily::Matern72),
            other => Err(LagoError::Config(format!("unknown kernel family `{other}`"))),
        }
    }
}

/// Isotropic lengthscale and signal variance.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct KernelHyper<T> {
    pub lengthscale: T,
    /// Signal variance σ_f².
    pub scale: T,
}

impl<T: Scalar> KernelHyper<T> {
    pub fn new(lengthscale: T, scale: T) -> Result<Self> {
        if !(lengthscale > T::zero() && lengthscale.is_finite()) {
            return Err(LagoError::Config(format!("lengthscale must be positive, got {lengthscale}")));
        }
        if !(scale > T::zero() && scale.is_finite()) {
            return Err(LagoError::Config(format!("kernel scale must be positive, got {scale}")));
        }
        Ok(Self { lengthscale, scale })
    }
}

/// Radial profile and scaled derivatives at one distance, including σ².
#[derive(Debug, Clone, Copy)]
pub(crate) struct Radial<T> {
    pub phi: T,
    pub g1: T,
    pub g2: T,
    /// `None` when the family has no bounded third derivative at this distance.
    pub g3: Option<T>,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Kernel<T> {
    pub family: KernelFamily,
    pub hyper: KernelHyper<T>,
}

impl<T: Scalar> Kernel<T> {
    pub fn new(family: KernelFamily, hyper: KernelHyper<T>) -> Self {
        Self { family, hyper }
    }

    pub(crate) fn radial(&self, r: T) -> Radial<T> {
        let s2 = self.hyper.scale;
        let ell = self.hyper.lengthscale;
        match self.family {
            KernelFamily::Matern52 => {
                let a = T::lit(5.0).sqrt() / ell;
                let ar = a * r;
                let e = (-ar).exp();
                let a2 = a * a;
                let phi = (T::one() + ar + ar * ar / T::lit(3.0)) * e;
                let g1 = -(a2 / T::lit(3.0)) * (T::one() + ar) * e;
                let g2 = a2 * a2 / T::lit(3.0) * e;
                let g3 = if r > T::zero() { Some(-(a2 * a2 * a) / T::lit(3.0) * e / r) } else { None };
                Radial { phi: s2 * phi, g1: s2 * g1, g2: s2 * g2, g3: g3.map(|g| s2 * g) }
            }
            KernelFamily::Matern72 => {
                let a = T::lit(7.0).sqrt() / ell;
                let ar = a * r;
                let e = (-ar).exp();
                let a2 = a * a;
                let a4 = a2 * a2;
                let ar2 = ar * ar;
                let phi = (T::one() + ar + T::lit(0.4) * ar2 + ar2 * ar / T::lit(15.0)) * e;
                let g1 = -(a2 / T::lit(5.0)) * (T::one() + ar + ar2 / T::lit(3.0)) * e;
                let g2 = a4 / T::lit(15.0) * (T::one() + ar) * e;
                let g3 = -(a4 * a2) / T::lit(15.0) * e;
                Radial { phi: s2 * phi, g1: s2 * g1, g2: s2 * g2, g3: Some(s2 * g3) }
            }
        }
    }

    fn offset(x: &DVector<T>, xp: &DVector<T>) -> Result<(DVector<T>, T)> {
        if x.len() != xp.len() {
            return Err(LagoError::DimensionMismatch { expected: x.len(), got: xp.len() });
        }
        let u = x - xp;
        let r = u.norm();
        Ok((u, r))
    }

    /// `k(x, x')`.
    pub fn value(&self, x: &DVector<T>, xp: &DVector<T>) -> Result<T> {
        let (_, r) = Self::offset(x, xp)?;
        Ok(self.radial(r).phi)
    }

    /// The `(d+1)×(d+1)` covariance between `[f(x), ∇f(x)]` and `[f(x'), ∇f(x')]`.
    pub fn joint_block(&self, x: &DVector<T>, xp: &DVector<T>) -> Result<DMatrix<T>> {
        let (u, r) = Self::offset(x, xp)?;
        let d = u.len();
        let rad = self.radial(r);
        let mut b = DMatrix::zeros(d + 1, d + 1);
        b[(0, 0)] = rad.phi;
        for i in 0..d {
            b[(i + 1, 0)] = rad.g1 * u[i];
            b[(0, i + 1)] = -rad.g1 * u[i];
            for j in 0..d {
                let delta = if i == j { rad.g1 } else { T::zero() };
                b[(i + 1, j + 1)] = -(delta + rad.g2 * u[i] * u[j]);
            }
        }
        Ok(b)
    }

    /// Second derivatives in `x` of each entry of the first joint-block row
    /// `[k(x,x'), ∇_{x'}k(x,x')ᵀ]`. Entry `c` of the result is the `d×d`
    /// Hessian of row entry `c`.
    pub fn hessian_row(&self, x: &DVector<T>, xp: &DVector<T>) -> Result<Vec<DMatrix<T>>> {
        if !self.family.has_third_derivatives() {
            return Err(LagoError::UnsupportedSmoothness(self.family.name()));
        }
        let (u, r) = Self::offset(x, xp)?;
        let d = u.len();
        let rad = self.radial(r);
        let g3 = rad.g3.expect("Matérn 7/2 has bounded third derivatives");
        let mut out = Vec::with_capacity(d + 1);
        out.push(DMatrix::from_fn(d, d, |i, j| {
            let delta = if i == j { rad.g1 } else { T::zero() };
            delta + rad.g2 * u[i] * u[j]
        }));
        for l in 0..d {
            out.push(DMatrix::from_fn(d, d, |i, j| {
                let mut t = T::zero();
                if i == j {
                    t += u[l];
                }
                if i == l {
                    t += u[j];
                }
                if j == l {
                    t += u[i];
                }
                -(rad.g2 * t + g3 * u[i] * u[j] * u[l])
            }));
        }
        Ok(out)
    }
}

/// `k(x, x')` for the given family and hyperparameters.
pub fn kernel_value<T: Scalar>(
    x: &DVector<T>,
    xp: &DVector<T>,
    hyper: KernelHyper<T>,
    family: KernelFamily,
) -> Result<T> {
    Kernel::new(family, hyper).value(x, xp)
}

pub fn kernel_joint_block<T: Scalar>(
    x: &DVector<T>,
    xp: &DVector<T>,
    hyper: KernelHyper<T>,
    family: KernelFamily,
) -> Result<DMatrix<T>> {
    Kernel::new(family, hyper).joint_block(x, xp)
}

pub fn kernel_hessian_row<T: Scalar>(
    x: &DVector<T>,
    xp: &DVector<T>,
    hyper: KernelHyper<T>,
    family: KernelFamily,
) -> Result<Vec<DMatrix<T>>> {
    Kernel::new(family, hyper).hessian_row(x, xp)
}
