//! Derivative-aware local–global optimization: gradient-enhanced Bayesian
//! optimization competing, one evaluation per iteration, with an SR1 trust
//! region.
//!
//! All numerics are generic over [`Scalar`] (`f32` or `f64`); the aliases at
//! the crate root fix the scalar to `f64`, which is what the experiments use.

// `!(a < b)` is used on purpose: it also rejects NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod acquisition;
pub mod domain;
pub mod driver;
pub mod error;
pub mod gradient_gp;
pub mod kernels;
pub mod pde;
pub mod problems;
pub mod scalar;
pub mod search;
pub mod trust_region;

pub use acquisition::{expected_improvement, maximize_outside_ball, AcquisitionContext, AcquisitionOptions};
pub use domain::Bounds;
pub use driver::{run, IterationRecord, Lago, LagoConfig, LagoState, Mode, Proposal, RunResult, StopReason};
pub use error::{LagoError, Result};
pub use gradient_gp::{GpPrior, GradientGp, Observation, PosteriorQuery};
pub use kernels::{Kernel, KernelFamily, KernelHyper};
pub use pde::PdeProblem;
pub use problems::{build_problem, make_problem, EvaluationLedger, Problem, SyntheticProblem};
pub use scalar::Scalar;
pub use trust_region::{TrStepOutcome, TrustRegionState};

pub type Gp = GradientGp<f64>;
pub type Gp32 = GradientGp<f32>;
pub type Config = LagoConfig<f64>;
pub type Config32 = LagoConfig<f32>;
pub type State = LagoState<f64>;
pub type Record = IterationRecord<f64>;
pub type Outcome = RunResult<f64>;
pub type Box64 = Bounds<f64>;
pub type Obs = Observation<f64>;
pub type Hyper = KernelHyper<f64>;
pub type TrState = TrustRegionState<f64>;
pub type Benchmark = SyntheticProblem<f64>;
pub type Pde = PdeProblem<f64>;
