//! The local–global optimization loop.
//!
//! Each iteration proposes a global candidate (EI maximized outside the
//! trust-region ball) and a local candidate (the trust-region subproblem
//! step), evaluates exactly one of them, and conditions the GP on the filtered
//! active set. The trust region always sits on the incumbent.

use log::{debug, warn};
use nalgebra::{DMatrix, DVector};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::acquisition::{maximize_outside_ball, AcquisitionContext, AcquisitionOptions};
use crate::error::{LagoError, Result};
use crate::gradient_gp::{fit_hyperparameters, GpPrior, GradientGp, HyperBounds, Observation};
use crate::kernels::{KernelFamily, KernelHyper};
use crate::problems::{latin_hypercube, EvaluationLedger, Problem};
use crate::scalar::Scalar;
use crate::search::nelder_mead;
use crate::trust_region::{solve_subproblem, tr_step, TrustRegionState};

/// Algorithm variant. The two BO variants are degenerate configurations: no
/// trust region, EI maximized over the whole domain.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Mode {
    Lago,
    /// Gradient-enhanced BO.
    GradBo,
    /// Value-only BO; gradients are neither modelled nor charged.
    Bo,
}

impl Mode {
    pub fn name(self) -> &'static str {
        match self {
            Mode::Lago => "lago",
            Mode::GradBo => "gradbo",
            Mode::Bo => "bo",
        }
    }

    pub fn default_kernel(self) -> KernelFamily {
        match self {
            Mode::Lago => KernelFamily::Matern72,
            Mode::GradBo | Mode::Bo => KernelFamily::Matern52,
        }
    }
}

impl std::str::FromStr for Mode {
    type Err = LagoError;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "lago" => Ok(Mode::Lago),
            "gradbo" => Ok(Mode::GradBo),
            "bo" => Ok(Mode::Bo),
            other => Err(LagoError::Config(format!("unknown mode `{other}` (expected lago, gradbo or bo)"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct LagoConfig<T> {
    pub mode: Mode,
    /// Weight on the predicted local improvement in the selection rule.
    pub gamma: T,
    /// Filter radius in lengthscales.
    pub nu: T,
    /// Consecutive low-EI global candidates required before stopping.
    pub stop_window: usize,
    pub eps_t: T,
    pub eps_step: T,
    pub eta: T,
    pub sr1_r: T,
    /// `None`: half the fitted lengthscale.
    pub initial_radius: Option<T>,
    /// `None`: half the domain diagonal.
    pub max_radius: Option<T>,
    pub refit_period: usize,
    /// Evaluation units; `None`: `210 d`.
    pub budget: Option<usize>,
    /// Units per gradient; `None`: the problem's default.
    pub gradient_cost: Option<usize>,
    /// `None`: `5 d`.
    pub design_size: Option<usize>,
    /// `None`: Matérn 7/2 for LAGO, Matérn 5/2 otherwise.
    pub kernel: Option<KernelFamily>,
    pub nugget: T,
    pub seed: u64,
    pub acquisition: AcquisitionOptions,
    pub early_stop: bool,
    /// Record the kernel condition number every iteration.
    pub track_condition: bool,
}

impl<T: Scalar> Default for LagoConfig<T> {
    fn default() -> Self {
        Self {
            mode: Mode::Lago,
            gamma: T::one(),
            nu: T::lit(0.1),
            stop_window: 5,
            eps_t: T::lit(1e-12),
            eps_step: T::lit(1e-7),
            eta: T::lit(5e-4),
            sr1_r: T::lit(1e-8),
            initial_radius: None,
            max_radius: None,
            refit_period: 10,
            budget: None,
            gradient_cost: None,
            design_size: None,
            kernel: None,
            nugget: T::lit(1e-9),
            seed: 0,
            acquisition: AcquisitionOptions::default(),
            early_stop: true,
            track_condition: false,
        }
    }
}

impl<T: Scalar> LagoConfig<T> {
    pub fn kernel_family(&self) -> KernelFamily {
        self.kernel.unwrap_or_else(|| self.mode.default_kernel())
    }

    pub fn budget_for(&self, d: usize) -> usize {
        self.budget.unwrap_or(210 * d)
    }

    pub fn design_size_for(&self, d: usize) -> usize {
        self.design_size.unwrap_or(5 * d)
    }

    /// Units charged per evaluation in this mode.
    pub fn evaluation_cost<P: Problem<T> + ?Sized>(&self, problem: &P) -> usize {
        match self.mode {
            Mode::Bo => 1,
            Mode::Lago | Mode::GradBo => 1 + self.gradient_cost.unwrap_or_else(|| problem.default_gradient_cost()),
        }
    }

    fn validate(&self) -> Result<()> {
        let bad = |m: &str| Err(LagoError::Config(m.to_string()));
        if !(self.gamma > T::zero()) {
            return bad("gamma must be positive");
        }
        if !(self.nu >= T::zero()) {
            return bad("nu must be nonnegative");
        }
        if self.stop_window == 0 || self.refit_period == 0 {
            return bad("stop window and refit period must be positive");
        }
        if !(self.eps_t > T::zero() && self.eps_step > T::zero() && self.eta > T::zero() && self.sr1_r > T::zero()) {
            return bad("thresholds must be positive");
        }
        if !(self.nugget >= T::zero()) {
            return bad("nugget must be nonnegative");
        }
        if self.mode == Mode::Lago && !self.kernel_family().has_third_derivatives() {
            return bad("the trust-region Hessian initialization needs a Matérn 7/2 kernel");
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Proposal {
    Global,
    Local,
    /// The trust region had converged; its radius was reset and the global
    /// candidate evaluated.
    TrTerminatedGlobal,
}

impl Proposal {
    pub fn name(self) -> &'static str {
        match self {
            Proposal::Global => "global",
            Proposal::Local => "local",
            Proposal::TrTerminatedGlobal => "tr-terminated-global",
        }
    }
}

impl std::str::FromStr for Proposal {
    type Err = LagoError;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "global" => Ok(Proposal::Global),
            "local" => Ok(Proposal::Local),
            "tr-terminated-global" => Ok(Proposal::TrTerminatedGlobal),
            other => Err(LagoError::Config(format!("unknown proposal `{other}`"))),
        }
    }
}

/// What happened in one iteration; exactly one evaluation each.
#[derive(Debug, Clone, PartialEq)]
pub struct IterationRecord<T: Scalar> {
    pub iteration: usize,
    pub choice: Proposal,
    pub ei: T,
    /// Predicted local improvement `f(x_c) - m(s)`; zero without a trust region.
    pub local_improvement: T,
    pub x: DVector<T>,
    pub f: T,
    /// Trust-region radius after the iteration; NaN without a trust region.
    pub radius: T,
    pub lengthscale: T,
    /// Kernel-matrix condition number of the model that made this
    /// iteration's proposals, i.e. before the new point was assimilated.
    pub condition: Option<T>,
    /// Cumulative evaluation units after this iteration.
    pub cost: usize,
    /// Local steps only.
    pub accepted: Option<bool>,
    /// Archive points excluded by the lengthscale filter when it was applied
    /// this iteration.
    pub filter_removed: usize,
    pub active_size: usize,
    pub f_best: T,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum StopReason {
    Budget,
    EarlyStop,
}

/// Mutable state of a run.
#[derive(Debug, Clone)]
pub struct LagoState<T: Scalar> {
    /// Every evaluation ever made, in order.
    pub archive: Vec<Observation<T>>,
    /// Indices into `archive` of the points conditioning the GP.
    pub active: Vec<usize>,
    pub tr: Option<TrustRegionState<T>>,
    /// Index into `archive` of the trust-region center.
    pub center_index: Option<usize>,
    /// Set when the last accepted local step was shorter than `eps_step`.
    pub tr_converged: bool,
    pub gp: GradientGp<T>,
    pub best_index: usize,
    pub ledger: EvaluationLedger<T>,
    pub consecutive_low_ei: usize,
    pub last_local_improvement: Option<T>,
    pub iteration: usize,
    pub stop: Option<StopReason>,
}

impl<T: Scalar> LagoState<T> {
    pub fn f_best(&self) -> T {
        self.archive[self.best_index].f
    }

    pub fn x_best(&self) -> &DVector<T> {
        &self.archive[self.best_index].x
    }

    pub fn active_observations(&self) -> Vec<Observation<T>> {
        self.active.iter().map(|&i| self.archive[i].clone()).collect()
    }
}

/// `Global` iff `ei > γ I_t`; ties go local.
pub fn select<T: Scalar>(ei: T, local_improvement: T, gamma: T) -> Proposal {
    if ei > gamma * local_improvement {
        Proposal::Global
    } else {
        Proposal::Local
    }
}

/// Indices of `archive` kept by the lengthscale filter around
/// `archive[center]`: the center itself plus every point strictly farther
/// than `ν ℓ`. Also returns how many points were excluded.
pub fn apply_lengthscale_filter<T: Scalar>(
    archive: &[Observation<T>],
    center: usize,
    lengthscale: T,
    nu: T,
) -> (Vec<usize>, usize) {
    let c = &archive[center].x;
    let threshold = nu * lengthscale;
    let mut kept = Vec::with_capacity(archive.len());
    let mut removed = 0;
    for (i, obs) in archive.iter().enumerate() {
        if i == center || (&obs.x - c).norm() > threshold {
            kept.push(i);
        } else {
            removed += 1;
        }
    }
    (kept, removed)
}

/// Both stopping conditions at once: `N` consecutive global candidates with
/// EI below `ε_T`, and the latest predicted local improvement below `ε_T`.
pub fn check_early_stop<T: Scalar>(state: &LagoState<T>, config: &LagoConfig<T>) -> bool {
    let local_done = match state.last_local_improvement {
        Some(i) => i < config.eps_t,
        None => false,
    };
    state.consecutive_low_ei >= config.stop_window && local_done
}

/// Final result of [`run`].
#[derive(Debug, Clone)]
pub struct RunResult<T: Scalar> {
    pub x_best: DVector<T>,
    pub f_best: T,
    /// Initial design plus the informed candidate (LAGO only).
    pub initial: Vec<Observation<T>>,
    /// Units spent before the first iteration.
    pub init_cost: usize,
    pub trace: Vec<IterationRecord<T>>,
    pub ledger: EvaluationLedger<T>,
    pub stop: StopReason,
}

/// A run in progress.
pub struct Lago<'p, T: Scalar, P: Problem<T> + ?Sized> {
    problem: &'p P,
    config: LagoConfig<T>,
    state: LagoState<T>,
    rng: ChaCha8Rng,
    cost_per_eval: usize,
    budget: usize,
    max_radius: T,
    initial_count: usize,
    init_cost: usize,
}

const NUGGET_RETRIES: usize = 6;

fn condition_with_retry<T: Scalar>(prior: GpPrior<T>, data: &[Observation<T>]) -> Result<GradientGp<T>> {
    let mut p = prior;
    let mut last = None;
    for attempt in 0..=NUGGET_RETRIES {
        match GradientGp::condition(p, data) {
            Ok(gp) => {
                if attempt > 0 {
                    warn!("kernel matrix needed nugget {} to factorize", p.nugget);
                }
                return Ok(gp);
            }
            Err(e @ LagoError::IllConditioned { .. }) => {
                last = Some(e);
                p.nugget = if p.nugget > T::zero() { p.nugget * T::lit(10.0) } else { T::lit(1e-12) };
            }
            Err(e) => return Err(e),
        }
    }
    Err(last.expect("at least one attempt"))
}

impl<'p, T: Scalar, P: Problem<T> + ?Sized> Lago<'p, T, P> {
    /// Evaluates a Latin hypercube design of `5d` points seeded by
    /// `config.seed`, fits the GP, and (in LAGO mode) evaluates the
    /// minimizer of the posterior mean and centers the trust region on the
    /// incumbent.
    pub fn initialize(problem: &'p P, config: LagoConfig<T>) -> Result<Self> {
        let d = problem.dim();
        let n0 = config.design_size_for(d);
        let design = latin_hypercube(problem.bounds(), n0, config.seed);
        Self::initialize_with_design(problem, config, design)
    }

    pub fn initialize_with_design(problem: &'p P, config: LagoConfig<T>, design: Vec<DVector<T>>) -> Result<Self> {
        config.validate()?;
        let d = problem.dim();
        if design.is_empty() {
            return Err(LagoError::EmptyDataset);
        }
        let cost_per_eval = config.evaluation_cost(problem);
        let budget = config.budget_for(d);
        let informed = usize::from(config.mode == Mode::Lago);
        let init_cost = (design.len() + informed) * cost_per_eval;
        if init_cost > budget {
            return Err(LagoError::Config(format!(
                "budget {budget} is smaller than the initialization cost {init_cost}"
            )));
        }

        let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
        rng.set_stream(1);

        let mut ledger = EvaluationLedger::new();
        let mut archive = Vec::with_capacity(budget / cost_per_eval + 1);
        for x in design {
            let (f, g) = problem.evaluate(&x);
            ledger.charge(&x, cost_per_eval);
            let idx = archive.len();
            archive.push(Observation::new(x, f, g, idx));
        }

        let prior_mean = archive.iter().fold(T::zero(), |a, o| a + o.f) / T::from_usize_lossy(archive.len());
        let diag = problem.bounds().diagonal();
        let bounds = HyperBounds::from_data(diag, &archive);
        let start = KernelHyper::new(T::lit(0.2) * diag, bounds.scale.0 * T::lit(1e4))?;
        let prior = GpPrior::new(config.kernel_family(), start)
            .with_nugget(config.nugget)
            .with_mean(prior_mean)
            .with_gradients(config.mode != Mode::Bo);
        let fit = fit_hyperparameters(&prior, &archive, &bounds)?;
        let prior = prior.with_hyper(fit.hyper);
        let mut gp = condition_with_retry(prior, &archive)?;
        debug!("initial fit: lengthscale {} scale {}", fit.hyper.lengthscale, fit.hyper.scale);

        let max_radius = config.max_radius.unwrap_or(diag * T::lit(0.5));
        let mut tr = None;
        let mut center_index = None;
        if config.mode == Mode::Lago {
            let x_informed = minimize_posterior_mean(&gp, problem, &archive, &mut rng);
            let (f, g) = problem.evaluate(&x_informed);
            ledger.charge(&x_informed, cost_per_eval);
            let idx = archive.len();
            archive.push(Observation::new(x_informed, f, g, idx));
            gp = condition_with_retry(*gp.prior(), &archive)?;

            let c = argmin(&archive);
            let radius = config.initial_radius.unwrap_or(gp.hyper().lengthscale * T::lit(0.5)).min(max_radius);
            let hessian = posterior_hessian(&gp, &archive[c].x)?;
            tr = Some(TrustRegionState::new(
                archive[c].x.clone(),
                archive[c].f,
                archive[c].grad.clone(),
                hessian,
                radius,
                max_radius,
            )?);
            center_index = Some(c);
        }

        let best_index = argmin(&archive);
        let initial_count = archive.len();
        let active = (0..archive.len()).collect();
        let state = LagoState {
            archive,
            active,
            tr,
            center_index,
            tr_converged: false,
            gp,
            best_index,
            ledger,
            consecutive_low_ei: 0,
            last_local_improvement: None,
            iteration: 0,
            stop: None,
        };
        Ok(Self { problem, config, state, rng, cost_per_eval, budget, max_radius, initial_count, init_cost })
    }

    pub fn state(&self) -> &LagoState<T> {
        &self.state
    }

    pub fn config(&self) -> &LagoConfig<T> {
        &self.config
    }

    pub fn cost_per_eval(&self) -> usize {
        self.cost_per_eval
    }

    pub fn budget(&self) -> usize {
        self.budget
    }

    pub fn init_cost(&self) -> usize {
        self.init_cost
    }

    pub fn initial_observations(&self) -> &[Observation<T>] {
        &self.state.archive[..self.initial_count]
    }

    pub fn can_step(&self) -> bool {
        self.state.stop.is_none() && self.state.ledger.function_units + self.cost_per_eval <= self.budget
    }

    fn evaluate(&mut self, x: DVector<T>) -> usize {
        let (f, g) = self.problem.evaluate(&x);
        self.state.ledger.charge(&x, self.cost_per_eval);
        let idx = self.state.archive.len();
        self.state.archive.push(Observation::new(x, f, g, idx));
        if f < self.state.f_best() {
            self.state.best_index = idx;
        }
        idx
    }

    fn lengthscale(&self) -> T {
        self.state.gp.hyper().lengthscale
    }

    fn reset_radius(&self) -> T {
        (self.lengthscale() * T::lit(0.5)).min(self.max_radius)
    }

    fn recondition(&mut self) -> Result<()> {
        let data = self.state.active_observations();
        self.state.gp = condition_with_retry(*self.state.gp.prior(), &data)?;
        Ok(())
    }

    fn refit(&mut self) -> Result<()> {
        let data = self.state.active_observations();
        let bounds = HyperBounds::from_data(self.problem.bounds().diagonal(), &data);
        let fit = fit_hyperparameters(self.state.gp.prior(), &data, &bounds)?;
        if fit.kept_previous {
            warn!("iteration {}: hyperparameter refit failed", self.state.iteration);
        }
        let prior = self.state.gp.prior().with_hyper(fit.hyper);
        self.state.gp = condition_with_retry(prior, &data)?;
        Ok(())
    }

    fn global_candidate(&mut self, center: &DVector<T>, radius: T) -> Result<(DVector<T>, T)> {
        let ctx = AcquisitionContext {
            f_best: self.state.f_best(),
            exclusion_center: center.clone(),
            exclusion_radius: radius,
            domain: self.problem.bounds().clone(),
        };
        maximize_outside_ball(&self.state.gp, &ctx, self.config.acquisition, &mut self.rng)
    }

    /// Moves the trust region to `archive[idx]`, re-filters the active set,
    /// conditions the GP and takes the Hessian of its posterior mean.
    fn relocate(&mut self, idx: usize) -> Result<usize> {
        let (active, removed) = apply_lengthscale_filter(&self.state.archive, idx, self.lengthscale(), self.config.nu);
        self.state.active = active;
        self.recondition()?;
        let obs = &self.state.archive[idx];
        let hessian = posterior_hessian(&self.state.gp, &obs.x)?;
        let radius = self.reset_radius();
        self.state.tr =
            Some(TrustRegionState::new(obs.x.clone(), obs.f, obs.grad.clone(), hessian, radius, self.max_radius)?);
        self.state.center_index = Some(idx);
        self.state.tr_converged = false;
        Ok(removed)
    }

    /// One iteration: exactly one evaluation.
    pub fn step(&mut self) -> Result<IterationRecord<T>> {
        if !self.can_step() {
            return Err(LagoError::Config("budget exhausted or run stopped".into()));
        }
        self.state.iteration += 1;
        if self.state.iteration.is_multiple_of(self.config.refit_period) {
            self.refit()?;
        }
        let condition = self.config.track_condition.then(|| self.state.gp.condition_number());
        let mut record = match self.config.mode {
            Mode::Lago => self.step_lago()?,
            Mode::GradBo | Mode::Bo => self.step_bo()?,
        };
        record.condition = condition;
        if self.config.early_stop && check_early_stop(&self.state, &self.config) {
            self.state.stop = Some(StopReason::EarlyStop);
        }
        Ok(record)
    }

    fn note_ei(&mut self, ei: T) {
        if ei < self.config.eps_t {
            self.state.consecutive_low_ei += 1;
        } else {
            self.state.consecutive_low_ei = 0;
        }
    }

    fn step_bo(&mut self) -> Result<IterationRecord<T>> {
        let center = self.state.x_best().clone();
        let (x, ei) = self.global_candidate(&center, T::zero())?;
        self.note_ei(ei);
        self.state.last_local_improvement = Some(T::zero());
        let idx = self.evaluate(x);
        self.state.active.push(idx);
        self.recondition()?;
        Ok(self.record(Proposal::Global, ei, T::zero(), idx, None, 0))
    }

    fn step_lago(&mut self) -> Result<IterationRecord<T>> {
        let tr = self.state.tr.clone().expect("trust region exists in LAGO mode");

        let mut infeasible = false;
        let global = match self.global_candidate(&tr.center, tr.radius) {
            Ok(g) => Some(g),
            Err(LagoError::InfeasibleExclusion) => {
                infeasible = true;
                None
            }
            Err(e) => return Err(e),
        };
        let sub = solve_subproblem(&tr.grad_center, &tr.hessian, tr.radius)?;
        let local_improvement = sub.model_decrease;
        self.state.last_local_improvement = Some(local_improvement);

        if self.state.tr_converged || infeasible {
            let radius = self.reset_radius();
            if let Some(tr) = self.state.tr.as_mut() {
                tr.radius = radius;
            }
            self.state.tr_converged = false;
            let (x, ei) = match global {
                Some(g) => g,
                None => match self.global_candidate(&tr.center, radius) {
                    Ok(g) => g,
                    Err(LagoError::InfeasibleExclusion) => self.global_candidate(&tr.center, T::zero())?,
                    Err(e) => return Err(e),
                },
            };
            self.note_ei(ei);
            let idx = self.evaluate(x);
            let removed = self.assimilate_global(idx)?;
            return Ok(self.record(Proposal::TrTerminatedGlobal, ei, local_improvement, idx, None, removed));
        }

        let (x_global, ei) = global.expect("feasible exclusion yields a candidate");
        self.note_ei(ei);
        match select(ei, local_improvement, self.config.gamma) {
            Proposal::Global | Proposal::TrTerminatedGlobal => {
                let idx = self.evaluate(x_global);
                let removed = self.assimilate_global(idx)?;
                Ok(self.record(Proposal::Global, ei, local_improvement, idx, None, removed))
            }
            Proposal::Local => {
                let x_local = &tr.center + &sub.step;
                let idx = self.evaluate(x_local);
                let obs = self.state.archive[idx].clone();
                let out =
                    tr_step(&tr, obs.f, &obs.grad, &sub.step, sub.model_decrease, self.config.eta, self.config.sr1_r);
                self.state.tr = Some(out.new_state);
                let mut removed = 0;
                if out.accepted {
                    if out.step_norm <= self.config.eps_step {
                        self.state.tr_converged = true;
                    }
                    self.state.center_index = Some(idx);
                    let (active, r) =
                        apply_lengthscale_filter(&self.state.archive, idx, self.lengthscale(), self.config.nu);
                    self.state.active = active;
                    removed = r;
                    self.recondition()?;
                }
                Ok(self.record(Proposal::Local, ei, local_improvement, idx, Some(out.accepted), removed))
            }
        }
    }

    /// Adds a global evaluation to the active set; a new incumbent relocates
    /// the trust region.
    fn assimilate_global(&mut self, idx: usize) -> Result<usize> {
        if self.state.best_index == idx {
            self.relocate(idx)
        } else {
            self.state.active.push(idx);
            self.recondition()?;
            Ok(0)
        }
    }

    fn record(
        &self,
        choice: Proposal,
        ei: T,
        local_improvement: T,
        idx: usize,
        accepted: Option<bool>,
        filter_removed: usize,
    ) -> IterationRecord<T> {
        let obs = &self.state.archive[idx];
        IterationRecord {
            iteration: self.state.iteration,
            choice,
            ei,
            local_improvement,
            x: obs.x.clone(),
            f: obs.f,
            radius: self.state.tr.as_ref().map_or(T::nan(), |t| t.radius),
            lengthscale: self.lengthscale(),
            condition: None,
            cost: self.state.ledger.function_units,
            accepted,
            filter_removed,
            active_size: self.state.active.len(),
            f_best: self.state.f_best(),
        }
    }

    /// Steps until the budget is exhausted or the early-stop test fires.
    pub fn run_to_end(mut self) -> Result<RunResult<T>> {
        let mut trace = Vec::new();
        while self.can_step() {
            trace.push(self.step()?);
        }
        let stop = self.state.stop.unwrap_or(StopReason::Budget);
        Ok(RunResult {
            x_best: self.state.x_best().clone(),
            f_best: self.state.f_best(),
            initial: self.initial_observations().to_vec(),
            init_cost: self.init_cost,
            trace,
            ledger: self.state.ledger,
            stop,
        })
    }
}

/// Runs the optimizer from a seeded Latin hypercube design.
pub fn run<T: Scalar, P: Problem<T> + ?Sized>(problem: &P, config: LagoConfig<T>) -> Result<RunResult<T>> {
    Lago::initialize(problem, config)?.run_to_end()
}

fn argmin<T: Scalar>(archive: &[Observation<T>]) -> usize {
    let mut best = 0;
    for (i, o) in archive.iter().enumerate() {
        if o.f < archive[best].f {
            best = i;
        }
    }
    best
}

fn posterior_hessian<T: Scalar>(gp: &GradientGp<T>, x: &DVector<T>) -> Result<DMatrix<T>> {
    let q = gp.posterior(x, false, true)?;
    let h = q.mean_hessian.expect("requested");
    if h.iter().all(|v| v.is_finite()) {
        Ok(h)
    } else {
        Ok(DMatrix::identity(x.len(), x.len()))
    }
}

/// Multi-start Nelder–Mead on the posterior mean, started from every design
/// point and a few random points.
fn minimize_posterior_mean<T: Scalar, P: Problem<T> + ?Sized>(
    gp: &GradientGp<T>,
    problem: &P,
    design: &[Observation<T>],
    rng: &mut ChaCha8Rng,
) -> DVector<T> {
    let bounds = problem.bounds();
    let d = bounds.dim();
    let step = bounds.widths() * T::lit(0.05);
    let mut starts: Vec<DVector<T>> = design.iter().map(|o| o.x.clone()).collect();
    for _ in 0..2 * d {
        starts.push(bounds.sample_uniform(rng));
    }
    let mut best: Option<(DVector<T>, T)> = None;
    for s in &starts {
        let (x, _) = nelder_mead(|x| gp.mean(&bounds.clip(x)), s, &step, 100 * d, T::lit(1e-12));
        let x = bounds.clip(&x);
        let v = gp.mean(&x);
        if best.as_ref().is_none_or(|(_, bv)| v < *bv) {
            best = Some((x, v));
        }
    }
    best.expect("at least one start").0
}
