//! Campaign configuration, persisted as a flat TOML file.

use std::path::{Path, PathBuf};

use lago::{AcquisitionOptions, Config, KernelFamily, Mode};
use serde::{Deserialize, Serialize};

use crate::error::{BenchError, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CampaignConfig {
    pub problem: String,
    pub dim: usize,
    /// `lago`, `gradbo` or `bo`.
    pub mode: String,
    pub seeds: Vec<u64>,
    /// Evaluation units; absent means `210 d`.
    pub budget: Option<usize>,
    pub gamma: f64,
    pub nu: f64,
    /// Units per gradient; absent means the problem default.
    pub gradient_cost: Option<usize>,
    pub mesh_n: Option<usize>,
    /// `matern52` or `matern72`; absent means the mode default.
    pub kernel: Option<String>,
    pub stop_window: usize,
    pub eps_t: f64,
    pub eps_step: f64,
    pub eta: f64,
    pub sr1_r: f64,
    pub refit_period: usize,
    pub nugget: f64,
    pub early_stop: bool,
    pub track_condition: bool,
    pub acquisition_starts: usize,
    pub acquisition_evals: usize,
    pub out: PathBuf,
    pub workers: usize,
}

impl Default for CampaignConfig {
    fn default() -> Self {
        let core = Config::default();
        let acq = AcquisitionOptions::default();
        Self {
            problem: "branin".into(),
            dim: 2,
            mode: core.mode.name().into(),
            seeds: (1..=10).collect(),
            budget: None,
            gamma: core.gamma,
            nu: core.nu,
            gradient_cost: None,
            mesh_n: None,
            kernel: None,
            stop_window: core.stop_window,
            eps_t: core.eps_t,
            eps_step: core.eps_step,
            eta: core.eta,
            sr1_r: core.sr1_r,
            refit_period: core.refit_period,
            nugget: core.nugget,
            early_stop: core.early_stop,
            track_condition: false,
            acquisition_starts: acq.starts,
            acquisition_evals: acq.evals_per_start,
            out: PathBuf::from("results"),
            workers: 1,
        }
    }
}

impl CampaignConfig {
    pub fn parse(text: &str) -> Result<Self> {
        let cfg: Self = toml::from_str(text)?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn emit(&self) -> Result<String> {
        Ok(toml::to_string(self)?)
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::parse(&std::fs::read_to_string(path)?)
    }

    pub fn mode(&self) -> Result<Mode> {
        Ok(self.mode.parse()?)
    }

    /// The explicit kernel, else Matérn 7/2 on the PDE problem (its cost is
    /// very smooth) and the mode default elsewhere.
    pub fn kernel_family(&self) -> Result<Option<KernelFamily>> {
        match self.kernel.as_deref() {
            Some(k) => Ok(Some(k.parse()?)),
            None if self.problem == lago::pde::PROBLEM_NAME => Ok(Some(KernelFamily::Matern72)),
            None => Ok(None),
        }
    }

    pub fn validate(&self) -> Result<()> {
        self.mode()?;
        self.kernel_family()?;
        if self.seeds.is_empty() {
            return Err(BenchError::Invalid("no seeds".into()));
        }
        if self.workers == 0 {
            return Err(BenchError::Invalid("workers must be at least 1".into()));
        }
        let known =
            lago::problems::registry().into_iter().any(|(name, dims)| name == self.problem && dims.contains(&self.dim));
        if !known {
            return Err(lago::LagoError::UnknownProblem { name: self.problem.clone(), dim: self.dim }.into());
        }
        Ok(())
    }

    /// Optimizer settings for one seed.
    pub fn run_config(&self, seed: u64) -> Result<Config> {
        Ok(Config {
            mode: self.mode()?,
            gamma: self.gamma,
            nu: self.nu,
            stop_window: self.stop_window,
            eps_t: self.eps_t,
            eps_step: self.eps_step,
            eta: self.eta,
            sr1_r: self.sr1_r,
            initial_radius: None,
            max_radius: None,
            refit_period: self.refit_period,
            budget: self.budget,
            gradient_cost: self.gradient_cost,
            design_size: None,
            kernel: self.kernel_family()?,
            nugget: self.nugget,
            seed,
            acquisition: AcquisitionOptions {
                starts: self.acquisition_starts,
                evals_per_start: self.acquisition_evals,
            },
            early_stop: self.early_stop,
            track_condition: self.track_condition,
        })
    }
}

/// Seed lists on the command line: `N` means `1..=N`, `a..b` is inclusive,
/// otherwise a comma-separated list.
pub fn parse_seeds(text: &str) -> Result<Vec<u64>> {
    let bad = || BenchError::Invalid(format!("cannot parse seeds `{text}`"));
    let text = text.trim();
    if let Some((a, b)) = text.split_once("..") {
        let a: u64 = a.trim().parse().map_err(|_| bad())?;
        let b: u64 = b.trim().trim_start_matches('=').parse().map_err(|_| bad())?;
        if b < a {
            return Err(bad());
        }
        return Ok((a..=b).collect());
    }
    if text.contains(',') {
        return text.split(',').map(|s| s.trim().parse().map_err(|_| bad())).collect();
    }
    let n: u64 = text.parse().map_err(|_| bad())?;
    if n == 0 {
        return Err(bad());
    }
    Ok((1..=n).collect())
}
