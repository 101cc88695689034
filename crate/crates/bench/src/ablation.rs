//! The γ sweep and the filter/conditioning ablation.

use std::fs::{self, File};
use std::io::BufWriter;

use lago::{Lago, Problem};

use crate::artifacts::num;
use crate::campaign::{map_seeds, problem_for, run_campaign, CampaignResult};
use crate::config::CampaignConfig;
use crate::error::{BenchError, Result};
use crate::stats::Spread;

#[derive(Debug, Clone)]
pub struct GammaRow {
    pub gamma: f64,
    pub final_error: Spread,
    pub campaign: CampaignResult,
}

/// One campaign per γ with shared seeds (hence shared designs). Each
/// campaign writes into `out/gamma_{γ}`; `out/gamma_summary.csv` collects the
/// final errors.
pub fn run_gamma_ablation(base: &CampaignConfig, gammas: &[f64]) -> Result<Vec<GammaRow>> {
    if gammas.is_empty() || gammas.iter().any(|g| !(*g > 0.0)) {
        return Err(BenchError::Invalid("γ values must be positive".into()));
    }
    let mut rows = Vec::with_capacity(gammas.len());
    for &gamma in gammas {
        let cfg = CampaignConfig { gamma, out: base.out.join(format!("gamma_{gamma}")), ..base.clone() };
        let campaign = run_campaign(&cfg)?;
        rows.push(GammaRow { gamma, final_error: campaign.final_spread(), campaign });
    }
    let mut w = csv::Writer::from_writer(BufWriter::new(File::create(base.out.join("gamma_summary.csv"))?));
    w.write_record(["gamma", "median", "q1", "q3"])?;
    for r in &rows {
        w.write_record([num(r.gamma), num(r.final_error.median), num(r.final_error.q1), num(r.final_error.q3)])?;
    }
    w.flush()?;
    Ok(rows)
}

/// Normalized condition numbers of one seed around its first filter
/// activation.
#[derive(Debug, Clone, PartialEq)]
pub struct SeedEvent {
    pub seed: u64,
    /// Iteration of the first filter activation in the filtered run.
    pub t_star: usize,
    /// `κ(t* + o) / κ(t*)` for `o = -w..=w`, filtered run.
    pub filtered: Vec<f64>,
    /// Same offsets, `ν = 0`, normalized by its own `κ(t*)`.
    pub unfiltered: Vec<f64>,
}

#[derive(Debug, Clone)]
pub struct ConditioningRow {
    pub nu: f64,
    pub offset: i64,
    pub ratio: Spread,
}

#[derive(Debug, Clone)]
pub struct ConditioningReport {
    pub nu: f64,
    pub window: usize,
    pub events: Vec<SeedEvent>,
    /// Seeds whose filtered run never activated the filter with a full
    /// window on both sides.
    pub skipped: Vec<u64>,
    pub rows: Vec<ConditioningRow>,
}

impl ConditioningReport {
    pub fn at(&self, nu: f64, offset: i64) -> Option<&ConditioningRow> {
        self.rows.iter().find(|r| r.nu == nu && r.offset == offset)
    }
}

/// Condition numbers per iteration, stopping `window` iterations after the
/// first activation (or at `stop_at`). Returns `(κ by iteration, t*)`.
fn condition_history(
    problem: &dyn Problem<f64>,
    cfg: &CampaignConfig,
    seed: u64,
    nu: f64,
    window: usize,
    stop_at: Option<usize>,
) -> Result<(Vec<f64>, Option<usize>)> {
    let mut run_cfg = cfg.run_config(seed)?;
    run_cfg.nu = nu;
    run_cfg.track_condition = true;
    let mut lago = Lago::initialize(problem, run_cfg)?;
    let mut kappa = Vec::new();
    let mut t_star = None;
    while lago.can_step() {
        let rec = lago.step()?;
        kappa.push(rec.condition.unwrap_or(f64::NAN));
        if t_star.is_none() && rec.filter_removed > 0 {
            t_star = Some(rec.iteration);
        }
        let end = stop_at.or(t_star.map(|t| t + window));
        if end.is_some_and(|e| rec.iteration >= e) {
            break;
        }
    }
    Ok((kappa, t_star))
}

fn seed_event(problem: &dyn Problem<f64>, cfg: &CampaignConfig, seed: u64, window: usize) -> Result<Option<SeedEvent>> {
    let (kf, t_star) = condition_history(problem, cfg, seed, cfg.nu, window, None)?;
    let Some(t) = t_star else { return Ok(None) };
    if t <= window || kf.len() < t + window {
        return Ok(None);
    }
    let (ku, _) = condition_history(problem, cfg, seed, 0.0, window, Some(t + window))?;
    if ku.len() < t + window {
        return Ok(None);
    }
    // Iteration i sits at index i - 1.
    let normalized = |k: &[f64]| (t - window..=t + window).map(|i| k[i - 1] / k[t - 1]).collect();
    Ok(Some(SeedEvent { seed, t_star: t, filtered: normalized(&kf), unfiltered: normalized(&ku) }))
}

/// Event-aligned conditioning for `ν = cfg.nu` against `ν = 0`. Seeds are
/// taken from `cfg.seeds` and then extended in batches of ten until
/// `min_events` seeds activate the filter or `max_seeds` have been tried.
pub fn run_conditioning_ablation(
    cfg: &CampaignConfig,
    window: usize,
    min_events: usize,
    max_seeds: usize,
) -> Result<ConditioningReport> {
    if !(cfg.nu > 0.0) {
        return Err(BenchError::Invalid("the filtered arm needs ν > 0".into()));
    }
    let problem = problem_for(cfg)?;
    let mut events = Vec::new();
    let mut skipped = Vec::new();
    let mut batch = cfg.seeds.clone();
    let mut next = cfg.seeds.iter().max().map_or(1, |m| m + 1);
    let mut tried = 0;
    while !batch.is_empty() {
        tried += batch.len();
        let found = map_seeds(&batch, cfg.workers, |s| seed_event(problem.as_ref(), cfg, s, window))?;
        for (s, e) in batch.iter().zip(found) {
            match e {
                Some(e) => events.push(e),
                None => skipped.push(*s),
            }
        }
        if events.len() >= min_events || tried >= max_seeds {
            break;
        }
        let n = 10.min(max_seeds - tried) as u64;
        batch = (next..next + n).collect();
        next += n;
    }
    if events.is_empty() {
        return Err(BenchError::Invalid(format!("the filter never activated in {tried} seeds")));
    }

    let w = window as i64;
    let mut rows = Vec::new();
    for (nu, pick) in [(cfg.nu, true), (0.0, false)] {
        for (k, offset) in (-w..=w).enumerate() {
            let vals: Vec<f64> = events.iter().map(|e| if pick { e.filtered[k] } else { e.unfiltered[k] }).collect();
            rows.push(ConditioningRow { nu, offset, ratio: Spread::of(&vals) });
        }
    }
    let report = ConditioningReport { nu: cfg.nu, window, events, skipped, rows };
    write_conditioning(&report, cfg)?;
    Ok(report)
}

fn write_conditioning(report: &ConditioningReport, cfg: &CampaignConfig) -> Result<()> {
    fs::create_dir_all(&cfg.out)?;
    fs::write(cfg.out.join("config.toml"), cfg.emit()?)?;
    let mut w = csv::Writer::from_writer(BufWriter::new(File::create(cfg.out.join("conditioning.csv"))?));
    w.write_record(["nu", "offset", "median", "q1", "q3"])?;
    for r in &report.rows {
        w.write_record([num(r.nu), r.offset.to_string(), num(r.ratio.median), num(r.ratio.q1), num(r.ratio.q3)])?;
    }
    w.flush()?;

    let mut w = csv::Writer::from_writer(BufWriter::new(File::create(cfg.out.join("conditioning_events.csv"))?));
    w.write_record(["seed", "t_star", "offset", "nu", "ratio"])?;
    let win = report.window as i64;
    for e in &report.events {
        for (nu, vals) in [(report.nu, &e.filtered), (0.0, &e.unfiltered)] {
            for (k, v) in vals.iter().enumerate() {
                w.write_record([
                    e.seed.to_string(),
                    e.t_star.to_string(),
                    (k as i64 - win).to_string(),
                    num(nu),
                    num(*v),
                ])?;
            }
        }
    }
    w.flush()?;
    fs::write(
        cfg.out.join("conditioning_skipped.txt"),
        report.skipped.iter().map(|s| format!("{s}\n")).collect::<String>(),
    )?;
    Ok(())
}
