//! Multi-seed campaigns and their artifacts.

use std::fs::{self, File};
use std::io::BufWriter;
use std::path::Path;

use lago::{build_problem, Mode, Outcome, Problem};
use rayon::prelude::*;

use crate::artifacts::{best_so_far_curve, error_of, num, trace_rows, write_curve, write_trace, TraceRow};
use crate::config::CampaignConfig;
use crate::error::{BenchError, Result};
use crate::stats::Spread;

#[derive(Debug, Clone)]
pub struct SeedRun {
    pub seed: u64,
    pub outcome: Outcome,
    pub rows: Vec<TraceRow>,
    pub curve: Vec<(usize, f64)>,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SummaryRow {
    pub units: usize,
    pub error: Spread,
}

#[derive(Debug, Clone)]
pub struct CampaignResult {
    pub config: CampaignConfig,
    pub budget: usize,
    pub known_min: Option<f64>,
    pub runs: Vec<SeedRun>,
    pub summary: Vec<SummaryRow>,
}

impl CampaignResult {
    pub fn final_errors(&self) -> Vec<f64> {
        self.runs.iter().map(|r| error_of(r.outcome.f_best, self.known_min)).collect()
    }

    pub fn final_spread(&self) -> Spread {
        Spread::of(&self.final_errors())
    }
}

/// Runs `f` on every seed, in parallel when `workers > 1`; results keep the
/// seed order either way.
pub fn map_seeds<R, F>(seeds: &[u64], workers: usize, f: F) -> Result<Vec<R>>
where
    R: Send,
    F: Fn(u64) -> Result<R> + Sync,
{
    if workers <= 1 {
        return seeds.iter().map(|&s| f(s)).collect();
    }
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(workers)
        .build()
        .map_err(|e| BenchError::Invalid(format!("thread pool: {e}")))?;
    pool.install(|| seeds.par_iter().map(|&s| f(s)).collect())
}

pub fn problem_for(cfg: &CampaignConfig) -> Result<Box<dyn Problem<f64>>> {
    Ok(build_problem(&cfg.problem, cfg.dim, cfg.mesh_n)?)
}

/// Runs every seed without touching the filesystem.
pub fn execute(cfg: &CampaignConfig) -> Result<CampaignResult> {
    cfg.validate()?;
    let problem = problem_for(cfg)?;
    let lago_mode = cfg.mode()? == Mode::Lago;
    let budget = cfg.run_config(0)?.budget_for(problem.dim());
    let runs = map_seeds(&cfg.seeds, cfg.workers, |seed| {
        let outcome = lago::run(&problem, cfg.run_config(seed)?)?;
        let rows = trace_rows(&outcome, lago_mode);
        let curve = best_so_far_curve(&rows, budget);
        Ok(SeedRun { seed, outcome, rows, curve })
    })?;
    let known_min = problem.known_min();
    let summary = summarize(&runs, known_min);
    Ok(CampaignResult { config: cfg.clone(), budget, known_min, runs, summary })
}

/// Error quantiles across seeds at every unit covered by all runs.
pub fn summarize(runs: &[SeedRun], known_min: Option<f64>) -> Vec<SummaryRow> {
    let Some(first) = runs.iter().map(|r| r.curve.first().map_or(usize::MAX, |c| c.0)).max() else {
        return Vec::new();
    };
    let last = runs.iter().map(|r| r.curve.last().map_or(0, |c| c.0)).min().unwrap_or(0);
    (first..=last)
        .map(|u| {
            let errors: Vec<f64> = runs
                .iter()
                .map(|r| {
                    let i = r.curve.partition_point(|c| c.0 < u);
                    error_of(r.curve[i].1, known_min)
                })
                .collect();
            SummaryRow { units: u, error: Spread::of(&errors) }
        })
        .collect()
}

/// Writes `config.toml`, `trace_seed{s}.csv`, `curve_seed{s}.csv`,
/// `final.csv` and `summary.csv` into `dir`.
pub fn write_artifacts(result: &CampaignResult, dir: &Path) -> Result<()> {
    fs::create_dir_all(dir)?;
    fs::write(dir.join("config.toml"), result.config.emit()?)?;
    let dim = result.config.dim;
    for run in &result.runs {
        write_trace(BufWriter::new(File::create(dir.join(format!("trace_seed{}.csv", run.seed)))?), &run.rows, dim)?;
        write_curve(
            BufWriter::new(File::create(dir.join(format!("curve_seed{}.csv", run.seed)))?),
            &run.curve,
            result.known_min,
        )?;
    }

    let mut w = csv::Writer::from_writer(BufWriter::new(File::create(dir.join("final.csv"))?));
    let mut header = vec!["seed".to_string(), "f_best".into(), "error".into()];
    header.extend((0..dim).map(|i| format!("x{i}")));
    header.extend(["evaluations".into(), "units".into(), "stop".into()]);
    w.write_record(&header)?;
    for run in &result.runs {
        let o = &run.outcome;
        let mut rec = vec![run.seed.to_string(), num(o.f_best), num(error_of(o.f_best, result.known_min))];
        rec.extend(o.x_best.iter().copied().map(num));
        rec.extend([
            run.rows.len().to_string(),
            o.ledger.function_units.to_string(),
            format!("{:?}", o.stop).to_lowercase(),
        ]);
        w.write_record(&rec)?;
    }
    w.flush()?;

    let mut w = csv::Writer::from_writer(BufWriter::new(File::create(dir.join("summary.csv"))?));
    w.write_record(["units", "median", "q1", "q3"])?;
    for row in &result.summary {
        w.write_record([row.units.to_string(), num(row.error.median), num(row.error.q1), num(row.error.q3)])?;
    }
    w.flush()?;
    Ok(())
}

pub fn run_campaign(cfg: &CampaignConfig) -> Result<CampaignResult> {
    let result = execute(cfg)?;
    write_artifacts(&result, &cfg.out)?;
    Ok(result)
}
