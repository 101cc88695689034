//! Trace and curve files.

use std::io::{Read, Write};

use lago::{Outcome, Proposal};

use crate::error::{BenchError, Result};

/// One evaluation as persisted in a trace file. The initial design appears
/// first with iteration 0.
#[derive(Debug, Clone, PartialEq)]
pub struct TraceRow {
    pub iteration: usize,
    /// `design`, `informed`, or a [`Proposal`] name.
    pub choice: String,
    pub x: Vec<f64>,
    pub f: f64,
    pub ei: Option<f64>,
    pub local_improvement: Option<f64>,
    pub radius: Option<f64>,
    pub lengthscale: Option<f64>,
    pub condition: Option<f64>,
    /// Cumulative evaluation units.
    pub cost: usize,
    pub accepted: Option<bool>,
    pub filtered: usize,
    pub active: usize,
}

pub fn trace_rows(run: &Outcome, lago_mode: bool) -> Vec<TraceRow> {
    let per_eval = run.init_cost / run.initial.len().max(1);
    let n0 = run.initial.len();
    let mut rows: Vec<TraceRow> = run
        .initial
        .iter()
        .enumerate()
        .map(|(k, o)| TraceRow {
            iteration: 0,
            choice: if lago_mode && k + 1 == n0 { "informed" } else { "design" }.into(),
            x: o.x.iter().copied().collect(),
            f: o.f,
            ei: None,
            local_improvement: None,
            radius: None,
            lengthscale: None,
            condition: None,
            cost: (k + 1) * per_eval,
            accepted: None,
            filtered: 0,
            active: k + 1,
        })
        .collect();
    rows.extend(run.trace.iter().map(|r| TraceRow {
        iteration: r.iteration,
        choice: r.choice.name().into(),
        x: r.x.iter().copied().collect(),
        f: r.f,
        ei: Some(r.ei),
        local_improvement: Some(r.local_improvement),
        radius: r.radius.is_finite().then_some(r.radius),
        lengthscale: Some(r.lengthscale),
        condition: r.condition,
        cost: r.cost,
        accepted: r.accepted,
        filtered: r.filter_removed,
        active: r.active_size,
    }));
    rows
}

/// Shortest text that parses back to the same `f64`; scientific notation
/// outside `[1e-4, 1e15)`.
pub fn num(v: f64) -> String {
    let a = v.abs();
    if a == 0.0 || !a.is_finite() || (1e-4..1e15).contains(&a) {
        v.to_string()
    } else {
        format!("{v:e}")
    }
}

fn opt(v: Option<f64>) -> String {
    v.map(num).unwrap_or_default()
}

pub fn write_trace<W: Write>(out: W, rows: &[TraceRow], dim: usize) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    let mut header = vec!["iteration".to_string(), "choice".to_string()];
    header.extend((0..dim).map(|i| format!("x{i}")));
    header.extend(
        ["f", "ei", "I_t", "delta", "lengthscale", "cond", "cost", "accepted", "filtered", "active"].map(String::from),
    );
    w.write_record(&header)?;
    for r in rows {
        let mut rec = vec![r.iteration.to_string(), r.choice.clone()];
        rec.extend(r.x.iter().copied().map(num));
        rec.extend([
            num(r.f),
            opt(r.ei),
            opt(r.local_improvement),
            opt(r.radius),
            opt(r.lengthscale),
            opt(r.condition),
            r.cost.to_string(),
            r.accepted.map(|a| a.to_string()).unwrap_or_default(),
            r.filtered.to_string(),
            r.active.to_string(),
        ]);
        w.write_record(&rec)?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_trace<R: Read>(input: R) -> Result<Vec<TraceRow>> {
    let mut rd = csv::Reader::from_reader(input);
    let header = rd.headers()?.clone();
    let dim = header.iter().filter(|h| h.starts_with('x')).count();
    let bad = |what: &str| BenchError::Invalid(format!("malformed trace field `{what}`"));
    let num = |s: &str| -> Result<f64> { s.parse().map_err(|_| bad(s)) };
    let opt_num = |s: &str| -> Result<Option<f64>> {
        if s.is_empty() {
            Ok(None)
        } else {
            num(s).map(Some)
        }
    };
    let int = |s: &str| -> Result<usize> { s.parse().map_err(|_| bad(s)) };
    let mut rows = Vec::new();
    for rec in rd.records() {
        let rec = rec?;
        let field = |i: usize| rec.get(i).ok_or_else(|| bad("missing column"));
        let x = (0..dim).map(|i| field(2 + i).and_then(num)).collect::<Result<Vec<_>>>()?;
        let k = 2 + dim;
        if field(1)? != "design" && field(1)? != "informed" {
            field(1)?.parse::<Proposal>()?;
        }
        rows.push(TraceRow {
            iteration: int(field(0)?)?,
            choice: field(1)?.to_string(),
            x,
            f: num(field(k)?)?,
            ei: opt_num(field(k + 1)?)?,
            local_improvement: opt_num(field(k + 2)?)?,
            radius: opt_num(field(k + 3)?)?,
            lengthscale: opt_num(field(k + 4)?)?,
            condition: opt_num(field(k + 5)?)?,
            cost: int(field(k + 6)?)?,
            accepted: match field(k + 7)? {
                "" => None,
                s => Some(s.parse().map_err(|_| bad(s))?),
            },
            filtered: int(field(k + 8)?)?,
            active: int(field(k + 9)?)?,
        });
    }
    Ok(rows)
}

/// Best value found within each evaluation-unit budget `u = 1..=budget`;
/// budgets smaller than the first evaluation are skipped. A run that stopped
/// early keeps its final incumbent up to `budget`.
pub fn best_so_far_curve(rows: &[TraceRow], budget: usize) -> Vec<(usize, f64)> {
    let mut curve = Vec::with_capacity(budget);
    let mut best = f64::INFINITY;
    let mut next = 0;
    for u in 1..=budget {
        while next < rows.len() && rows[next].cost <= u {
            best = best.min(rows[next].f);
            next += 1;
        }
        if best.is_finite() {
            curve.push((u, best));
        }
    }
    curve
}

pub fn write_curve<W: Write>(out: W, curve: &[(usize, f64)], known_min: Option<f64>) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["units", "f_best", "error"])?;
    for &(u, f) in curve {
        w.write_record([u.to_string(), num(f), num(error_of(f, known_min))])?;
    }
    w.flush()?;
    Ok(())
}

/// `|f - f*|` when the minimum is known, otherwise `f` itself.
pub fn error_of(f: f64, known_min: Option<f64>) -> f64 {
    match known_min {
        Some(m) => (f - m).abs(),
        None => f,
    }
}
