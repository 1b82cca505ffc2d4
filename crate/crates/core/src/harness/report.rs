use std::collections::BTreeSet;
use std::fmt::Write as _;
use std::str::FromStr;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::harness::experiment::{CellSummary, ExperimentResult};
use crate::harness::io::to_json;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ReportFormat {
    Text,
    Json,
    Csv,
}

impl FromStr for ReportFormat {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "text" | "txt" => Ok(ReportFormat::Text),
            "json" => Ok(ReportFormat::Json),
            "csv" => Ok(ReportFormat::Csv),
            _ => Err(Error::invalid(format!("unknown report format '{s}' (text, json, csv)"))),
        }
    }
}

/// 95% Wilson score interval for `successes` out of `trials`.
pub fn wilson_interval(successes: usize, trials: usize) -> (f64, f64) {
    if trials == 0 {
        return (0.0, 1.0);
    }
    const Z: f64 = 1.959_963_984_540_054;
    let n = trials as f64;
    let p = successes as f64 / n;
    let denom = 1.0 + Z * Z / n;
    let center = (p + Z * Z / (2.0 * n)) / denom;
    let half = Z * (p * (1.0 - p) / n + Z * Z / (4.0 * n * n)).sqrt() / denom;
    ((center - half).max(0.0), (center + half).min(1.0))
}

#[derive(Serialize)]
struct Row {
    n_obs: usize,
    classes: usize,
    correct: usize,
    total: usize,
    proportion: f64,
    ci_low: f64,
    ci_high: f64,
}

impl From<&CellSummary> for Row {
    fn from(c: &CellSummary) -> Self {
        let (ci_low, ci_high) = wilson_interval(c.correct, c.total);
        Row {
            n_obs: c.n_obs,
            classes: c.classes,
            correct: c.correct,
            total: c.total,
            proportion: c.proportion(),
            ci_low,
            ci_high,
        }
    }
}

#[derive(Serialize)]
struct JsonReport {
    cells: Vec<Row>,
    total: Row,
}

fn total_row(cells: &[CellSummary]) -> Row {
    Row::from(&CellSummary {
        n_obs: 0,
        classes: 0,
        correct: cells.iter().map(|c| c.correct).sum(),
        total: cells.iter().map(|c| c.total).sum(),
    })
}

pub fn render(result: &ExperimentResult, format: ReportFormat) -> Result<String> {
    let cells = &result.cells;
    match format {
        ReportFormat::Text => Ok(render_text(cells)),
        ReportFormat::Json => to_json(&JsonReport {
            cells: cells.iter().map(Row::from).collect(),
            total: total_row(cells),
        }),
        ReportFormat::Csv => {
            let mut out = String::from("n_obs,classes,correct,total,proportion,ci_low,ci_high\n");
            for r in cells.iter().map(Row::from).chain(std::iter::once(total_row(cells))) {
                let _ = writeln!(
                    out,
                    "{},{},{},{},{},{},{}",
                    r.n_obs, r.classes, r.correct, r.total, r.proportion, r.ci_low, r.ci_high
                );
            }
            Ok(out)
        }
    }
}

fn render_text(cells: &[CellSummary]) -> String {
    let sizes: BTreeSet<usize> = cells.iter().map(|c| c.n_obs).collect();
    let classes: BTreeSet<usize> = cells.iter().map(|c| c.classes).collect();
    let mut out = String::new();
    let _ = writeln!(out, "Correctly estimated causal directions");
    let _ = writeln!(out, "{:<10}{:>10}", "", "Sample size");
    let _ = write!(out, "{:<10}", "");
    for n in &sizes {
        let _ = write!(out, "{n:>10}");
    }
    out.push('\n');
    for &l in &classes {
        let _ = write!(out, "{:<10}", format!("l={l}"));
        for &n in &sizes {
            match cells.iter().find(|c| c.n_obs == n && c.classes == l) {
                Some(c) => {
                    let _ = write!(out, "{:>10}", c.correct);
                }
                None => {
                    let _ = write!(out, "{:>10}", "-");
                }
            }
        }
        out.push('\n');
    }
    if cells.is_empty() {
        return out;
    }
    out.push('\n');
    for c in cells {
        let (lo, hi) = wilson_interval(c.correct, c.total);
        let _ = writeln!(
            out,
            "N={:<5} l={:<3} {:>6}/{:<6} {:.3}  95% CI [{:.3}, {:.3}]",
            c.n_obs,
            c.classes,
            c.correct,
            c.total,
            c.proportion(),
            lo,
            hi
        );
    }
    let t = total_row(cells);
    let _ = writeln!(
        out,
        "total        {:>6}/{:<6} {:.3}  95% CI [{:.3}, {:.3}]",
        t.correct, t.total, t.proportion, t.ci_low, t.ci_high
    );
    out
}
