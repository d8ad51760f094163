//! Aggregation across arrival intervals and CSV output.
//!
//! Three files come out of a grid run:
//!
//! * cells: one row per (park, strategy, budget, lambda) cell
//! * aggregate: one row per (park, strategy, budget), averaged over lambda
//! * series: the aggregate in long form, `park,strategy,budget,metric,value`
//!
//! Floats are written with six decimals. Lines starting with `#` before the
//! header carry the run configuration and are skipped by the reader.
//! `qt_ratio_std` is the population standard deviation of the per-cell
//! queuing-time ratios in the group.

use std::io::{Read, Write};

use thiserror::Error;

use crate::baselines::Strategy;
use crate::simulation::GridCell;

pub const CELLS_HEADER: &str =
    "park,strategy,budget,lambda,agents,avg_qt,avg_pop,utility,welfare,qt_ratio,avg_qt_markov,qt_ratio_markov";
pub const AGGREGATE_HEADER: &str =
    "park,strategy,budget,cells,avg_qt_mean,avg_pop_mean,utility_mean,qt_ratio_mean,qt_ratio_std,qt_ratio_markov_mean";
pub const SERIES_HEADER: &str = "park,strategy,budget,metric,value";

#[derive(Debug, Error)]
pub enum ExportError {
    #[error("nothing to aggregate")]
    Empty,
    #[error("line {line}: {message}")]
    Parse { line: u64, message: String },
    #[error("csv: {0}")]
    Csv(#[from] csv::Error),
    #[error("io: {0}")]
    Io(#[from] std::io::Error),
}

/// The per-cell numbers the aggregate needs; what a cells CSV row holds.
#[derive(Debug, Clone, PartialEq)]
pub struct CellRow {
    pub park: String,
    pub strategy: Strategy,
    pub budget: f64,
    pub lambda: f64,
    pub agents: usize,
    pub avg_qt: f64,
    pub avg_pop: f64,
    pub utility: f64,
    pub welfare: f64,
    pub qt_ratio: f64,
    pub avg_qt_markov: f64,
    pub qt_ratio_markov: f64,
}

impl From<&GridCell> for CellRow {
    fn from(c: &GridCell) -> Self {
        let r = &c.result;
        Self {
            park: c.park.clone(),
            strategy: r.config.strategy,
            budget: r.config.budget,
            lambda: r.config.lambda,
            agents: r.n_agents,
            avg_qt: r.avg_qt,
            avg_pop: r.avg_pop,
            utility: r.utility,
            welfare: r.welfare,
            qt_ratio: r.qt_ratio,
            avg_qt_markov: r.avg_qt_markov,
            qt_ratio_markov: r.qt_ratio_markov,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct AggregateRow {
    pub park: String,
    pub strategy: Strategy,
    pub budget: f64,
    pub cells: usize,
    pub avg_qt_mean: f64,
    pub avg_pop_mean: f64,
    pub utility_mean: f64,
    pub qt_ratio_mean: f64,
    pub qt_ratio_std: f64,
    pub qt_ratio_markov_mean: f64,
}

fn mean(values: impl Iterator<Item = f64>) -> f64 {
    let (sum, n) = values.fold((0.0, 0usize), |(s, n), v| (s + v, n + 1));
    sum / n as f64
}

/// Group cells by (park, strategy, budget) and average over lambda.
/// Rows come out sorted by park, strategy, then budget.
pub fn aggregate(cells: &[CellRow]) -> Result<Vec<AggregateRow>, ExportError> {
    if cells.is_empty() {
        return Err(ExportError::Empty);
    }
    let mut sorted: Vec<&CellRow> = cells.iter().collect();
    sorted.sort_by(|a, b| {
        a.park
            .cmp(&b.park)
            .then(a.strategy.cmp(&b.strategy))
            .then(a.budget.total_cmp(&b.budget))
            .then(a.lambda.total_cmp(&b.lambda))
    });
    let groups = sorted.chunk_by(|a, b| a.park == b.park && a.strategy == b.strategy && a.budget == b.budget);
    Ok(groups
        .map(|g| {
            let ratio = mean(g.iter().map(|c| c.qt_ratio));
            let var = mean(g.iter().map(|c| (c.qt_ratio - ratio).powi(2)));
            AggregateRow {
                park: g[0].park.clone(),
                strategy: g[0].strategy,
                budget: g[0].budget,
                cells: g.len(),
                avg_qt_mean: mean(g.iter().map(|c| c.avg_qt)),
                avg_pop_mean: mean(g.iter().map(|c| c.avg_pop)),
                utility_mean: mean(g.iter().map(|c| c.utility)),
                qt_ratio_mean: ratio,
                qt_ratio_std: var.sqrt(),
                qt_ratio_markov_mean: mean(g.iter().map(|c| c.qt_ratio_markov)),
            }
        })
        .collect())
}

/// Mean and spread over every (budget, lambda) cell of a park and strategy.
#[derive(Debug, Clone, PartialEq)]
pub struct SummaryRow {
    pub park: String,
    pub strategy: Strategy,
    pub cells: usize,
    pub qt_ratio_mean: f64,
    pub qt_ratio_std: f64,
    pub avg_pop_mean: f64,
    pub qt_ratio_markov_mean: f64,
}

pub fn summarize(cells: &[CellRow]) -> Vec<SummaryRow> {
    let mut sorted: Vec<&CellRow> = cells.iter().collect();
    sorted.sort_by(|a, b| a.park.cmp(&b.park).then(a.strategy.cmp(&b.strategy)));
    sorted
        .chunk_by(|a, b| a.park == b.park && a.strategy == b.strategy)
        .map(|g| {
            let ratio = mean(g.iter().map(|c| c.qt_ratio));
            SummaryRow {
                park: g[0].park.clone(),
                strategy: g[0].strategy,
                cells: g.len(),
                qt_ratio_mean: ratio,
                qt_ratio_std: mean(g.iter().map(|c| (c.qt_ratio - ratio).powi(2))).sqrt(),
                avg_pop_mean: mean(g.iter().map(|c| c.avg_pop)),
                qt_ratio_markov_mean: mean(g.iter().map(|c| c.qt_ratio_markov)),
            }
        })
        .collect()
}

fn preamble(out: &mut impl Write, comments: &[String]) -> std::io::Result<()> {
    for c in comments {
        writeln!(out, "# {c}")?;
    }
    Ok(())
}

pub fn write_cells_csv(mut out: impl Write, rows: &[CellRow], comments: &[String]) -> std::io::Result<()> {
    preamble(&mut out, comments)?;
    writeln!(out, "{CELLS_HEADER}")?;
    for r in rows {
        writeln!(
            out,
            "{},{},{:.6},{:.6},{},{:.6},{:.6},{:.6},{:.6},{:.6},{:.6},{:.6}",
            r.park,
            r.strategy,
            r.budget,
            r.lambda,
            r.agents,
            r.avg_qt,
            r.avg_pop,
            r.utility,
            r.welfare,
            r.qt_ratio,
            r.avg_qt_markov,
            r.qt_ratio_markov
        )?;
    }
    out.flush()
}

pub fn write_aggregate_csv(mut out: impl Write, rows: &[AggregateRow], comments: &[String]) -> std::io::Result<()> {
    preamble(&mut out, comments)?;
    writeln!(out, "{AGGREGATE_HEADER}")?;
    for r in rows {
        writeln!(
            out,
            "{},{},{:.6},{},{:.6},{:.6},{:.6},{:.6},{:.6},{:.6}",
            r.park,
            r.strategy,
            r.budget,
            r.cells,
            r.avg_qt_mean,
            r.avg_pop_mean,
            r.utility_mean,
            r.qt_ratio_mean,
            r.qt_ratio_std,
            r.qt_ratio_markov_mean
        )?;
    }
    out.flush()
}

pub fn write_series_csv(mut out: impl Write, rows: &[AggregateRow], comments: &[String]) -> std::io::Result<()> {
    preamble(&mut out, comments)?;
    writeln!(out, "{SERIES_HEADER}")?;
    for r in rows {
        for (metric, value) in [
            ("avg_qt", r.avg_qt_mean),
            ("avg_pop", r.avg_pop_mean),
            ("utility", r.utility_mean),
            ("qt_ratio", r.qt_ratio_mean),
        ] {
            writeln!(out, "{},{},{:.6},{metric},{value:.6}", r.park, r.strategy, r.budget)?;
        }
    }
    out.flush()
}

/// Parse a cells CSV written by [`write_cells_csv`].
pub fn read_cells_csv(input: impl Read) -> Result<Vec<CellRow>, ExportError> {
    let mut rdr = csv::ReaderBuilder::new().comment(Some(b'#')).from_reader(input);
    let header: Vec<String> = rdr.headers()?.iter().map(str::to_string).collect();
    if header.join(",") != CELLS_HEADER {
        return Err(ExportError::Parse { line: 1, message: format!("unexpected header `{}`", header.join(",")) });
    }
    let mut rows = Vec::new();
    for rec in rdr.records() {
        let rec = rec?;
        let line = rec.position().map_or(0, |p| p.line());
        let num = |i: usize| -> Result<f64, ExportError> {
            rec[i].parse().map_err(|e| ExportError::Parse { line, message: format!("column {i}: {e}") })
        };
        rows.push(CellRow {
            park: rec[0].to_string(),
            strategy: rec[1].parse().map_err(|message| ExportError::Parse { line, message })?,
            budget: num(2)?,
            lambda: num(3)?,
            agents: rec[4].parse().map_err(|e| ExportError::Parse { line, message: format!("agents: {e}") })?,
            avg_qt: num(5)?,
            avg_pop: num(6)?,
            utility: num(7)?,
            welfare: num(8)?,
            qt_ratio: num(9)?,
            avg_qt_markov: num(10)?,
            qt_ratio_markov: num(11)?,
        });
    }
    Ok(rows)
}
