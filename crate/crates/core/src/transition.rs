//! Row-stochastic transition matrix over the feasible paths.
//!
//! Entry (i, j) scores handing path j to the next arrival when the previous
//! arrival took path i: the popularity of path j divided by the queue path j
//! would see if it started `lambda` minutes after path i with nobody else in
//! the park. The queue is floored at `q_min` and rows are normalized to sum
//! to one.

use std::io::Write;

use thiserror::Error;

use crate::park::Park;
use crate::paths::FeasibleSet;
use crate::queue::{legs, legs_queue_time, schedule_legs, Leg, QueueLedger, SinglePathLedger};

/// Default floor on queue time in utility denominators, minutes.
pub const DEFAULT_Q_MIN: f64 = 1.0;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum TransitionError {
    #[error("feasible set is empty")]
    EmptyFeasibleSet,
    #[error("arrival interval must be positive (got {0})")]
    BadLambda(f64),
    #[error("queue floor must be positive (got {0})")]
    BadQMin(f64),
    #[error("path index {index} out of range for a {size}-path matrix")]
    BadIndex { index: usize, size: usize },
}

#[derive(Debug, Clone, PartialEq)]
pub struct TransitionMatrix {
    size: usize,
    lambda: f64,
    q_min: f64,
    /// Row-major, `size * size`.
    entries: Vec<f64>,
}

impl TransitionMatrix {
    /// Normalize raw non-negative scores row by row. All-zero rows become
    /// uniform.
    pub fn from_raw(size: usize, mut entries: Vec<f64>, lambda: f64, q_min: f64) -> Self {
        assert_eq!(entries.len(), size * size, "raw matrix has the wrong shape");
        for row in entries.chunks_mut(size.max(1)) {
            normalize_row(row);
        }
        Self { size, lambda, q_min, entries }
    }

    pub fn size(&self) -> usize {
        self.size
    }

    pub fn lambda(&self) -> f64 {
        self.lambda
    }

    pub fn q_min(&self) -> f64 {
        self.q_min
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.entries[i * self.size + j]
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.entries[i * self.size..(i + 1) * self.size]
    }

    pub fn rows(&self) -> impl Iterator<Item = &[f64]> {
        self.entries.chunks(self.size)
    }

    pub fn row_sums(&self) -> Vec<f64> {
        self.rows().map(|r| r.iter().sum()).collect()
    }

    /// Successor of `previous`: the largest entry of its row, lowest index on
    /// ties.
    pub fn next_path(&self, previous: usize) -> Result<usize, TransitionError> {
        if previous >= self.size {
            return Err(TransitionError::BadIndex { index: previous, size: self.size });
        }
        Ok(argmax(self.row(previous)))
    }

    /// Header `from,0,1,...`; one row per predecessor path.
    pub fn write_csv(&self, mut out: impl Write) -> std::io::Result<()> {
        write!(out, "from")?;
        for j in 0..self.size {
            write!(out, ",{j}")?;
        }
        writeln!(out)?;
        for (i, row) in self.rows().enumerate() {
            write!(out, "{i}")?;
            for v in row {
                write!(out, ",{v:.9}")?;
            }
            writeln!(out)?;
        }
        out.flush()
    }
}

/// First index holding the maximum.
pub(crate) fn argmax(values: &[f64]) -> usize {
    let mut best = 0;
    for (j, &v) in values.iter().enumerate().skip(1) {
        if v > values[best] {
            best = j;
        }
    }
    best
}

fn normalize_row(row: &mut [f64]) {
    let sum: f64 = row.iter().sum();
    if sum > 0.0 {
        row.iter_mut().for_each(|v| *v /= sum);
    } else {
        let u = 1.0 / row.len() as f64;
        row.iter_mut().for_each(|v| *v = u);
    }
}

/// Build the transition matrix for arrival interval `lambda` (minutes).
pub fn construct_tm(
    park: &Park,
    feasible: &FeasibleSet,
    lambda: f64,
    q_min: f64,
) -> Result<TransitionMatrix, TransitionError> {
    if feasible.is_empty() {
        return Err(TransitionError::EmptyFeasibleSet);
    }
    if !(lambda > 0.0) || !lambda.is_finite() {
        return Err(TransitionError::BadLambda(lambda));
    }
    if !(q_min > 0.0) {
        return Err(TransitionError::BadQMin(q_min));
    }
    let m = feasible.len();
    let all_legs: Vec<Vec<Leg>> = feasible.paths.iter().map(|p| legs(park, &p.facilities)).collect();
    let popularity: Vec<f64> = feasible.paths.iter().map(|p| p.popularity(park)).collect();

    let fill_row = |i: usize, row: &mut [f64]| {
        let predecessor = schedule_legs(&all_legs[i], 0.0, &QueueLedger::new());
        let ledger = SinglePathLedger::new(park.len(), &predecessor);
        for (j, cell) in row.iter_mut().enumerate() {
            let q = legs_queue_time(&all_legs[j], lambda, &ledger);
            *cell = popularity[j] / q.max(q_min);
        }
        normalize_row(row);
    };

    let mut entries = vec![0.0; m * m];
    #[cfg(feature = "parallel")]
    {
        use rayon::prelude::*;
        entries.par_chunks_mut(m).enumerate().for_each(|(i, row)| fill_row(i, row));
    }
    #[cfg(not(feature = "parallel"))]
    entries.chunks_mut(m).enumerate().for_each(|(i, row)| fill_row(i, row));

    Ok(TransitionMatrix { size: m, lambda, q_min, entries })
}
