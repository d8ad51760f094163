//! Multi-agent arrival simulation and the parameter grid driver.
//!
//! Agents arrive every `lambda` minutes while the arrival minute is below the
//! horizon. Each gets a path from the active strategy, is scheduled against
//! the live occupancy ledger, and then committed to it. Within one run agents
//! are processed strictly in arrival order.

use std::fmt;
use std::sync::Arc;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::baselines::{baseline_path, Strategy};
use crate::park::{FacilityId, Park};
use crate::paths::{find_feasible_paths, FeasibleSet, PathError, DEFAULT_DIST_CAP, DEFAULT_MAX_PATHS};
use crate::queue::{legs, schedule_legs, Leg, QueueLedger, SinglePathLedger};
use crate::transition::{argmax, construct_tm, TransitionError, TransitionMatrix, DEFAULT_Q_MIN};

/// Time budgets swept by default: 60 to 360 minutes every 30.
pub fn default_budgets() -> Vec<f64> {
    (0..=10).map(|k| 60.0 + 30.0 * f64::from(k)).collect()
}

/// Arrival intervals swept by default: 0.01..0.09 then 0.1..1.0.
pub fn default_lambdas() -> Vec<f64> {
    let fine = (1..=9).map(|k| f64::from(k) / 100.0);
    let coarse = (1..=10).map(|k| f64::from(k) / 10.0);
    fine.chain(coarse).collect()
}

#[derive(Debug, Error)]
pub enum SimulationError {
    #[error("invalid configuration: {0}")]
    Config(String),
    #[error("SCAIR needs a transition matrix")]
    MissingMatrix,
    #[error("transition matrix has {matrix} states but the feasible set has {feasible} paths")]
    MatrixMismatch { matrix: usize, feasible: usize },
    #[error(transparent)]
    Path(#[from] PathError),
    #[error(transparent)]
    Transition(#[from] TransitionError),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SimulationConfig {
    pub strategy: Strategy,
    /// Per-agent time budget, minutes.
    pub budget: f64,
    /// Minutes between consecutive arrivals.
    pub lambda: f64,
    /// Hop distance cap, meters.
    pub dist_cap: f64,
    /// Agents arrive while their start minute is below this.
    pub horizon: f64,
    /// Floor on queue time in utility denominators.
    pub q_min: f64,
}

impl SimulationConfig {
    pub fn new(strategy: Strategy, budget: f64, lambda: f64) -> Self {
        Self { strategy, budget, lambda, dist_cap: DEFAULT_DIST_CAP, horizon: budget, q_min: DEFAULT_Q_MIN }
    }

    fn validate(&self) -> Result<(), SimulationError> {
        let bad = |m: String| Err(SimulationError::Config(m));
        if !(self.budget > 0.0) {
            return bad(format!("budget must be positive (got {})", self.budget));
        }
        if !(self.lambda > 0.0) || !self.lambda.is_finite() {
            return bad(format!("lambda must be positive (got {})", self.lambda));
        }
        if !(self.horizon >= self.lambda) || !self.horizon.is_finite() {
            return bad(format!("horizon {} must be at least lambda {}", self.horizon, self.lambda));
        }
        if !(self.q_min > 0.0) {
            return bad(format!("q_min must be positive (got {})", self.q_min));
        }
        if !(self.dist_cap > 0.0) {
            return bad(format!("dist_cap must be positive (got {})", self.dist_cap));
        }
        Ok(())
    }
}

/// Number of `k >= 0` with `k * lambda < horizon`.
pub fn agent_count(horizon: f64, lambda: f64) -> usize {
    let mut n = (horizon / lambda).ceil().max(0.0) as usize;
    while n > 0 && (n - 1) as f64 * lambda >= horizon {
        n -= 1;
    }
    while (n as f64) * lambda < horizon {
        n += 1;
    }
    n
}

#[derive(Debug, Clone, PartialEq)]
pub struct AgentRecord {
    pub agent_index: usize,
    pub start_minute: f64,
    /// Index into the feasible set; `None` for baseline paths.
    pub path_index: Option<usize>,
    pub path: Arc<[FacilityId]>,
    /// Queue time against every earlier agent.
    pub queue_time: f64,
    /// Queue time against the immediately preceding agent alone.
    pub markov_queue_time: f64,
    pub popularity: f64,
    /// `popularity / max(queue_time, q_min)`.
    pub utility: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SimulationResult {
    pub config: SimulationConfig,
    pub n_agents: usize,
    /// Empty when dropped by the grid driver.
    pub agents: Vec<AgentRecord>,
    pub avg_qt: f64,
    pub avg_pop: f64,
    /// Mean agent utility.
    pub utility: f64,
    /// Sum of agent utilities.
    pub welfare: f64,
    /// `avg_qt / budget`.
    pub qt_ratio: f64,
    pub avg_qt_markov: f64,
    pub qt_ratio_markov: f64,
}

struct Totals {
    qt: f64,
    pop: f64,
    utility: f64,
    markov: f64,
}

/// Path index (SCAIR only), sequence, precomputed legs, popularity.
type Candidate = (Option<usize>, Arc<[FacilityId]>, Vec<Leg>, f64);

/// Run one simulation cell.
pub fn run_simulation(
    park: &Park,
    feasible: &FeasibleSet,
    tm: Option<&TransitionMatrix>,
    config: &SimulationConfig,
) -> Result<SimulationResult, SimulationError> {
    config.validate()?;
    let n_agents = agent_count(config.horizon, config.lambda);

    // Candidate paths and how the next one is picked.
    let (candidates, scair): (Vec<Candidate>, Option<&TransitionMatrix>) =
        match baseline_path(config.strategy, park, config.budget, config.dist_cap)? {
            Some(p) => {
                let pop = p.popularity(park);
                let l = legs(park, &p.facilities);
                (vec![(None, Arc::from(p.facilities), l, pop)], None)
            }
            None => {
                let tm = tm.ok_or(SimulationError::MissingMatrix)?;
                if tm.size() != feasible.len() || feasible.is_empty() {
                    return Err(SimulationError::MatrixMismatch { matrix: tm.size(), feasible: feasible.len() });
                }
                let c = feasible
                    .paths
                    .iter()
                    .enumerate()
                    .map(|(i, p)| {
                        (Some(i), Arc::from(p.facilities.as_slice()), legs(park, &p.facilities), p.popularity(park))
                    })
                    .collect();
                (c, Some(tm))
            }
        };

    let first = match scair {
        Some(_) => argmax(&candidates.iter().map(|c| c.3).collect::<Vec<_>>()),
        None => 0,
    };

    let mut ledger = QueueLedger::new();
    let mut agents = Vec::with_capacity(n_agents);
    let mut totals = Totals { qt: 0.0, pop: 0.0, utility: 0.0, markov: 0.0 };
    let mut previous: Option<(usize, f64)> = None;
    for k in 0..n_agents {
        let start = k as f64 * config.lambda;
        let choice = match (scair, previous) {
            (Some(tm), Some((prev, _))) => tm.next_path(prev)?,
            _ => first,
        };
        let (path_index, path, path_legs, popularity) = &candidates[choice];

        let arrivals = schedule_legs(path_legs, start, &ledger);
        let queue_time: f64 = arrivals.iter().map(|a| a.wait).sum();
        ledger.commit(&arrivals);

        let markov_queue_time = match previous {
            Some((prev, prev_start)) => {
                let alone = schedule_legs(&candidates[prev].2, prev_start, &QueueLedger::new());
                let pair = SinglePathLedger::new(park.len(), &alone);
                crate::queue::legs_queue_time(path_legs, start, &pair)
            }
            None => 0.0,
        };

        let utility = popularity / queue_time.max(config.q_min);
        totals.qt += queue_time;
        totals.pop += popularity;
        totals.utility += utility;
        totals.markov += markov_queue_time;
        agents.push(AgentRecord {
            agent_index: k,
            start_minute: start,
            path_index: *path_index,
            path: Arc::clone(path),
            queue_time,
            markov_queue_time,
            popularity: *popularity,
            utility,
        });
        previous = Some((choice, start));
    }

    let n = n_agents as f64;
    Ok(SimulationResult {
        config: *config,
        n_agents,
        agents,
        avg_qt: totals.qt / n,
        avg_pop: totals.pop / n,
        utility: totals.utility / n,
        welfare: totals.utility,
        qt_ratio: totals.qt / n / config.budget,
        avg_qt_markov: totals.markov / n,
        qt_ratio_markov: totals.markov / n / config.budget,
    })
}

/// A park with the label used in reports.
#[derive(Debug, Clone, PartialEq)]
pub struct NamedPark {
    pub name: String,
    pub park: Park,
}

impl NamedPark {
    pub fn new(name: impl Into<String>, park: Park) -> Self {
        Self { name: name.into(), park }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct GridSpec {
    pub budgets: Vec<f64>,
    pub lambdas: Vec<f64>,
    pub strategies: Vec<Strategy>,
    pub dist_cap: f64,
    /// `None` means each cell's horizon equals its budget.
    pub horizon: Option<f64>,
    pub q_min: f64,
    pub max_paths: usize,
    /// Keep per-agent records in the returned cells.
    pub keep_agents: bool,
}

impl Default for GridSpec {
    fn default() -> Self {
        Self {
            budgets: default_budgets(),
            lambdas: default_lambdas(),
            strategies: Strategy::ALL.to_vec(),
            dist_cap: DEFAULT_DIST_CAP,
            horizon: None,
            q_min: DEFAULT_Q_MIN,
            max_paths: DEFAULT_MAX_PATHS,
            keep_agents: false,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct GridCell {
    pub park: String,
    pub result: SimulationResult,
}

#[derive(Debug, Error)]
pub struct GridError {
    pub park: String,
    pub budget: f64,
    pub lambda: Option<f64>,
    pub strategy: Option<Strategy>,
    #[source]
    pub source: SimulationError,
}

impl fmt::Display for GridError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "cell park={} budget={}", self.park, self.budget)?;
        if let Some(l) = self.lambda {
            write!(f, " lambda={l}")?;
        }
        if let Some(s) = self.strategy {
            write!(f, " strategy={s}")?;
        }
        write!(f, ": {}", self.source)
    }
}

impl GridError {
    /// True when the cell failed on the feasible-set size limit.
    pub fn is_resource_limit(&self) -> bool {
        matches!(self.source, SimulationError::Path(PathError::TooManyPaths { .. }))
    }
}

fn map_ordered<T, U, E, F>(items: &[T], f: F) -> Result<Vec<U>, E>
where
    T: Sync,
    U: Send,
    E: Send,
    F: Fn(&T) -> Result<U, E> + Sync + Send,
{
    #[cfg(feature = "parallel")]
    {
        use rayon::prelude::*;
        items.par_iter().map(f).collect()
    }
    #[cfg(not(feature = "parallel"))]
    {
        items.iter().map(f).collect()
    }
}

/// Run every (park, budget, lambda, strategy) cell. Output order is the
/// nested loop order regardless of how cells are scheduled across threads.
pub fn simulate_grid(parks: &[NamedPark], spec: &GridSpec) -> Result<Vec<GridCell>, GridError> {
    let simple = |park: &str, budget: f64, source: SimulationError| GridError {
        park: park.to_string(),
        budget,
        lambda: None,
        strategy: None,
        source,
    };
    if parks.is_empty() || spec.budgets.is_empty() || spec.lambdas.is_empty() || spec.strategies.is_empty() {
        return Err(simple("-", f64::NAN, SimulationError::Config("grid axes must be non-empty".into())));
    }

    let pairs: Vec<(usize, f64)> = (0..parks.len()).flat_map(|p| spec.budgets.iter().map(move |&b| (p, b))).collect();
    let feasible: Vec<FeasibleSet> = map_ordered(&pairs, |&(p, budget)| {
        find_feasible_paths(&parks[p].park, budget, spec.dist_cap, spec.max_paths)
            .map_err(|e| simple(&parks[p].name, budget, e.into()))
    })?;

    let mut cells = Vec::new();
    for (pair_index, _) in pairs.iter().enumerate() {
        for &lambda in &spec.lambdas {
            for &strategy in &spec.strategies {
                cells.push((pair_index, lambda, strategy));
            }
        }
    }

    map_ordered(&cells, |&(pair_index, lambda, strategy)| {
        let (p, budget) = pairs[pair_index];
        let named = &parks[p];
        let fs = &feasible[pair_index];
        let config = SimulationConfig {
            strategy,
            budget,
            lambda,
            dist_cap: spec.dist_cap,
            horizon: spec.horizon.unwrap_or(budget),
            q_min: spec.q_min,
        };
        let run = || -> Result<SimulationResult, SimulationError> {
            let tm = match strategy {
                Strategy::Scair => Some(construct_tm(&named.park, fs, lambda, spec.q_min)?),
                _ => None,
            };
            let mut result = run_simulation(&named.park, fs, tm.as_ref(), &config)?;
            if !spec.keep_agents {
                result.agents = Vec::new();
            }
            Ok(result)
        };
        run().map(|result| GridCell { park: named.name.clone(), result }).map_err(|source| GridError {
            park: named.name.clone(),
            budget,
            lambda: Some(lambda),
            strategy: Some(strategy),
            source,
        })
    })
}
