//! Exhaustive reference solvers for toy-sized instances.
//!
//! `brute_force_paths` enumerates maximal itineraries by depth-first
//! recursion, independently of the breadth-first enumerator.
//! `brute_force_welfare` tries every assignment of feasible paths to a short
//! sequence of arrivals and keeps the best total utility. It reuses the
//! simulation's queue ledger, so only the search itself is under test.

use thiserror::Error;

use crate::park::{FacilityId, Park};
use crate::paths::{FeasibleSet, Path, PathError};
use crate::queue::{schedule_path, QueueLedger};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct OracleLimit {
    pub max_facilities: usize,
    pub max_agents: usize,
}

impl Default for OracleLimit {
    fn default() -> Self {
        Self { max_facilities: 6, max_agents: 4 }
    }
}

/// Largest number of assignments `brute_force_welfare` will evaluate.
pub const MAX_ASSIGNMENTS: u128 = 10_000_000;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum OracleError {
    #[error("park has {n} facilities; the oracle handles at most {max}")]
    ParkTooLarge { n: usize, max: usize },
    #[error("{n} agents exceed the oracle limit of {max}")]
    TooManyAgents { n: usize, max: usize },
    #[error("{count} assignments exceed the oracle limit of {MAX_ASSIGNMENTS}")]
    TooManyAssignments { count: u128 },
    #[error("feasible set is empty")]
    Empty,
    #[error(transparent)]
    Path(#[from] PathError),
}

/// Every maximal itinerary from the start facility, in lexicographic order.
pub fn brute_force_paths(
    park: &Park,
    budget: f64,
    dist_cap: f64,
    limit: OracleLimit,
) -> Result<Vec<Path>, OracleError> {
    if park.len() > limit.max_facilities {
        return Err(OracleError::ParkTooLarge { n: park.len(), max: limit.max_facilities });
    }
    let seed = Path::new(park, vec![park.start()])?;
    if seed.total_time > budget {
        return Ok(vec![seed]);
    }
    let mut out = Vec::new();
    extend(park, budget, dist_cap, seed, &mut out)?;
    out.sort_by(|a, b| a.facilities.cmp(&b.facilities));
    Ok(out)
}

fn extend(park: &Park, budget: f64, dist_cap: f64, path: Path, out: &mut Vec<Path>) -> Result<(), PathError> {
    let last = path.last();
    let unvisited: Vec<FacilityId> = (0..park.len()).filter(|f| !path.contains(*f)).collect();
    let mut near = Vec::new();
    for &f in &unvisited {
        if park.distance(last, f)? <= dist_cap {
            near.push(f);
        }
    }
    let options = if near.is_empty() {
        // Nearest unvisited, lowest id among equals.
        let mut best: Option<(f64, FacilityId)> = None;
        for &f in &unvisited {
            let d = park.distance(last, f)?;
            if best.is_none_or(|(bd, _)| d < bd) {
                best = Some((d, f));
            }
        }
        best.map(|(_, f)| f).into_iter().collect()
    } else {
        near
    };

    let mut grew = false;
    for f in options {
        let mut seq = path.facilities.clone();
        seq.push(f);
        let child = Path::new(park, seq)?;
        if child.total_time <= budget {
            grew = true;
            extend(park, budget, dist_cap, child, out)?;
        }
    }
    if !grew {
        out.push(path);
    }
    Ok(())
}

/// Total utility of handing `assignment[k]` to the agent arriving at
/// `k * lambda`, with queues from the full ledger.
pub fn assignment_welfare(park: &Park, feasible: &FeasibleSet, assignment: &[usize], lambda: f64, q_min: f64) -> f64 {
    let mut ledger = QueueLedger::new();
    let mut welfare = 0.0;
    for (k, &i) in assignment.iter().enumerate() {
        let path = &feasible.paths[i];
        let arrivals = schedule_path(park, &path.facilities, k as f64 * lambda, &ledger);
        let q: f64 = arrivals.iter().map(|a| a.wait).sum();
        welfare += path.popularity(park) / q.max(q_min);
        ledger.commit(&arrivals);
    }
    welfare
}

/// Best assignment of feasible paths to `n_agents` arrivals and its welfare.
/// Ties go to the lexicographically smallest assignment.
pub fn brute_force_welfare(
    park: &Park,
    feasible: &FeasibleSet,
    lambda: f64,
    n_agents: usize,
    q_min: f64,
    limit: OracleLimit,
) -> Result<(Vec<usize>, f64), OracleError> {
    if feasible.is_empty() {
        return Err(OracleError::Empty);
    }
    if n_agents > limit.max_agents {
        return Err(OracleError::TooManyAgents { n: n_agents, max: limit.max_agents });
    }
    let count = (feasible.len() as u128).checked_pow(n_agents as u32).unwrap_or(u128::MAX);
    if count > MAX_ASSIGNMENTS {
        return Err(OracleError::TooManyAssignments { count });
    }

    struct Search<'a> {
        park: &'a Park,
        feasible: &'a FeasibleSet,
        popularity: Vec<f64>,
        lambda: f64,
        q_min: f64,
        n_agents: usize,
        current: Vec<usize>,
        best: Option<(Vec<usize>, f64)>,
    }

    impl Search<'_> {
        fn go(&mut self, ledger: &QueueLedger, so_far: f64) {
            let k = self.current.len();
            if k == self.n_agents {
                if self.best.as_ref().is_none_or(|(_, w)| so_far > *w) {
                    self.best = Some((self.current.clone(), so_far));
                }
                return;
            }
            for i in 0..self.feasible.len() {
                let arrivals =
                    schedule_path(self.park, &self.feasible.paths[i].facilities, k as f64 * self.lambda, ledger);
                let q: f64 = arrivals.iter().map(|a| a.wait).sum();
                let mut next = ledger.clone();
                next.commit(&arrivals);
                self.current.push(i);
                self.go(&next, so_far + self.popularity[i] / q.max(self.q_min));
                self.current.pop();
            }
        }
    }

    let mut search = Search {
        park,
        feasible,
        popularity: feasible.paths.iter().map(|p| p.popularity(park)).collect(),
        lambda,
        q_min,
        n_agents,
        current: Vec::with_capacity(n_agents),
        best: None,
    };
    search.go(&QueueLedger::new(), 0.0);
    Ok(search.best.expect("at least one assignment"))
}
