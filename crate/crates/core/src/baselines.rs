//! Single-agent greedy itineraries used as comparison strategies.
//!
//! Each baseline grows one path from the start facility and stops at the
//! first extension that would break the time budget. They only look at static
//! facility properties, so every agent following a baseline gets the same
//! path.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::park::{FacilityId, Park};
use crate::paths::{extend_time, Path, PathError};

/// Meters; distance floor in popularity-over-distance scores.
pub const POD_MIN_DISTANCE: f64 = 1.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Strategy {
    /// Nearest unvisited facility next.
    DisOp,
    /// Most popular unvisited facility within the hop cap next.
    PopOp,
    /// Highest popularity per meter next.
    PodOp,
    /// Transition-matrix allocation across agents.
    Scair,
}

impl Strategy {
    pub const ALL: [Strategy; 4] = [Strategy::DisOp, Strategy::PopOp, Strategy::PodOp, Strategy::Scair];
    pub const BASELINES: [Strategy; 3] = [Strategy::DisOp, Strategy::PopOp, Strategy::PodOp];

    pub fn name(self) -> &'static str {
        match self {
            Strategy::DisOp => "DisOp",
            Strategy::PopOp => "PopOp",
            Strategy::PodOp => "PodOp",
            Strategy::Scair => "SCAIR",
        }
    }

    pub fn is_baseline(self) -> bool {
        self != Strategy::Scair
    }
}

impl fmt::Display for Strategy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Strategy {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Strategy::ALL
            .into_iter()
            .find(|k| k.name().eq_ignore_ascii_case(s.trim()))
            .ok_or_else(|| format!("unknown strategy `{s}` (expected disop, popop, podop or scair)"))
    }
}

/// Grow a path greedily. `choose` picks the next facility from the current
/// one given the visited mask; `None` ends the path.
fn greedy(
    park: &Park,
    budget: f64,
    mut choose: impl FnMut(FacilityId, &[bool]) -> Option<FacilityId>,
) -> Result<Path, PathError> {
    if !(budget > 0.0) {
        return Err(PathError::BadBudget(budget));
    }
    let mut path = Path::new(park, vec![park.start()])?;
    let mut visited = vec![false; park.len()];
    visited[park.start()] = true;
    while let Some(next) = choose(path.last(), &visited) {
        let t = extend_time(path.total_time, park.travel_time(path.last(), next)?, park.facilities()[next].duration);
        if t > budget {
            break;
        }
        visited[next] = true;
        path.facilities.push(next);
        path.total_time = t;
    }
    Ok(path)
}

/// Index of the best unvisited facility by `score`; the lowest id wins ties.
fn best_by(n: usize, visited: &[bool], mut score: impl FnMut(FacilityId) -> Option<f64>) -> Option<FacilityId> {
    let mut best: Option<(f64, FacilityId)> = None;
    for f in (0..n).filter(|&f| !visited[f]) {
        let Some(s) = score(f) else { continue };
        match best {
            Some((b, _)) if s <= b => {}
            _ => best = Some((s, f)),
        }
    }
    best.map(|(_, f)| f)
}

pub fn dis_op_path(park: &Park, budget: f64, _dist_cap: f64) -> Result<Path, PathError> {
    greedy(park, budget, |cur, visited| park.nearest_where(cur, |f| !visited[f]))
}

pub fn pop_op_path(park: &Park, budget: f64, dist_cap: f64) -> Result<Path, PathError> {
    let fac = park.facilities();
    greedy(park, budget, |cur, visited| {
        best_by(park.len(), visited, |f| {
            (park.distance(cur, f).expect("ids in range") <= dist_cap).then_some(fac[f].popularity)
        })
        .or_else(|| park.nearest_where(cur, |f| !visited[f]))
    })
}

pub fn pod_op_path(park: &Park, budget: f64, _dist_cap: f64) -> Result<Path, PathError> {
    let fac = park.facilities();
    greedy(park, budget, |cur, visited| {
        best_by(park.len(), visited, |f| {
            let d = park.distance(cur, f).expect("ids in range").max(POD_MIN_DISTANCE);
            Some(fac[f].popularity / d)
        })
    })
}

/// The fixed path a baseline hands to every agent; `None` for SCAIR.
pub fn baseline_path(strategy: Strategy, park: &Park, budget: f64, dist_cap: f64) -> Result<Option<Path>, PathError> {
    Ok(match strategy {
        Strategy::DisOp => Some(dis_op_path(park, budget, dist_cap)?),
        Strategy::PopOp => Some(pop_op_path(park, budget, dist_cap)?),
        Strategy::PodOp => Some(pod_op_path(park, budget, dist_cap)?),
        Strategy::Scair => None,
    })
}
