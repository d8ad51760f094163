//! Feasible-path enumeration.
//!
//! Breadth-first frontier expansion from the start facility. A frontier path
//! is extended by every unvisited facility within the hop distance cap of its
//! last facility; when there is none, by the single nearest unvisited
//! facility. Extensions survive only if the total time stays within budget.
//! A path that produced at least one surviving extension is replaced by its
//! children, otherwise it is kept as maximal.

use std::collections::HashSet;
use std::io::Write;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::park::{FacilityId, Park, ParkError};

/// Default hop distance cap in meters.
pub const DEFAULT_DIST_CAP: f64 = 200.0;

/// Default hard limit on the number of enumerated paths.
pub const DEFAULT_MAX_PATHS: usize = 100_000;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum PathError {
    #[error("time budget must be positive (got {0})")]
    BadBudget(f64),
    #[error("distance cap must be positive (got {0})")]
    BadDistCap(f64),
    #[error("path enumeration needs at least 2 facilities (park has {0})")]
    TooFewFacilities(usize),
    #[error("feasible set exceeds {cap} paths; lower the time budget or the park size")]
    TooManyPaths { cap: usize },
    #[error("path is empty")]
    EmptyPath,
    #[error(transparent)]
    Park(#[from] ParkError),
}

/// Time after walking `travel` minutes and then visiting for `duration`.
///
/// Every total-time computation goes through this so that incremental and
/// from-scratch sums agree bit for bit.
#[inline]
pub(crate) fn extend_time(elapsed: f64, travel: f64, duration: f64) -> f64 {
    elapsed + travel + duration
}

/// Visit durations plus walking times along `facilities`, in minutes.
pub fn total_time(park: &Park, facilities: &[FacilityId]) -> Result<f64, PathError> {
    let (&first, rest) = facilities.split_first().ok_or(PathError::EmptyPath)?;
    let mut t = park.facility(first)?.duration;
    let mut prev = first;
    for &f in rest {
        t = extend_time(t, park.travel_time(prev, f)?, park.facility(f)?.duration);
        prev = f;
    }
    Ok(t)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Path {
    pub facilities: Vec<FacilityId>,
    /// Minutes.
    pub total_time: f64,
}

impl Path {
    pub fn new(park: &Park, facilities: Vec<FacilityId>) -> Result<Self, PathError> {
        let total_time = total_time(park, &facilities)?;
        Ok(Self { facilities, total_time })
    }

    pub fn len(&self) -> usize {
        self.facilities.len()
    }

    pub fn is_empty(&self) -> bool {
        self.facilities.is_empty()
    }

    pub fn last(&self) -> FacilityId {
        *self.facilities.last().expect("paths are never empty")
    }

    pub fn contains(&self, f: FacilityId) -> bool {
        self.facilities.contains(&f)
    }

    /// Sum of facility popularities, added in id order so that paths over
    /// the same facilities get bit-identical scores.
    pub fn popularity(&self, park: &Park) -> f64 {
        let mut ids = self.facilities.clone();
        ids.sort_unstable();
        ids.iter().map(|&f| park.facilities()[f].popularity).sum()
    }

    /// Facility ids joined with '-'.
    pub fn label(&self) -> String {
        let ids: Vec<String> = self.facilities.iter().map(ToString::to_string).collect();
        ids.join("-")
    }
}

/// Candidate next facilities from `last`: every unvisited facility within
/// `dist_cap`, or else the nearest unvisited one. Empty when all are visited.
pub(crate) fn next_candidates(park: &Park, last: FacilityId, visited: &[bool], dist_cap: f64) -> Vec<FacilityId> {
    let viable: Vec<FacilityId> =
        (0..park.len()).filter(|&f| !visited[f] && park.distance(last, f).expect("ids in range") <= dist_cap).collect();
    if !viable.is_empty() {
        return viable;
    }
    park.nearest_where(last, |f| !visited[f]).into_iter().collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeasibleSet {
    /// Lexicographic by facility sequence.
    pub paths: Vec<Path>,
    pub budget: f64,
    pub dist_cap: f64,
}

impl FeasibleSet {
    pub fn len(&self) -> usize {
        self.paths.len()
    }

    pub fn is_empty(&self) -> bool {
        self.paths.is_empty()
    }

    /// One row per path: `path_index,facilities,total_time_min`.
    pub fn write_csv(&self, mut out: impl Write) -> std::io::Result<()> {
        writeln!(out, "path_index,facilities,total_time_min")?;
        for (i, p) in self.paths.iter().enumerate() {
            writeln!(out, "{i},{},{:.6}", p.label(), p.total_time)?;
        }
        out.flush()
    }
}

/// Enumerate feasible paths under a time budget (minutes) and hop cap (meters).
pub fn find_feasible_paths(
    park: &Park,
    budget: f64,
    dist_cap: f64,
    max_paths: usize,
) -> Result<FeasibleSet, PathError> {
    if !(budget > 0.0) {
        return Err(PathError::BadBudget(budget));
    }
    if !(dist_cap > 0.0) {
        return Err(PathError::BadDistCap(dist_cap));
    }
    if park.len() < 2 {
        return Err(PathError::TooFewFacilities(park.len()));
    }
    let n = park.len();
    let seed = Path::new(park, vec![park.start()])?;
    if seed.total_time > budget {
        log::warn!(
            "start facility alone takes {:.2} min, over the {budget} min budget; returning it as the only path",
            seed.total_time
        );
        return Ok(FeasibleSet { paths: vec![seed], budget, dist_cap });
    }

    let mut done: Vec<Path> = Vec::new();
    let mut frontier = vec![seed];
    let mut visited = vec![false; n];
    while !frontier.is_empty() {
        let mut next: Vec<Path> = Vec::new();
        let mut seen: HashSet<Vec<FacilityId>> = HashSet::new();
        for path in frontier {
            if path.len() == n {
                done.push(path);
                continue;
            }
            visited.iter_mut().for_each(|v| *v = false);
            for &f in &path.facilities {
                visited[f] = true;
            }
            let last = path.last();
            let mut extended = false;
            for f in next_candidates(park, last, &visited, dist_cap) {
                let t = extend_time(path.total_time, park.travel_time(last, f)?, park.facilities()[f].duration);
                if t > budget {
                    continue;
                }
                let mut seq = path.facilities.clone();
                seq.push(f);
                if seen.insert(seq.clone()) {
                    next.push(Path { facilities: seq, total_time: t });
                    extended = true;
                }
            }
            if !extended {
                done.push(path);
            }
            if done.len() + next.len() > max_paths {
                return Err(PathError::TooManyPaths { cap: max_paths });
            }
        }
        frontier = next;
    }
    done.sort_by(|a, b| a.facilities.cmp(&b.facilities));
    Ok(FeasibleSet { paths: done, budget, dist_cap })
}
