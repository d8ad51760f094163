//! Hour-bucketed occupancy ledger and expected queuing times.
//!
//! Every visitor already expected at facility `f` during clock hour `h` adds
//! `Dur(f) / Cap(f)` minutes to the wait of a newcomer arriving at `f` in the
//! same hour. Waits delay everything after them on the path, so they also
//! decide which hour the later facilities fall into.

use std::collections::HashMap;

use crate::park::{FacilityId, Park};

/// Clock hour containing `minute` (floor of minute / 60).
#[inline]
pub fn hour_bucket(minute: f64) -> i64 {
    (minute / 60.0).floor() as i64
}

/// Read access to occupancy counts.
pub trait Occupancy {
    /// Visitors already expected at `facility` during `hour`.
    fn occupancy(&self, facility: FacilityId, hour: i64) -> u32;
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct QueueLedger {
    counts: HashMap<(FacilityId, i64), u32>,
    mass: u64,
}

impl QueueLedger {
    pub fn new() -> Self {
        Self::default()
    }

    /// Record one agent's realized visits.
    pub fn commit(&mut self, arrivals: &[FacilityArrival]) {
        for a in arrivals {
            *self.counts.entry((a.facility, hour_bucket(a.arrival_minute))).or_insert(0) += 1;
        }
        self.mass += arrivals.len() as u64;
    }

    /// Sum of all counts.
    pub fn total_mass(&self) -> u64 {
        self.mass
    }
}

impl Occupancy for QueueLedger {
    fn occupancy(&self, facility: FacilityId, hour: i64) -> u32 {
        self.counts.get(&(facility, hour)).copied().unwrap_or(0)
    }
}

/// Occupancy of exactly one other visitor: facility -> arrival hour.
#[derive(Debug, Clone, PartialEq)]
pub struct SinglePathLedger {
    hours: Vec<Option<i64>>,
}

impl SinglePathLedger {
    pub fn new(n_facilities: usize, arrivals: &[FacilityArrival]) -> Self {
        let mut hours = vec![None; n_facilities];
        for a in arrivals {
            hours[a.facility] = Some(hour_bucket(a.arrival_minute));
        }
        Self { hours }
    }
}

impl Occupancy for SinglePathLedger {
    #[inline]
    fn occupancy(&self, facility: FacilityId, hour: i64) -> u32 {
        u32::from(self.hours[facility] == Some(hour))
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FacilityArrival {
    pub facility: FacilityId,
    /// Absolute simulation minute.
    pub arrival_minute: f64,
    /// Queue wait at this facility, minutes.
    pub wait: f64,
}

/// Per-visit constants of a path, precomputed once so that repeated
/// scheduling does no trigonometry.
#[derive(Debug, Clone, Copy, PartialEq)]
pub(crate) struct Leg {
    pub facility: FacilityId,
    pub duration: f64,
    pub unit_wait: f64,
    /// Walking time to the next leg; zero on the last.
    pub travel_after: f64,
}

pub(crate) fn legs(park: &Park, path: &[FacilityId]) -> Vec<Leg> {
    let f = park.facilities();
    path.iter()
        .enumerate()
        .map(|(k, &id)| Leg {
            facility: id,
            duration: f[id].duration,
            unit_wait: f[id].unit_wait(),
            travel_after: path.get(k + 1).map_or(0.0, |&next| park.travel_time(id, next).expect("valid path")),
        })
        .collect()
}

/// Walk `legs` from `start_minute`, reporting each arrival.
#[inline]
pub(crate) fn walk_legs<O: Occupancy + ?Sized>(
    legs: &[Leg],
    start_minute: f64,
    ledger: &O,
    mut visit: impl FnMut(FacilityArrival),
) {
    let mut t = start_minute;
    for leg in legs {
        let occupancy = ledger.occupancy(leg.facility, hour_bucket(t));
        let wait = if occupancy == 0 { 0.0 } else { f64::from(occupancy) * leg.unit_wait };
        visit(FacilityArrival { facility: leg.facility, arrival_minute: t, wait });
        t = t + wait + leg.duration;
        t += leg.travel_after;
    }
}

pub(crate) fn legs_queue_time<O: Occupancy + ?Sized>(legs: &[Leg], start_minute: f64, ledger: &O) -> f64 {
    let mut total = 0.0;
    walk_legs(legs, start_minute, ledger, |a| total += a.wait);
    total
}

pub(crate) fn schedule_legs<O: Occupancy + ?Sized>(
    legs: &[Leg],
    start_minute: f64,
    ledger: &O,
) -> Vec<FacilityArrival> {
    let mut out = Vec::with_capacity(legs.len());
    walk_legs(legs, start_minute, ledger, |a| out.push(a));
    out
}

/// Expected wait at `facility` for a newcomer in `hour`.
pub fn facility_queue_time<O: Occupancy + ?Sized>(park: &Park, facility: FacilityId, hour: i64, ledger: &O) -> f64 {
    let occupancy = ledger.occupancy(facility, hour);
    if occupancy == 0 {
        return 0.0;
    }
    f64::from(occupancy) * park.facilities()[facility].unit_wait()
}

/// Arrival timeline of `path` started at `start_minute`. The ledger is not
/// modified.
pub fn schedule_path<O: Occupancy + ?Sized>(
    park: &Park,
    path: &[FacilityId],
    start_minute: f64,
    ledger: &O,
) -> Vec<FacilityArrival> {
    schedule_legs(&legs(park, path), start_minute, ledger)
}

/// Total queuing time of `path` started at `start_minute`.
pub fn path_queue_time<O: Occupancy + ?Sized>(park: &Park, path: &[FacilityId], start_minute: f64, ledger: &O) -> f64 {
    legs_queue_time(&legs(park, path), start_minute, ledger)
}
