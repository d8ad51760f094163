//! Congestion-aware itinerary recommendation for theme parks.
//!
//! A park is a set of facilities with coordinates, ride durations, capacities
//! and popularity. Visitors arrive at a fixed interval and each receives an
//! itinerary starting from the entrance facility. Baseline strategies hand every
//! visitor the same greedy path; the transition-matrix strategy steers
//! consecutive visitors toward paths that overlap less with their predecessor.

// Validation uses `!(x > 0.0)` so that NaN is rejected too.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod baselines;
pub mod export;
pub mod ingest;
pub mod oracle;
pub mod park;
pub mod paths;
pub mod queue;
pub mod simulation;
pub mod transition;

pub use baselines::{baseline_path, Strategy};
pub use export::{aggregate, summarize, AggregateRow, CellRow, SummaryRow};
pub use ingest::{generate_park, load_park, read_park, write_park, SyntheticParkSpec};
pub use park::{Facility, FacilityId, Park};
pub use paths::{find_feasible_paths, FeasibleSet, Path, DEFAULT_DIST_CAP, DEFAULT_MAX_PATHS};
pub use queue::{path_queue_time, schedule_path, QueueLedger};
pub use simulation::{
    run_simulation, simulate_grid, GridCell, GridSpec, NamedPark, SimulationConfig, SimulationResult,
};
pub use transition::{construct_tm, TransitionMatrix, DEFAULT_Q_MIN};
