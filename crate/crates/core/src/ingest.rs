//! Park CSV files and seeded synthetic parks.
//!
//! File layout, one row per facility, UTF-8 with a header row:
//!
//! ```text
//! id,name,lat,lon,duration_min,capacity,popularity
//! 0,Entrance Plaza,28.3575,-81.5583,15,40,12.5
//! ```
//!
//! Ids must start at 0 and follow file order. Floats use '.' as the decimal
//! point and no thousands separators.
//!
//! Synthetic parks draw from ChaCha8 seeded with `seed_from_u64(seed)`. Each
//! uniform variate is `(next_u64() >> 11) * 2^-53` scaled onto its range, drawn
//! per facility in the order lat, lon, duration, popularity. That stream is
//! fixed, so a given spec yields the same park on every platform.

use std::fs::File;
use std::io::{Read, Write};
use std::path::Path as FsPath;

use rand_chacha::rand_core::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use crate::park::{Facility, Park, ParkError};

pub const PARK_HEADER: [&str; 7] = ["id", "name", "lat", "lon", "duration_min", "capacity", "popularity"];

#[derive(Debug, Error)]
pub enum IngestError {
    #[error("cannot open park file {path}: {source}")]
    Open {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("malformed header: expected `{}`, found `{found}`", PARK_HEADER.join(","))]
    Header { found: String },
    #[error("line {line}: {message}")]
    Row { line: u64, message: String },
    #[error("line {line}: duplicate facility id {id}")]
    DuplicateId { line: u64, id: usize },
    #[error("line {line}: facility id {id} out of sequence (expected {expected}); ids must be contiguous from 0")]
    NonContiguousId { line: u64, id: usize, expected: usize },
    #[error("line {line}: {source}")]
    Invalid {
        line: u64,
        #[source]
        source: ParkError,
    },
    #[error(transparent)]
    Park(#[from] ParkError),
    #[error("invalid synthetic park spec: {0}")]
    Spec(String),
    #[error("csv: {0}")]
    Csv(#[from] csv::Error),
    #[error("io: {0}")]
    Io(#[from] std::io::Error),
}

/// Load a park from a CSV file.
pub fn load_park(path: impl AsRef<FsPath>, start: usize, walking_speed: f64) -> Result<Park, IngestError> {
    let path = path.as_ref();
    let file = File::open(path).map_err(|source| IngestError::Open { path: path.display().to_string(), source })?;
    read_park(file, start, walking_speed)
}

pub fn read_park(reader: impl Read, start: usize, walking_speed: f64) -> Result<Park, IngestError> {
    let mut rdr =
        csv::ReaderBuilder::new().has_headers(true).trim(csv::Trim::All).comment(Some(b'#')).from_reader(reader);
    let header = rdr.headers()?.clone();
    if header.iter().ne(PARK_HEADER.iter().copied()) {
        return Err(IngestError::Header { found: header.iter().collect::<Vec<_>>().join(",") });
    }

    let mut facilities: Vec<Facility> = Vec::new();
    let mut seen = std::collections::HashSet::new();
    for record in rdr.records() {
        let record = record?;
        let line = record.position().map_or(0, |p| p.line());
        if record.len() != PARK_HEADER.len() {
            return Err(IngestError::Row {
                line,
                message: format!("expected {} fields, found {}", PARK_HEADER.len(), record.len()),
            });
        }
        let id: usize = parse_field(&record, 0, line)?;
        if !seen.insert(id) {
            return Err(IngestError::DuplicateId { line, id });
        }
        if id != facilities.len() {
            return Err(IngestError::NonContiguousId { line, id, expected: facilities.len() });
        }
        let facility = Facility {
            id,
            name: record[1].to_string(),
            lat: parse_field(&record, 2, line)?,
            lon: parse_field(&record, 3, line)?,
            duration: parse_field(&record, 4, line)?,
            capacity: parse_field(&record, 5, line)?,
            popularity: parse_field(&record, 6, line)?,
        };
        // Validate per row so the error carries the offending line.
        Park::new(vec![Facility { id: 0, ..facility.clone() }], 0, 1.0)
            .map_err(|source| IngestError::Invalid { line, source: relabel(source, id) })?;
        facilities.push(facility);
    }
    Ok(Park::new(facilities, start, walking_speed)?)
}

fn relabel(err: ParkError, id: usize) -> ParkError {
    match err {
        ParkError::NonPositiveDuration { value, .. } => ParkError::NonPositiveDuration { id, value },
        ParkError::NonPositiveCapacity { value, .. } => ParkError::NonPositiveCapacity { id, value },
        ParkError::NegativePopularity { value, .. } => ParkError::NegativePopularity { id, value },
        ParkError::BadCoordinates { lat, lon, .. } => ParkError::BadCoordinates { id, lat, lon },
        other => other,
    }
}

fn parse_field<T: std::str::FromStr>(record: &csv::StringRecord, idx: usize, line: u64) -> Result<T, IngestError>
where
    T::Err: std::fmt::Display,
{
    record[idx].parse().map_err(|e| IngestError::Row {
        line,
        message: format!("column `{}`: cannot parse `{}`: {e}", PARK_HEADER[idx], &record[idx]),
    })
}

/// Write a park in the loader's schema. Floats use shortest round-trip form.
pub fn write_park(park: &Park, writer: impl Write) -> Result<(), IngestError> {
    let mut w = csv::WriterBuilder::new().terminator(csv::Terminator::Any(b'\n')).from_writer(writer);
    w.write_record(PARK_HEADER)?;
    for f in park.facilities() {
        w.write_record([
            f.id.to_string(),
            f.name.clone(),
            f.lat.to_string(),
            f.lon.to_string(),
            f.duration.to_string(),
            f.capacity.to_string(),
            f.popularity.to_string(),
        ])?;
    }
    w.flush()?;
    Ok(())
}

#[derive(Debug, Clone, PartialEq)]
pub struct SyntheticParkSpec {
    pub n_facilities: usize,
    pub seed: u64,
    /// (lat_min, lat_max, lon_min, lon_max), degrees.
    pub bbox: (f64, f64, f64, f64),
    /// Minutes, inclusive lower and exclusive upper bound.
    pub duration_range: (f64, f64),
    pub popularity_range: (f64, f64),
    pub capacity: f64,
}

impl SyntheticParkSpec {
    /// Defaults: roughly 600 m x 600 m of ground in central Florida.
    pub fn new(n_facilities: usize, seed: u64) -> Self {
        Self {
            n_facilities,
            seed,
            bbox: (28.3550, 28.3604, -81.5620, -81.5559),
            duration_range: (10.0, 40.0),
            popularity_range: (1.0, 100.0),
            capacity: 10.0,
        }
    }

    fn validate(&self) -> Result<(), IngestError> {
        let (lat_min, lat_max, lon_min, lon_max) = self.bbox;
        let bad = |m: &str| Err(IngestError::Spec(m.to_string()));
        if self.n_facilities < 2 {
            return bad("need at least 2 facilities");
        }
        if !(lat_min < lat_max) || !(lon_min < lon_max) {
            return bad("bounding box must have min < max on both axes");
        }
        if lat_min < -90.0 || lat_max > 90.0 || lon_min < -180.0 || lon_max > 180.0 {
            return bad("bounding box outside valid coordinates");
        }
        let (d0, d1) = self.duration_range;
        if !(d0 > 0.0) || !(d0 <= d1) {
            return bad("duration range must be positive and non-empty");
        }
        let (p0, p1) = self.popularity_range;
        if !(p0 >= 0.0) || !(p0 <= p1) {
            return bad("popularity range must be non-negative and non-empty");
        }
        if !(self.capacity > 0.0) {
            return bad("capacity must be positive");
        }
        Ok(())
    }
}

/// Uniform variate in `[0, 1)` with 53 random bits.
fn unit(rng: &mut ChaCha8Rng) -> f64 {
    (rng.next_u64() >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
}

fn uniform(rng: &mut ChaCha8Rng, (lo, hi): (f64, f64)) -> f64 {
    lo + (hi - lo) * unit(rng)
}

/// Deterministic synthetic park; facility 0 is the start.
pub fn generate_park(spec: &SyntheticParkSpec, walking_speed: f64) -> Result<Park, IngestError> {
    spec.validate()?;
    let (lat_min, lat_max, lon_min, lon_max) = spec.bbox;
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let width = spec.n_facilities.saturating_sub(1).to_string().len().max(2);
    let facilities = (0..spec.n_facilities)
        .map(|id| Facility {
            id,
            name: format!("F{id:0width$}"),
            lat: uniform(&mut rng, (lat_min, lat_max)),
            lon: uniform(&mut rng, (lon_min, lon_max)),
            duration: uniform(&mut rng, spec.duration_range),
            capacity: spec.capacity,
            popularity: uniform(&mut rng, spec.popularity_range),
        })
        .collect();
    Ok(Park::new(facilities, 0, walking_speed)?)
}
