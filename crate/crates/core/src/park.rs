//! Park graph: facilities on a sphere, connected pairwise.
//!
//! Connections are never materialized. Distances are great-circle
//! (haversine) on a 6,371 km sphere and travel times divide that distance by
//! the park's walking speed.

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Mean earth radius used by every distance computation, in meters.
pub const EARTH_RADIUS_M: f64 = 6_371_000.0;

/// Default leisure walking pace, meters per minute.
pub const DEFAULT_WALKING_SPEED: f64 = 60.0;

/// Index of a facility inside its park.
pub type FacilityId = usize;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ParkError {
    #[error("facility id {0} is not in the park")]
    UnknownFacility(FacilityId),
    #[error("facility at position {position} has id {id}; ids must be 0..n-1 in order")]
    IdOutOfOrder { position: usize, id: FacilityId },
    #[error("facility {id}: duration must be positive (got {value})")]
    NonPositiveDuration { id: FacilityId, value: f64 },
    #[error("facility {id}: capacity must be positive (got {value})")]
    NonPositiveCapacity { id: FacilityId, value: f64 },
    #[error("facility {id}: popularity must be non-negative (got {value})")]
    NegativePopularity { id: FacilityId, value: f64 },
    #[error("facility {id}: latitude {lat} / longitude {lon} out of range")]
    BadCoordinates { id: FacilityId, lat: f64, lon: f64 },
    #[error("walking speed must be positive (got {0})")]
    BadWalkingSpeed(f64),
    #[error("a park needs at least one facility")]
    Empty,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Facility {
    pub id: FacilityId,
    pub name: String,
    /// Degrees.
    pub lat: f64,
    /// Degrees.
    pub lon: f64,
    /// Visit duration in minutes.
    pub duration: f64,
    /// Persons served per service cycle.
    pub capacity: f64,
    pub popularity: f64,
}

impl Facility {
    fn validate(&self) -> Result<(), ParkError> {
        let id = self.id;
        if !(self.duration > 0.0) || !self.duration.is_finite() {
            return Err(ParkError::NonPositiveDuration { id, value: self.duration });
        }
        if !(self.capacity > 0.0) || !self.capacity.is_finite() {
            return Err(ParkError::NonPositiveCapacity { id, value: self.capacity });
        }
        if !(self.popularity >= 0.0) || !self.popularity.is_finite() {
            return Err(ParkError::NegativePopularity { id, value: self.popularity });
        }
        if !(-90.0..=90.0).contains(&self.lat) || !(-180.0..=180.0).contains(&self.lon) {
            return Err(ParkError::BadCoordinates { id, lat: self.lat, lon: self.lon });
        }
        Ok(())
    }

    /// Queue contribution of one co-present visitor: `Dur / Cap`.
    pub fn unit_wait(&self) -> f64 {
        self.duration / self.capacity
    }
}

/// An immutable, validated park.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Park {
    facilities: Vec<Facility>,
    start: FacilityId,
    walking_speed: f64,
}

impl Park {
    pub fn new(facilities: Vec<Facility>, start: FacilityId, walking_speed: f64) -> Result<Self, ParkError> {
        if facilities.is_empty() {
            return Err(ParkError::Empty);
        }
        for (position, f) in facilities.iter().enumerate() {
            if f.id != position {
                return Err(ParkError::IdOutOfOrder { position, id: f.id });
            }
            f.validate()?;
        }
        if start >= facilities.len() {
            return Err(ParkError::UnknownFacility(start));
        }
        if !(walking_speed > 0.0) || !walking_speed.is_finite() {
            return Err(ParkError::BadWalkingSpeed(walking_speed));
        }
        Ok(Self { facilities, start, walking_speed })
    }

    pub fn facilities(&self) -> &[Facility] {
        &self.facilities
    }

    pub fn len(&self) -> usize {
        self.facilities.len()
    }

    pub fn is_empty(&self) -> bool {
        self.facilities.is_empty()
    }

    pub fn start(&self) -> FacilityId {
        self.start
    }

    pub fn walking_speed(&self) -> f64 {
        self.walking_speed
    }

    pub fn facility(&self, id: FacilityId) -> Result<&Facility, ParkError> {
        self.facilities.get(id).ok_or(ParkError::UnknownFacility(id))
    }

    /// Same park with a different walking speed.
    pub fn with_walking_speed(&self, walking_speed: f64) -> Result<Self, ParkError> {
        Self::new(self.facilities.clone(), self.start, walking_speed)
    }

    /// Same park with a different start facility.
    pub fn with_start(&self, start: FacilityId) -> Result<Self, ParkError> {
        Self::new(self.facilities.clone(), start, self.walking_speed)
    }

    /// Great-circle distance in meters.
    pub fn distance(&self, i: FacilityId, j: FacilityId) -> Result<f64, ParkError> {
        let a = self.facility(i)?;
        let b = self.facility(j)?;
        // Evaluate on ordered ids so that d(i,j) and d(j,i) are bit-identical.
        Ok(if i <= j { haversine(a.lat, a.lon, b.lat, b.lon) } else { haversine(b.lat, b.lon, a.lat, a.lon) })
    }

    /// Walking time in minutes.
    pub fn travel_time(&self, i: FacilityId, j: FacilityId) -> Result<f64, ParkError> {
        Ok(self.distance(i, j)? / self.walking_speed)
    }

    /// Nearest facility to `from` among those accepted by `candidate`,
    /// breaking distance ties by the smallest id.
    pub(crate) fn nearest_where(
        &self,
        from: FacilityId,
        mut candidate: impl FnMut(FacilityId) -> bool,
    ) -> Option<FacilityId> {
        let mut best: Option<(f64, FacilityId)> = None;
        for id in 0..self.len() {
            if id == from || !candidate(id) {
                continue;
            }
            let d = self.distance(from, id).expect("ids in range");
            match best {
                Some((bd, _)) if d >= bd => {}
                _ => best = Some((d, id)),
            }
        }
        best.map(|(_, id)| id)
    }
}

/// Haversine distance in meters between two (lat, lon) points in degrees.
pub fn haversine(lat1: f64, lon1: f64, lat2: f64, lon2: f64) -> f64 {
    if lat1 == lat2 && lon1 == lon2 {
        return 0.0;
    }
    let (phi1, phi2) = (lat1.to_radians(), lat2.to_radians());
    let half_dphi = (phi2 - phi1) / 2.0;
    let half_dlambda = (lon2 - lon1).to_radians() / 2.0;
    let h = half_dphi.sin().powi(2) + phi1.cos() * phi2.cos() * half_dlambda.sin().powi(2);
    2.0 * EARTH_RADIUS_M * h.sqrt().min(1.0).asin()
}
