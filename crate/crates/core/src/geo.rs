//! Spatial primitives shared by every stage of the pipeline.
//!
//! Distances are great-circle distances on a sphere of radius
//! [`EARTH_RADIUS_M`]. Altitude is carried through ingestion but never takes
//! part in a distance. Centroids are plain means in degree space, which is
//! fine at city scale but wrong for point sets straddling the antimeridian.

use chrono::{DateTime, Utc};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Mean Earth radius in meters.
pub const EARTH_RADIUS_M: f64 = 6_371_000.0;

/// A latitude/longitude pair in degrees.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GeoPoint {
    pub lat: f64,
    pub lon: f64,
}

impl GeoPoint {
    /// Validated constructor.
    pub fn new(lat: f64, lon: f64) -> Result<Self> {
        let p = GeoPoint { lat, lon };
        if p.is_valid() {
            Ok(p)
        } else {
            Err(Error::InvalidCoordinate { lat, lon })
        }
    }

    pub fn is_valid(&self) -> bool {
        self.lat.is_finite()
            && self.lon.is_finite()
            && (-90.0..=90.0).contains(&self.lat)
            && (-180.0..=180.0).contains(&self.lon)
    }
}

/// One timestamped GPS sample.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GpsFix {
    pub point: GeoPoint,
    /// Meters; `None` when the logger reported no altitude.
    pub altitude: Option<f64>,
    pub timestamp: DateTime<Utc>,
}

impl GpsFix {
    pub fn new(point: GeoPoint, altitude: Option<f64>, timestamp: DateTime<Utc>) -> Self {
        GpsFix {
            point,
            altitude,
            timestamp,
        }
    }
}

/// An ordered run of fixes for one user.
///
/// Trajectories produced by segmentation may still contain timestamp ties
/// or invalid fixes; [`crate::preprocess::drop_invalid`] restores the
/// strictly-increasing invariant, which [`Trajectory::is_valid`] checks.
#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    pub user_id: String,
    pub fixes: Vec<GpsFix>,
}

impl Trajectory {
    /// Validated constructor: non-empty, strictly increasing timestamps, valid points.
    pub fn new(user_id: impl Into<String>, fixes: Vec<GpsFix>) -> Result<Self> {
        let t = Trajectory {
            user_id: user_id.into(),
            fixes,
        };
        if t.is_valid() {
            Ok(t)
        } else {
            Err(Error::InvalidTrajectory)
        }
    }

    pub fn is_valid(&self) -> bool {
        !self.fixes.is_empty()
            && self.fixes.iter().all(|f| f.point.is_valid())
            && self
                .fixes
                .windows(2)
                .all(|w| w[0].timestamp < w[1].timestamp)
    }

    pub fn len(&self) -> usize {
        self.fixes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.fixes.is_empty()
    }
}

/// Great-circle distance in meters.
pub fn haversine_distance(a: GeoPoint, b: GeoPoint) -> f64 {
    let phi1 = a.lat.to_radians();
    let phi2 = b.lat.to_radians();
    let dphi = phi2 - phi1;
    let dlambda = (b.lon - a.lon).to_radians();
    let h = (dphi / 2.0).sin().powi(2) + phi1.cos() * phi2.cos() * (dlambda / 2.0).sin().powi(2);
    2.0 * EARTH_RADIUS_M * h.sqrt().min(1.0).asin()
}

/// Component-wise arithmetic mean of latitude and longitude.
pub fn centroid(points: &[GeoPoint]) -> Result<GeoPoint> {
    if points.is_empty() {
        return Err(Error::EmptyCentroid);
    }
    let n = points.len() as f64;
    let (lat, lon) = points
        .iter()
        .fold((0.0, 0.0), |(la, lo), p| (la + p.lat, lo + p.lon));
    Ok(GeoPoint {
        lat: lat / n,
        lon: lon / n,
    })
}

/// Average speed in m/s implied by moving from `a` to `b`.
pub fn speed_between(a: &GpsFix, b: &GpsFix) -> Result<f64> {
    let elapsed = (b.timestamp - a.timestamp).num_milliseconds();
    if elapsed <= 0 {
        return Err(Error::NonPositiveElapsed {
            seconds: elapsed.div_euclid(1000),
        });
    }
    Ok(haversine_distance(a.point, b.point) / (elapsed as f64 / 1000.0))
}
