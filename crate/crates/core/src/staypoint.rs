//! Stay-point detection.
//!
//! A stay point is a contiguous run of fixes that stays put (distance below
//! `dist_threshold`) for longer than `time_threshold`. Two ways of deciding
//! "stays put" are supported:
//!
//! * [`RunMode::Consecutive`] (default): each fix must be within the
//!   threshold of the fix before it.
//! * [`RunMode::Anchored`]: each fix must be within the threshold of the
//!   first fix of the run.
//!
//! Distance comparisons are strict (`<`), as is the duration check (`>`).
//! Scanning resumes at the fix that broke the run, so runs never overlap.

use std::ops::Range;

use chrono::{DateTime, Duration, Utc};

use crate::error::{Error, Result};
use crate::geo::{centroid, haversine_distance, GeoPoint, Trajectory};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum RunMode {
    #[default]
    Consecutive,
    Anchored,
}

impl RunMode {
    pub fn as_str(self) -> &'static str {
        match self {
            RunMode::Consecutive => "consecutive",
            RunMode::Anchored => "anchored",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StayPointParams {
    /// Meters.
    pub dist_threshold: f64,
    pub time_threshold: Duration,
    pub mode: RunMode,
}

impl Default for StayPointParams {
    fn default() -> Self {
        StayPointParams {
            dist_threshold: 200.0,
            time_threshold: Duration::minutes(20),
            mode: RunMode::Consecutive,
        }
    }
}

impl StayPointParams {
    pub fn validate(&self) -> Result<()> {
        if self.dist_threshold.is_nan()
            || self.dist_threshold <= 0.0
            || self.time_threshold <= Duration::zero()
        {
            return Err(Error::InvalidParameter(
                "stay-point thresholds must be strictly positive".into(),
            ));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct StayPoint {
    pub user_id: String,
    pub centroid: GeoPoint,
    pub arrival: DateTime<Utc>,
    pub departure: DateTime<Utc>,
    pub fix_count: usize,
    /// Index range of the member fixes in the source trajectory.
    pub members: Range<usize>,
}

impl StayPoint {
    pub fn duration(&self) -> Duration {
        self.departure - self.arrival
    }
}

pub fn detect_stay_points(t: &Trajectory, params: &StayPointParams) -> Vec<StayPoint> {
    let fixes = &t.fixes;
    let n = fixes.len();
    let mut out = Vec::new();
    if n < 2 {
        return out;
    }

    let mut start = 0;
    while start < n {
        let mut end = start;
        while end + 1 < n {
            let reference = match params.mode {
                RunMode::Consecutive => fixes[end].point,
                RunMode::Anchored => fixes[start].point,
            };
            if haversine_distance(reference, fixes[end + 1].point) < params.dist_threshold {
                end += 1;
            } else {
                break;
            }
        }

        let run = &fixes[start..=end];
        let (first, last) = (run[0].timestamp, run[run.len() - 1].timestamp);
        if last - first > params.time_threshold {
            let points: Vec<GeoPoint> = run.iter().map(|f| f.point).collect();
            out.push(StayPoint {
                user_id: t.user_id.clone(),
                centroid: centroid(&points).expect("run is non-empty"),
                arrival: first,
                departure: last,
                fix_count: run.len(),
                members: start..end + 1,
            });
        }
        start = end + 1;
    }
    out
}
