//! Outlier and speed-spike removal.
//!
//! Both filters only ever drop fixes; the output is always a subsequence of
//! the input.

use std::ops::AddAssign;

use crate::geo::{speed_between, GeoPoint, Trajectory};

/// Default speed ceiling, 50 m/s (180 km/h).
pub const DEFAULT_V_MAX: f64 = 50.0;

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct CleaningReport {
    pub fixes_in: usize,
    pub fixes_removed_speed: usize,
    pub fixes_removed_range: usize,
    /// Fixes whose timestamp did not advance past the previous kept fix.
    pub fixes_removed_order: usize,
    pub trajectories_dropped_empty: usize,
}

impl CleaningReport {
    pub fn fixes_out(&self) -> usize {
        self.fixes_in
            - self.fixes_removed_speed
            - self.fixes_removed_range
            - self.fixes_removed_order
    }
}

impl AddAssign for CleaningReport {
    fn add_assign(&mut self, rhs: Self) {
        self.fixes_in += rhs.fixes_in;
        self.fixes_removed_speed += rhs.fixes_removed_speed;
        self.fixes_removed_range += rhs.fixes_removed_range;
        self.fixes_removed_order += rhs.fixes_removed_order;
        self.trajectories_dropped_empty += rhs.trajectories_dropped_empty;
    }
}

fn is_null_island(p: &GeoPoint) -> bool {
    p.lat == 0.0 && p.lon == 0.0
}

/// Removes out-of-range and (0, 0) fixes, and any fix whose timestamp does
/// not strictly exceed the last kept one.
pub fn drop_invalid(t: &Trajectory) -> (Trajectory, CleaningReport) {
    let mut report = CleaningReport {
        fixes_in: t.fixes.len(),
        ..Default::default()
    };
    let mut kept = Vec::with_capacity(t.fixes.len());
    for fix in &t.fixes {
        if !fix.point.is_valid() || is_null_island(&fix.point) {
            report.fixes_removed_range += 1;
            continue;
        }
        if kept
            .last()
            .is_some_and(|prev: &crate::geo::GpsFix| fix.timestamp <= prev.timestamp)
        {
            report.fixes_removed_order += 1;
            continue;
        }
        kept.push(*fix);
    }
    if kept.is_empty() && !t.fixes.is_empty() {
        report.trajectories_dropped_empty = 1;
    }
    (
        Trajectory {
            user_id: t.user_id.clone(),
            fixes: kept,
        },
        report,
    )
}

/// Single forward pass: a candidate whose implied speed from the last kept
/// fix exceeds `v_max` is dropped and the anchor stays put.
pub fn remove_spikes(t: &Trajectory, v_max: f64) -> (Trajectory, CleaningReport) {
    let mut report = CleaningReport {
        fixes_in: t.fixes.len(),
        ..Default::default()
    };
    let mut kept = Vec::with_capacity(t.fixes.len());
    for fix in &t.fixes {
        let keep = match kept.last() {
            None => true,
            // Non-increasing time means infinite implied speed.
            Some(anchor) => speed_between(anchor, fix).is_ok_and(|v| v <= v_max),
        };
        if keep {
            kept.push(*fix);
        } else {
            report.fixes_removed_speed += 1;
        }
    }
    if kept.is_empty() && !t.fixes.is_empty() {
        report.trajectories_dropped_empty = 1;
    }
    (
        Trajectory {
            user_id: t.user_id.clone(),
            fixes: kept,
        },
        report,
    )
}

/// [`drop_invalid`] followed by [`remove_spikes`], with a combined report.
pub fn clean(t: &Trajectory, v_max: f64) -> (Trajectory, CleaningReport) {
    let (valid, r1) = drop_invalid(t);
    let (out, r2) = remove_spikes(&valid, v_max);
    let report = CleaningReport {
        fixes_in: r1.fixes_in,
        fixes_removed_speed: r2.fixes_removed_speed,
        fixes_removed_range: r1.fixes_removed_range,
        fixes_removed_order: r1.fixes_removed_order,
        trajectories_dropped_empty: usize::from(out.is_empty() && !t.is_empty()),
    };
    (out, report)
}
