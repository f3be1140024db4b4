//! Per-user location points and community points of interest.
//!
//! Location points cluster one user's stay-point centroids; each stay point
//! is one visit. POIs cluster the location-point centroids of every user
//! together. Noise is dropped at both levels.

use std::collections::{BTreeMap, BTreeSet};

use crate::clustering::{dbscan, DbscanParams};
use crate::geo::{centroid, GeoPoint};
use crate::staypoint::StayPoint;

#[derive(Debug, Clone, PartialEq)]
pub struct LocationPoint {
    pub user_id: String,
    pub centroid: GeoPoint,
    /// Indices into the stay-point slice the location was extracted from.
    pub stay_point_ids: Vec<usize>,
    pub visit_count: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Poi {
    pub poi_id: usize,
    pub centroid: GeoPoint,
    /// Indices into the pooled location-point slice.
    pub member_location_points: Vec<usize>,
    pub visiting_users: BTreeSet<String>,
}

pub fn default_location_params() -> DbscanParams {
    DbscanParams::new(100.0, 4).expect("valid defaults")
}

pub fn default_poi_params() -> DbscanParams {
    DbscanParams::new(200.0, 4).expect("valid defaults")
}

/// Clusters one user's stay points into location points.
///
/// All stay points are expected to share a user id; the first one's id is
/// used for the output.
pub fn extract_location_points(
    stay_points: &[StayPoint],
    params: &DbscanParams,
) -> Vec<LocationPoint> {
    debug_assert!(stay_points.windows(2).all(|w| w[0].user_id == w[1].user_id));
    if stay_points.len() < params.min_pts() {
        return Vec::new();
    }
    let centroids: Vec<GeoPoint> = stay_points.iter().map(|sp| sp.centroid).collect();
    let assignment = dbscan(&centroids, params);
    assignment
        .clusters()
        .into_iter()
        .map(|members| {
            let pts: Vec<GeoPoint> = members.iter().map(|&i| centroids[i]).collect();
            LocationPoint {
                user_id: stay_points[members[0]].user_id.clone(),
                centroid: centroid(&pts).expect("clusters are non-empty"),
                visit_count: members.len(),
                stay_point_ids: members,
            }
        })
        .collect()
}

/// Clusters pooled location points into POIs.
///
/// Clusters touched by fewer than `min_users` distinct users are discarded
/// before ids are assigned, so ids stay dense.
pub fn extract_pois(
    location_points: &[LocationPoint],
    params: &DbscanParams,
    min_users: usize,
) -> Vec<Poi> {
    let centroids: Vec<GeoPoint> = location_points.iter().map(|lp| lp.centroid).collect();
    let assignment = dbscan(&centroids, params);
    assignment
        .clusters()
        .into_iter()
        .filter_map(|members| {
            let visiting_users: BTreeSet<String> = members
                .iter()
                .map(|&i| location_points[i].user_id.clone())
                .collect();
            if visiting_users.len() < min_users {
                return None;
            }
            let pts: Vec<GeoPoint> = members.iter().map(|&i| centroids[i]).collect();
            Some((
                centroid(&pts).expect("clusters are non-empty"),
                members,
                visiting_users,
            ))
        })
        .enumerate()
        .map(
            |(poi_id, (centroid, member_location_points, visiting_users))| Poi {
                poi_id,
                centroid,
                member_location_points,
                visiting_users,
            },
        )
        .collect()
}

/// Maps every user in `users` to the POIs they visited; users with no POI
/// map to an empty set. Users seen only in `pois` are included too.
pub fn user_poi_sets<S: AsRef<str>>(
    pois: &[Poi],
    users: &[S],
) -> BTreeMap<String, BTreeSet<usize>> {
    let mut sets: BTreeMap<String, BTreeSet<usize>> = users
        .iter()
        .map(|u| (u.as_ref().to_string(), BTreeSet::new()))
        .collect();
    for poi in pois {
        for user in &poi.visiting_users {
            sets.entry(user.clone()).or_default().insert(poi.poi_id);
        }
    }
    sets
}
