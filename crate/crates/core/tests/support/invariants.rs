//! Invariant checks, each returning a description of the first violation.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

use std::collections::{BTreeMap, BTreeSet};

use chrono::Duration;
use trajmine::clustering::{dbscan, k_dist_curve, DbscanParams};
use trajmine::ingest::{parse_plt, segment_trajectories, write_plt, ParseMode, RawUserLog};
use trajmine::places::{extract_location_points, extract_pois, LocationPoint};
use trajmine::preprocess::{drop_invalid, remove_spikes};
use trajmine::similarity::Jaccard;
use trajmine::staypoint::{detect_stay_points, StayPointParams};
use trajmine::{
    centroid, haversine_distance, speed_between, GeoPoint, GpsFix, StayPoint, Trajectory,
};

use super::oracle::{brute_force_dbscan, brute_force_k_dist, canonical_partition};

pub type Check = Result<(), String>;

macro_rules! ensure {
    ($cond:expr, $($msg:tt)+) => {
        if !$cond {
            return Err(format!($($msg)+));
        }
    };
}

// ---- geo -------------------------------------------------------------------

pub fn triangle_inequality(a: GeoPoint, b: GeoPoint, c: GeoPoint) -> Check {
    let (ab, bc, ac) = (
        haversine_distance(a, b),
        haversine_distance(b, c),
        haversine_distance(a, c),
    );
    ensure!(
        ac <= (ab + bc) * (1.0 + 1e-6) + 1e-6,
        "d(a,c)={ac} > d(a,b)+d(b,c)={}",
        ab + bc
    );
    Ok(())
}

pub fn distance_symmetric(a: GeoPoint, b: GeoPoint) -> Check {
    let (ab, ba) = (haversine_distance(a, b), haversine_distance(b, a));
    ensure!(ab == ba && ab >= 0.0, "d(a,b)={ab}, d(b,a)={ba}");
    Ok(())
}

/// `perm` is applied as a rotation followed by a reversal, so every input
/// gets a non-trivial reordering.
pub fn centroid_permutation_invariant(points: &[GeoPoint], rotate: usize) -> Check {
    if points.is_empty() {
        return Ok(());
    }
    let mut shuffled = points.to_vec();
    shuffled.rotate_left(rotate % points.len());
    shuffled.reverse();
    let (a, b) = (centroid(points).unwrap(), centroid(&shuffled).unwrap());
    ensure!(
        (a.lat - b.lat).abs() < 1e-9 && (a.lon - b.lon).abs() < 1e-9,
        "centroid changed under permutation: {a:?} vs {b:?}"
    );
    Ok(())
}

// ---- ingest ----------------------------------------------------------------

pub fn segmentation(log: &RawUserLog, gap: Duration) -> Check {
    let trajs = segment_trajectories(log, gap);
    let total: usize = trajs.iter().map(Trajectory::len).sum();
    ensure!(
        total == log.fixes.len(),
        "segments hold {total} fixes, log has {}",
        log.fixes.len()
    );
    for t in &trajs {
        ensure!(!t.is_empty(), "empty segment");
        for w in t.fixes.windows(2) {
            ensure!(
                w[1].timestamp - w[0].timestamp <= gap,
                "internal gap exceeds threshold"
            );
        }
    }
    let flat: Vec<GpsFix> = trajs.into_iter().flat_map(|t| t.fixes).collect();
    ensure!(flat == log.fixes, "segmentation reordered fixes");
    Ok(())
}

pub fn plt_round_trip(fixes: &[GpsFix]) -> Check {
    let parsed = parse_plt(&write_plt(fixes), ParseMode::Strict).map_err(|e| e.to_string())?;
    ensure!(
        parsed.fixes.len() == fixes.len(),
        "lost records in round trip"
    );
    for (a, b) in fixes.iter().zip(&parsed.fixes) {
        ensure!(
            format!("{:.6}", a.point.lat) == format!("{:.6}", b.point.lat)
                && format!("{:.6}", a.point.lon) == format!("{:.6}", b.point.lon),
            "coordinates differ at 6 decimals: {:?} vs {:?}",
            a.point,
            b.point
        );
        ensure!(a.timestamp == b.timestamp, "timestamp changed");
    }
    Ok(())
}

// ---- preprocess ------------------------------------------------------------

fn is_subsequence(small: &[GpsFix], big: &[GpsFix]) -> bool {
    let mut it = big.iter();
    small.iter().all(|s| it.any(|b| b == s))
}

pub fn spike_filter(t: &Trajectory, v_max: f64) -> Check {
    let (once, report) = remove_spikes(t, v_max);
    for w in once.fixes.windows(2) {
        let v = speed_between(&w[0], &w[1]).map_err(|e| e.to_string())?;
        ensure!(v <= v_max, "kept pair with speed {v} > {v_max}");
    }
    let (twice, _) = remove_spikes(&once, v_max);
    ensure!(twice == once, "remove_spikes is not idempotent");
    ensure!(
        is_subsequence(&once.fixes, &t.fixes),
        "output is not a subsequence"
    );
    ensure!(
        report.fixes_removed_speed == t.len() - once.len()
            && report.fixes_removed_speed <= report.fixes_in,
        "report counts inconsistent"
    );
    let (valid, _) = drop_invalid(t);
    ensure!(
        is_subsequence(&valid.fixes, &t.fixes),
        "drop_invalid output is not a subsequence"
    );
    Ok(())
}

// ---- stay points -----------------------------------------------------------

pub fn stay_points(t: &Trajectory, params: &StayPointParams) -> Check {
    let sps = detect_stay_points(t, params);
    let mut prev_end = 0;
    for sp in &sps {
        ensure!(
            sp.duration() > params.time_threshold,
            "stay point too short: {:?}",
            sp.duration()
        );
        ensure!(
            sp.fix_count >= 2 && sp.fix_count == sp.members.len(),
            "bad member count"
        );
        ensure!(
            sp.members.start >= prev_end,
            "runs overlap or are out of order"
        );
        prev_end = sp.members.end;
        let run = &t.fixes[sp.members.clone()];
        ensure!(
            run[0].timestamp == sp.arrival && run[run.len() - 1].timestamp == sp.departure,
            "arrival/departure do not match members"
        );
        let (mut lo_lat, mut hi_lat, mut lo_lon, mut hi_lon) = (
            f64::INFINITY,
            f64::NEG_INFINITY,
            f64::INFINITY,
            f64::NEG_INFINITY,
        );
        for f in run {
            lo_lat = lo_lat.min(f.point.lat);
            hi_lat = hi_lat.max(f.point.lat);
            lo_lon = lo_lon.min(f.point.lon);
            hi_lon = hi_lon.max(f.point.lon);
        }
        let eps = 1e-9;
        ensure!(
            sp.centroid.lat >= lo_lat - eps
                && sp.centroid.lat <= hi_lat + eps
                && sp.centroid.lon >= lo_lon - eps
                && sp.centroid.lon <= hi_lon + eps,
            "centroid outside member bounding box"
        );
    }
    Ok(())
}

pub fn stay_point_time_monotone(
    t: &Trajectory,
    params: &StayPointParams,
    extra: Duration,
) -> Check {
    let base = detect_stay_points(t, params).len();
    let raised = StayPointParams {
        time_threshold: params.time_threshold + extra,
        ..*params
    };
    let more = detect_stay_points(t, &raised).len();
    ensure!(
        more <= base,
        "raising the time threshold went from {base} to {more} stay points"
    );
    Ok(())
}

// ---- clustering ------------------------------------------------------------

pub fn dbscan_matches_oracle(points: &[GeoPoint], eps: f64, min_pts: usize) -> Check {
    let got = dbscan(points, &DbscanParams::new(eps, min_pts).unwrap());
    let want = brute_force_dbscan(points, eps, min_pts);
    ensure!(got.core == want.core, "core sets differ");
    ensure!(
        got.noise()
            == (0..points.len())
                .filter(|&i| want.labels[i].is_none())
                .collect::<Vec<_>>(),
        "noise sets differ"
    );
    ensure!(
        canonical_partition(&got.labels) == canonical_partition(&want.labels),
        "partitions differ"
    );
    Ok(())
}

pub fn dbscan_structure(points: &[GeoPoint], eps: f64, min_pts: usize) -> Check {
    let a = dbscan(points, &DbscanParams::new(eps, min_pts).unwrap());
    let clusters = a.clusters();
    ensure!(
        clusters.iter().all(|c| !c.is_empty()),
        "cluster ids are not dense"
    );
    for c in &clusters {
        ensure!(c.iter().any(|&i| a.core[i]), "cluster without a core point");
    }
    for i in (0..points.len()).filter(|&i| a.core[i]) {
        for j in 0..points.len() {
            if haversine_distance(points[i], points[j]) <= eps {
                ensure!(a.labels[j].is_some(), "neighbor {j} of core {i} is noise");
                if a.core[j] {
                    ensure!(
                        a.labels[j] == a.labels[i],
                        "adjacent cores {i},{j} in different clusters"
                    );
                }
            }
        }
    }
    Ok(())
}

/// Core and noise sets never depend on input order; the full partition
/// doesn't either unless some border point is reachable from two clusters.
pub fn dbscan_permutation(points: &[GeoPoint], eps: f64, min_pts: usize, rotate: usize) -> Check {
    let n = points.len();
    if n == 0 {
        return Ok(());
    }
    let order: Vec<usize> = (0..n).map(|k| (n - 1 - k + rotate) % n).collect();
    let permuted: Vec<GeoPoint> = order.iter().map(|&i| points[i]).collect();
    let params = DbscanParams::new(eps, min_pts).unwrap();
    let a = dbscan(points, &params);
    let b = dbscan(&permuted, &params);

    // Map b's results back to original indices.
    let mut b_core = vec![false; n];
    let mut b_labels = vec![None; n];
    for (pos, &orig) in order.iter().enumerate() {
        b_core[orig] = b.core[pos];
        b_labels[orig] = b.labels[pos];
    }
    ensure!(a.core == b_core, "core set depends on order");
    ensure!(
        (0..n).all(|i| a.labels[i].is_none() == b_labels[i].is_none()),
        "noise set depends on order"
    );
    let core_groups = |labels: &[Option<usize>]| {
        let only_core: Vec<Option<usize>> = (0..n)
            .map(|i| if a.core[i] { labels[i] } else { None })
            .collect();
        canonical_partition(&only_core)
    };
    ensure!(
        core_groups(&a.labels) == core_groups(&b_labels),
        "core partition depends on order"
    );

    let ambiguous = (0..n).filter(|&i| !a.core[i]).any(|i| {
        let reach: BTreeSet<Option<usize>> = (0..n)
            .filter(|&j| a.core[j] && haversine_distance(points[i], points[j]) <= eps)
            .map(|j| a.labels[j])
            .collect();
        reach.len() > 1
    });
    if !ambiguous {
        ensure!(
            canonical_partition(&a.labels) == canonical_partition(&b_labels),
            "partition depends on order without ambiguous borders"
        );
    }
    Ok(())
}

pub fn k_dist(points: &[GeoPoint], k: usize) -> Check {
    let curve = k_dist_curve(points, k).map_err(|e| e.to_string())?;
    ensure!(curve.iter().all(|&d| d >= 0.0), "negative k-dist");
    ensure!(
        curve.windows(2).all(|w| w[0] >= w[1]),
        "curve not sorted descending"
    );
    ensure!(
        curve == brute_force_k_dist(points, k),
        "curve differs from all-pairs oracle"
    );
    Ok(())
}

// ---- places ----------------------------------------------------------------

fn stay_points_at(user: &str, points: &[GeoPoint]) -> Vec<StayPoint> {
    let t0 = super::fixture::t0();
    points
        .iter()
        .enumerate()
        .map(|(i, &p)| StayPoint {
            user_id: user.to_string(),
            centroid: p,
            arrival: t0 + Duration::hours(i as i64),
            departure: t0 + Duration::hours(i as i64) + Duration::minutes(30),
            fix_count: 10,
            members: 0..10,
        })
        .collect()
}

/// Location points and POIs for several users' stay-point centroids.
pub fn places(users: &[Vec<GeoPoint>], min_pts: usize) -> Check {
    let lp_params = DbscanParams::new(100.0, min_pts).unwrap();
    let poi_params = DbscanParams::new(200.0, min_pts).unwrap();
    let mut pooled: Vec<LocationPoint> = Vec::new();
    for (u, pts) in users.iter().enumerate() {
        let user = format!("{u:03}");
        let sps = stay_points_at(&user, pts);
        let lps = extract_location_points(&sps, &lp_params);
        let clusters = if sps.len() < min_pts {
            0
        } else {
            dbscan(pts, &lp_params).n_clusters
        };
        ensure!(
            lps.len() == clusters,
            "LP count {} != non-noise clusters {clusters}",
            lps.len()
        );
        let mut seen = BTreeSet::new();
        for lp in &lps {
            ensure!(lp.user_id == user, "LP owned by wrong user");
            ensure!(
                lp.visit_count >= min_pts && lp.visit_count == lp.stay_point_ids.len(),
                "bad visit count"
            );
            for &i in &lp.stay_point_ids {
                ensure!(sps[i].user_id == user, "LP member from another user");
                ensure!(seen.insert(i), "stay point {i} in two LPs");
            }
        }
        pooled.extend(lps);
    }

    let pois = extract_pois(&pooled, &poi_params, 1);
    let mut owner: BTreeMap<usize, usize> = BTreeMap::new();
    for (k, poi) in pois.iter().enumerate() {
        ensure!(poi.poi_id == k, "POI ids not dense");
        ensure!(
            poi.member_location_points.len() >= min_pts,
            "POI below min_pts"
        );
        ensure!(!poi.visiting_users.is_empty(), "POI without users");
        for &m in &poi.member_location_points {
            ensure!(owner.insert(m, poi.poi_id).is_none(), "LP {m} in two POIs");
            ensure!(
                poi.visiting_users.contains(&pooled[m].user_id),
                "visiting users incomplete"
            );
        }
    }
    Ok(())
}

/// Raising min_pts never grows the set of stay points that end up inside a
/// location point, nor the set of location points inside a POI.
pub fn places_min_pts_monotone(pts: &[GeoPoint], min_pts: usize) -> Check {
    let covered = |m: usize| -> BTreeSet<usize> {
        let lps = extract_location_points(
            &stay_points_at("u", pts),
            &DbscanParams::new(100.0, m).unwrap(),
        );
        lps.into_iter().flat_map(|lp| lp.stay_point_ids).collect()
    };
    let (lo, hi) = (covered(min_pts), covered(min_pts + 1));
    ensure!(hi.is_subset(&lo), "coverage grew when min_pts increased");

    let lp_like: Vec<LocationPoint> = pts
        .iter()
        .enumerate()
        .map(|(i, &p)| LocationPoint {
            user_id: format!("{:03}", i % 3),
            centroid: p,
            stay_point_ids: vec![],
            visit_count: 4,
        })
        .collect();
    let poi_cover = |m: usize| -> BTreeSet<usize> {
        extract_pois(&lp_like, &DbscanParams::new(200.0, m).unwrap(), 1)
            .into_iter()
            .flat_map(|p| p.member_location_points)
            .collect()
    };
    ensure!(
        poi_cover(min_pts + 1).is_subset(&poi_cover(min_pts)),
        "POI coverage grew"
    );
    Ok(())
}

// ---- similarity ------------------------------------------------------------

pub fn jaccard_properties(a: &BTreeSet<usize>, b: &BTreeSet<usize>, extra: usize) -> Check {
    let (ab, ba) = (Jaccard::of(a, b), Jaccard::of(b, a));
    ensure!(ab == ba, "jaccard not symmetric");
    ensure!(ab.shared <= ab.union, "shared > union");
    let s = ab.score();
    ensure!((0.0..=1.0).contains(&s), "score {s} out of range");
    if !a.is_empty() {
        ensure!(Jaccard::of(a, a).score() == 1.0, "self-similarity is not 1");
    }
    // Add an element absent from both.
    let fresh = a.iter().chain(b.iter()).max().map_or(0, |m| m + 1 + extra);
    let (mut a2, mut b2) = (a.clone(), b.clone());
    a2.insert(fresh);
    b2.insert(fresh);
    ensure!(
        Jaccard::of(&a2, &b2) >= ab,
        "adding a common element lowered the score"
    );
    // Truncated rendering never rounds up.
    let shown: f64 = ab.truncated(2).parse().unwrap();
    ensure!(
        shown <= s + 1e-12 && s - shown < 0.01,
        "bad truncation {shown} for {s}"
    );
    Ok(())
}
