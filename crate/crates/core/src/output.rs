//! CSV and GeoJSON artifacts written and read by each stage.
//!
//! Coordinates are written with shortest round-trip precision, so a stage
//! reading a previous stage's CSV sees exactly the values computed in
//! memory. Timestamps are RFC 3339 in UTC.

use std::collections::{BTreeMap, BTreeSet};
use std::fs::{self, File};
use std::io::{BufWriter, Write};
use std::path::Path;

use chrono::{DateTime, Utc};
use serde::{Deserialize, Serialize};
use serde_json::{json, Map, Value};

use crate::error::{Error, Result};
use crate::geo::{GeoPoint, GpsFix, Trajectory};
use crate::places::{LocationPoint, Poi};
use crate::preprocess::CleaningReport;
use crate::similarity::{Jaccard, SimilarityRecord};
use crate::staypoint::StayPoint;

pub const FIXES_CSV: &str = "fixes.csv";
pub const CLEANING_CSV: &str = "cleaning.csv";
pub const STAYPOINTS_CSV: &str = "staypoints.csv";
pub const STAYPOINTS_GEOJSON: &str = "staypoints.geojson";
pub const LOCATION_POINTS_CSV: &str = "location_points.csv";
pub const LOCATION_POINTS_GEOJSON: &str = "location_points.geojson";
pub const POIS_CSV: &str = "pois.csv";
pub const POIS_GEOJSON: &str = "pois.geojson";
pub const SIMILARITY_CSV: &str = "similarity.csv";
pub const SUMMARY_CSV: &str = "summary.csv";
pub const SUMMARY_TXT: &str = "summary.txt";

fn format_time(t: &DateTime<Utc>) -> String {
    t.format("%Y-%m-%dT%H:%M:%SZ").to_string()
}

fn parse_time(s: &str) -> Result<DateTime<Utc>> {
    DateTime::parse_from_rfc3339(s)
        .map(|t| t.with_timezone(&Utc))
        .map_err(|e| Error::Format(format!("bad timestamp {s:?}: {e}")))
}

fn point(lat: f64, lon: f64) -> Result<GeoPoint> {
    GeoPoint::new(lat, lon)
}

/// Header is written explicitly so files with no rows still carry it.
fn write_rows<T: Serialize>(
    path: &Path,
    header: &[&str],
    rows: impl IntoIterator<Item = T>,
) -> Result<()> {
    let mut w = csv::WriterBuilder::new()
        .has_headers(false)
        .from_path(path)
        .map_err(|e| Error::csv(path, e))?;
    w.write_record(header).map_err(|e| Error::csv(path, e))?;
    for row in rows {
        w.serialize(row).map_err(|e| Error::csv(path, e))?;
    }
    w.flush().map_err(|e| Error::io(path, e))
}

fn read_rows<T: for<'de> Deserialize<'de>>(path: &Path) -> Result<Vec<T>> {
    let mut r = csv::Reader::from_path(path).map_err(|e| Error::csv(path, e))?;
    r.deserialize()
        .collect::<std::result::Result<Vec<T>, _>>()
        .map_err(|e| Error::csv(path, e))
}

// ---- fixes -----------------------------------------------------------------

#[derive(Serialize, Deserialize)]
struct FixRow {
    user_id: String,
    trajectory_id: usize,
    lat: f64,
    lon: f64,
    altitude_m: Option<f64>,
    timestamp: String,
}

pub fn write_fixes_csv(path: &Path, trajectories: &[(String, Vec<Trajectory>)]) -> Result<()> {
    let rows = trajectories.iter().flat_map(|(user, trajs)| {
        trajs.iter().enumerate().flat_map(move |(tid, t)| {
            t.fixes.iter().map(move |f| FixRow {
                user_id: user.clone(),
                trajectory_id: tid,
                lat: f.point.lat,
                lon: f.point.lon,
                altitude_m: f.altitude,
                timestamp: format_time(&f.timestamp),
            })
        })
    });
    write_rows(
        path,
        &[
            "user_id",
            "trajectory_id",
            "lat",
            "lon",
            "altitude_m",
            "timestamp",
        ],
        rows,
    )
}

/// Reads trajectories back, grouped by user in file order.
pub fn read_fixes_csv(path: &Path) -> Result<Vec<(String, Vec<Trajectory>)>> {
    let rows: Vec<FixRow> = read_rows(path)?;
    let mut out: Vec<(String, Vec<Trajectory>)> = Vec::new();
    let mut last_tid = None;
    for row in rows {
        let fix = GpsFix::new(
            point(row.lat, row.lon)?,
            row.altitude_m,
            parse_time(&row.timestamp)?,
        );
        let new_user = out.last().is_none_or(|(u, _)| *u != row.user_id);
        if new_user {
            out.push((row.user_id.clone(), Vec::new()));
            last_tid = None;
        }
        let trajs = &mut out.last_mut().expect("pushed above").1;
        if last_tid != Some(row.trajectory_id) {
            trajs.push(Trajectory {
                user_id: row.user_id.clone(),
                fixes: Vec::new(),
            });
            last_tid = Some(row.trajectory_id);
        }
        trajs.last_mut().expect("pushed above").fixes.push(fix);
    }
    Ok(out)
}

// ---- cleaning --------------------------------------------------------------

/// Per-user ingestion and cleaning counts.
#[derive(Debug, Clone, PartialEq)]
pub struct CleaningRow {
    pub user_id: String,
    pub files: usize,
    pub records_invalid: usize,
    /// Non-empty trajectories left after cleaning.
    pub trajectories: usize,
    pub report: CleaningReport,
}

pub fn write_cleaning_csv(path: &Path, rows: &[CleaningRow]) -> Result<()> {
    #[derive(Serialize)]
    struct Flat<'a> {
        user_id: &'a str,
        files: usize,
        records_invalid: usize,
        trajectories: usize,
        fixes_in: usize,
        fixes_removed_range: usize,
        fixes_removed_order: usize,
        fixes_removed_speed: usize,
        fixes_out: usize,
        trajectories_dropped_empty: usize,
    }
    write_rows(
        path,
        &[
            "user_id",
            "files",
            "records_invalid",
            "trajectories",
            "fixes_in",
            "fixes_removed_range",
            "fixes_removed_order",
            "fixes_removed_speed",
            "fixes_out",
            "trajectories_dropped_empty",
        ],
        rows.iter().map(|r| Flat {
            user_id: &r.user_id,
            files: r.files,
            records_invalid: r.records_invalid,
            trajectories: r.trajectories,
            fixes_in: r.report.fixes_in,
            fixes_removed_range: r.report.fixes_removed_range,
            fixes_removed_order: r.report.fixes_removed_order,
            fixes_removed_speed: r.report.fixes_removed_speed,
            fixes_out: r.report.fixes_out(),
            trajectories_dropped_empty: r.report.trajectories_dropped_empty,
        }),
    )
}

// ---- stay points -----------------------------------------------------------

#[derive(Serialize, Deserialize)]
struct StayPointRow {
    user_id: String,
    lat: f64,
    lon: f64,
    arrival: String,
    departure: String,
    fix_count: usize,
}

pub fn write_staypoints_csv(path: &Path, stay_points: &[StayPoint]) -> Result<()> {
    write_rows(
        path,
        &["user_id", "lat", "lon", "arrival", "departure", "fix_count"],
        stay_points.iter().map(|sp| StayPointRow {
            user_id: sp.user_id.clone(),
            lat: sp.centroid.lat,
            lon: sp.centroid.lon,
            arrival: format_time(&sp.arrival),
            departure: format_time(&sp.departure),
            fix_count: sp.fix_count,
        }),
    )
}

/// Stay points read from CSV carry no member range; `members` is `0..fix_count`.
pub fn read_staypoints_csv(path: &Path) -> Result<Vec<StayPoint>> {
    read_rows::<StayPointRow>(path)?
        .into_iter()
        .map(|r| {
            Ok(StayPoint {
                centroid: point(r.lat, r.lon)?,
                arrival: parse_time(&r.arrival)?,
                departure: parse_time(&r.departure)?,
                members: 0..r.fix_count,
                fix_count: r.fix_count,
                user_id: r.user_id,
            })
        })
        .collect()
}

// ---- location points -------------------------------------------------------

#[derive(Serialize, Deserialize)]
struct LocationRow {
    user_id: String,
    lat: f64,
    lon: f64,
    visits: usize,
}

pub fn write_location_points_csv(path: &Path, lps: &[LocationPoint]) -> Result<()> {
    write_rows(
        path,
        &["user_id", "lat", "lon", "visits"],
        lps.iter().map(|lp| LocationRow {
            user_id: lp.user_id.clone(),
            lat: lp.centroid.lat,
            lon: lp.centroid.lon,
            visits: lp.visit_count,
        }),
    )
}

/// Member stay-point ids are not stored; they come back empty.
pub fn read_location_points_csv(path: &Path) -> Result<Vec<LocationPoint>> {
    read_rows::<LocationRow>(path)?
        .into_iter()
        .map(|r| {
            Ok(LocationPoint {
                centroid: point(r.lat, r.lon)?,
                stay_point_ids: Vec::new(),
                visit_count: r.visits,
                user_id: r.user_id,
            })
        })
        .collect()
}

// ---- POIs ------------------------------------------------------------------

#[derive(Serialize, Deserialize)]
struct PoiRow {
    poi_id: usize,
    lat: f64,
    lon: f64,
    n_location_points: usize,
    n_users: usize,
    /// Semicolon-separated user ids.
    users: String,
}

pub fn write_pois_csv(path: &Path, pois: &[Poi]) -> Result<()> {
    write_rows(
        path,
        &[
            "poi_id",
            "lat",
            "lon",
            "n_location_points",
            "n_users",
            "users",
        ],
        pois.iter().map(|p| PoiRow {
            poi_id: p.poi_id,
            lat: p.centroid.lat,
            lon: p.centroid.lon,
            n_location_points: p.member_location_points.len(),
            n_users: p.visiting_users.len(),
            users: p
                .visiting_users
                .iter()
                .cloned()
                .collect::<Vec<_>>()
                .join(";"),
        }),
    )
}

/// Member location-point indices are not stored; they come back empty.
pub fn read_pois_csv(path: &Path) -> Result<Vec<Poi>> {
    read_rows::<PoiRow>(path)?
        .into_iter()
        .map(|r| {
            Ok(Poi {
                poi_id: r.poi_id,
                centroid: point(r.lat, r.lon)?,
                member_location_points: Vec::new(),
                visiting_users: r
                    .users
                    .split(';')
                    .filter(|u| !u.is_empty())
                    .map(str::to_string)
                    .collect(),
            })
        })
        .collect()
}

// ---- similarity ------------------------------------------------------------

#[derive(Serialize)]
struct SimilarityRow<'a> {
    user_a: &'a str,
    user_b: &'a str,
    shared: usize,
    union: usize,
    score: String,
}

pub fn write_similarity_csv(path: &Path, records: &[SimilarityRecord]) -> Result<()> {
    write_rows(
        path,
        &["user_a", "user_b", "shared", "union", "score"],
        records.iter().map(|r| SimilarityRow {
            user_a: &r.user_a,
            user_b: &r.user_b,
            shared: r.similarity.shared,
            union: r.similarity.union,
            score: r.similarity.truncated(4),
        }),
    )
}

pub fn read_similarity_csv(path: &Path) -> Result<Vec<SimilarityRecord>> {
    #[derive(Deserialize)]
    struct Row {
        user_a: String,
        user_b: String,
        shared: usize,
        union: usize,
    }
    Ok(read_rows::<Row>(path)?
        .into_iter()
        .map(|r| SimilarityRecord {
            user_a: r.user_a,
            user_b: r.user_b,
            similarity: Jaccard {
                shared: r.shared,
                union: r.union,
            },
        })
        .collect())
}

// ---- k-dist ----------------------------------------------------------------

pub fn write_kdist_csv(path: &Path, curve: &[f64]) -> Result<()> {
    #[derive(Serialize)]
    struct Row {
        rank: usize,
        distance_m: f64,
    }
    write_rows(
        path,
        &["rank", "distance_m"],
        curve
            .iter()
            .enumerate()
            .map(|(rank, &distance_m)| Row { rank, distance_m }),
    )
}

// ---- GeoJSON ---------------------------------------------------------------

/// One Point feature.
#[derive(Debug, Clone, PartialEq)]
pub struct Feature {
    pub point: GeoPoint,
    pub properties: Map<String, Value>,
}

impl Feature {
    fn new(layer: &str, point: GeoPoint, props: Value) -> Self {
        let mut properties = Map::new();
        properties.insert("layer".into(), Value::from(layer));
        if let Value::Object(extra) = props {
            properties.extend(extra);
        }
        Feature { point, properties }
    }
}

pub fn feature_collection(features: &[Feature]) -> Value {
    let features: Vec<Value> = features
        .iter()
        .map(|f| {
            json!({
                "type": "Feature",
                "geometry": { "type": "Point", "coordinates": [f.point.lon, f.point.lat] },
                "properties": f.properties,
            })
        })
        .collect();
    json!({ "type": "FeatureCollection", "features": features })
}

pub fn emit_geojson(path: &Path, features: &[Feature]) -> Result<()> {
    let file = File::create(path).map_err(|e| Error::io(path, e))?;
    let mut w = BufWriter::new(file);
    serde_json::to_writer_pretty(&mut w, &feature_collection(features))?;
    w.write_all(b"\n").map_err(|e| Error::io(path, e))?;
    w.flush().map_err(|e| Error::io(path, e))
}

pub fn staypoint_features(stay_points: &[StayPoint]) -> Vec<Feature> {
    stay_points
        .iter()
        .map(|sp| {
            Feature::new(
                "staypoint",
                sp.centroid,
                json!({
                    "user_id": sp.user_id,
                    "arrival": format_time(&sp.arrival),
                    "departure": format_time(&sp.departure),
                    "fix_count": sp.fix_count,
                }),
            )
        })
        .collect()
}

pub fn location_features(lps: &[LocationPoint]) -> Vec<Feature> {
    lps.iter()
        .map(|lp| {
            Feature::new(
                "location",
                lp.centroid,
                json!({ "user_id": lp.user_id, "visits": lp.visit_count }),
            )
        })
        .collect()
}

pub fn poi_features(pois: &[Poi]) -> Vec<Feature> {
    pois.iter()
        .map(|p| {
            Feature::new(
                "poi",
                p.centroid,
                json!({
                    "poi_id": p.poi_id,
                    "n_users": p.visiting_users.len(),
                    "n_location_points": p.member_location_points.len(),
                    "users": p.visiting_users.iter().collect::<Vec<_>>(),
                }),
            )
        })
        .collect()
}

/// Every user seen in a set of location points, sorted.
pub fn users_of(lps: &[LocationPoint]) -> Vec<String> {
    lps.iter()
        .map(|lp| lp.user_id.clone())
        .collect::<BTreeSet<_>>()
        .into_iter()
        .collect()
}

/// Groups stay points by user, preserving per-user order.
pub fn group_by_user(stay_points: Vec<StayPoint>) -> BTreeMap<String, Vec<StayPoint>> {
    let mut out: BTreeMap<String, Vec<StayPoint>> = BTreeMap::new();
    for sp in stay_points {
        out.entry(sp.user_id.clone()).or_default().push(sp);
    }
    out
}

pub fn ensure_dir(dir: &Path) -> Result<()> {
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))
}
