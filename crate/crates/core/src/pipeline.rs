//! End-to-end orchestration: ingest, clean, stay points, location points,
//! POIs and pairwise similarity.
//!
//! Per-user stages run on the current rayon pool; POI extraction and the
//! similarity ranking join on all users. Output is deterministic for a given
//! input and configuration.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use chrono::Duration;
use rayon::prelude::*;
use serde::Serialize;

use crate::clustering::DbscanParams;
use crate::error::{Error, Result};
use crate::geo::Trajectory;
use crate::ingest::{discover_users, load_user, segment_trajectories, ParseMode};
use crate::output::{self, CleaningRow};
use crate::places::{
    default_location_params, default_poi_params, extract_location_points, extract_pois,
    user_poi_sets, LocationPoint, Poi,
};
use crate::preprocess::{clean, CleaningReport, DEFAULT_V_MAX};
use crate::similarity::{rank_pairs, SimilarityRecord};
use crate::staypoint::{detect_stay_points, StayPoint, StayPointParams};

#[derive(Debug, Clone, PartialEq)]
pub struct PipelineConfig {
    pub data_dir: PathBuf,
    /// Restrict to these users; `None` means every user found.
    pub users: Option<Vec<String>>,
    pub gap_threshold: Duration,
    pub v_max: f64,
    pub parse_mode: ParseMode,
    pub stay: StayPointParams,
    pub location: DbscanParams,
    pub poi: DbscanParams,
    pub min_users: usize,
    pub output_dir: PathBuf,
    /// Number of similarity pairs kept in the summary.
    pub top: usize,
}

impl PipelineConfig {
    pub fn new(data_dir: impl Into<PathBuf>, output_dir: impl Into<PathBuf>) -> Self {
        PipelineConfig {
            data_dir: data_dir.into(),
            users: None,
            gap_threshold: Duration::minutes(30),
            v_max: DEFAULT_V_MAX,
            parse_mode: ParseMode::Lenient,
            stay: StayPointParams::default(),
            location: default_location_params(),
            poi: default_poi_params(),
            min_users: 1,
            output_dir: output_dir.into(),
            top: 10,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.gap_threshold <= Duration::zero() {
            return Err(Error::InvalidParameter(
                "gap threshold must be positive".into(),
            ));
        }
        if self.v_max.is_nan() || self.v_max <= 0.0 {
            return Err(Error::InvalidParameter("v_max must be positive".into()));
        }
        self.stay.validate()
    }
}

/// Everything computed for one user.
#[derive(Debug, Clone)]
pub struct UserResult {
    pub user_id: String,
    pub files: usize,
    pub records_invalid: usize,
    pub gps_points: usize,
    pub cleaning: CleaningReport,
    pub trajectories: Vec<Trajectory>,
    pub stay_points: Vec<StayPoint>,
    pub location_points: Vec<LocationPoint>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct SummaryRow {
    pub user_id: String,
    pub trajectories: usize,
    pub gps_points: usize,
    pub stay_points: usize,
    pub location_points: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct PipelineSummary {
    /// Sorted by stay points, most first; ties by user id.
    pub rows: Vec<SummaryRow>,
    pub totals: SummaryRow,
    pub poi_count: usize,
    pub top_pairs: Vec<SimilarityRecord>,
    pub stay_mode: &'static str,
}

#[derive(Debug, Clone)]
pub struct PipelineOutput {
    pub users: Vec<UserResult>,
    pub location_points: Vec<LocationPoint>,
    pub pois: Vec<Poi>,
    pub poi_sets: BTreeMap<String, BTreeSet<usize>>,
    /// Empty when fewer than two users were processed.
    pub similarity: Vec<SimilarityRecord>,
    pub summary: PipelineSummary,
}

/// Loads, segments and cleans one user. Empty trajectories are dropped.
pub fn ingest_user(
    user_dir: &Path,
    config: &PipelineConfig,
) -> Result<(UserResult, Vec<Trajectory>)> {
    let log = load_user(user_dir, config.parse_mode)?;
    let mut cleaning = CleaningReport::default();
    let mut trajectories = Vec::new();
    for t in segment_trajectories(&log, config.gap_threshold) {
        let (cleaned, report) = clean(&t, config.v_max);
        cleaning += report;
        if !cleaned.is_empty() {
            trajectories.push(cleaned);
        }
    }
    let result = UserResult {
        user_id: log.user_id.clone(),
        files: log.files,
        records_invalid: log.invalid_records,
        gps_points: log.fixes.len(),
        cleaning,
        trajectories: Vec::new(),
        stay_points: Vec::new(),
        location_points: Vec::new(),
    };
    Ok((result, trajectories))
}

/// Users to process: the configured subset, or every user found.
pub fn selected_users(config: &PipelineConfig) -> Result<Vec<String>> {
    let found = discover_users(&config.data_dir)?;
    let users = match &config.users {
        None => found,
        Some(wanted) => {
            let found: BTreeSet<&String> = found.iter().collect();
            if let Some(missing) = wanted.iter().find(|u| !found.contains(u)) {
                return Err(Error::Config(format!(
                    "user {missing} not found in {}",
                    config.data_dir.display()
                )));
            }
            let mut w = wanted.clone();
            w.sort();
            w.dedup();
            w
        }
    };
    if users.is_empty() {
        return Err(Error::NoUsers(config.data_dir.clone()));
    }
    Ok(users)
}

/// Runs every stage in memory without writing anything.
pub fn run_in_memory(config: &PipelineConfig) -> Result<PipelineOutput> {
    config.validate()?;
    let users = selected_users(config)?;
    tracing::info!(users = users.len(), "processing users");

    let mut results: Vec<UserResult> = users
        .par_iter()
        .map(|user| {
            let (mut result, trajectories) = ingest_user(&config.data_dir.join(user), config)?;
            result.stay_points = trajectories
                .iter()
                .flat_map(|t| detect_stay_points(t, &config.stay))
                .collect();
            result.location_points = extract_location_points(&result.stay_points, &config.location);
            result.trajectories = trajectories;
            tracing::debug!(
                user = %result.user_id,
                stay_points = result.stay_points.len(),
                location_points = result.location_points.len(),
                "user done"
            );
            Ok(result)
        })
        .collect::<Result<_>>()?;
    results.sort_by(|a, b| a.user_id.cmp(&b.user_id));

    let location_points: Vec<LocationPoint> = results
        .iter()
        .flat_map(|r| r.location_points.iter().cloned())
        .collect();
    let pois = extract_pois(&location_points, &config.poi, config.min_users);
    let poi_sets = user_poi_sets(&pois, &users);
    let similarity = if poi_sets.len() >= 2 {
        rank_pairs(&poi_sets)?
    } else {
        Vec::new()
    };

    let summary = summarize(&results, pois.len(), &similarity, config);
    Ok(PipelineOutput {
        users: results,
        location_points,
        pois,
        poi_sets,
        similarity,
        summary,
    })
}

fn summarize(
    results: &[UserResult],
    poi_count: usize,
    similarity: &[SimilarityRecord],
    config: &PipelineConfig,
) -> PipelineSummary {
    let mut rows: Vec<SummaryRow> = results
        .iter()
        .map(|r| SummaryRow {
            user_id: r.user_id.clone(),
            trajectories: r.trajectories.len(),
            gps_points: r.gps_points,
            stay_points: r.stay_points.len(),
            location_points: r.location_points.len(),
        })
        .collect();
    rows.sort_by(|a, b| {
        b.stay_points
            .cmp(&a.stay_points)
            .then(a.user_id.cmp(&b.user_id))
    });
    let totals = rows.iter().fold(
        SummaryRow {
            user_id: "Total".into(),
            trajectories: 0,
            gps_points: 0,
            stay_points: 0,
            location_points: 0,
        },
        |mut acc, r| {
            acc.trajectories += r.trajectories;
            acc.gps_points += r.gps_points;
            acc.stay_points += r.stay_points;
            acc.location_points += r.location_points;
            acc
        },
    );
    PipelineSummary {
        rows,
        totals,
        poi_count,
        top_pairs: similarity.iter().take(config.top).cloned().collect(),
        stay_mode: config.stay.mode.as_str(),
    }
}

impl PipelineSummary {
    /// Plain-text report: the per-user table, totals, POI count and top pairs.
    pub fn render(&self) -> String {
        let mut s = String::new();
        let _ = writeln!(s, "stay-point mode: {}", self.stay_mode);
        let _ = writeln!(
            s,
            "{:<8} {:>12} {:>12} {:>12} {:>16}",
            "user", "trajectories", "gps_points", "stay_points", "location_points"
        );
        for r in self.rows.iter().chain(std::iter::once(&self.totals)) {
            let _ = writeln!(
                s,
                "{:<8} {:>12} {:>12} {:>12} {:>16}",
                r.user_id, r.trajectories, r.gps_points, r.stay_points, r.location_points
            );
        }
        let _ = writeln!(s, "\npois: {}", self.poi_count);
        if !self.top_pairs.is_empty() {
            let _ = writeln!(
                s,
                "\n{:<8} {:<8} {:>8} {:>6}",
                "user_a", "user_b", "shared", "score"
            );
            for p in &self.top_pairs {
                let _ = writeln!(
                    s,
                    "{:<8} {:<8} {:>8} {:>6}",
                    p.user_a,
                    p.user_b,
                    p.similarity.to_string(),
                    p.similarity.truncated(2)
                );
            }
        }
        s
    }
}

/// Writes every artifact of a finished run into `dir`.
pub fn write_outputs(dir: &Path, out: &PipelineOutput) -> Result<()> {
    output::ensure_dir(dir)?;

    let cleaning: Vec<CleaningRow> = out
        .users
        .iter()
        .map(|u| CleaningRow {
            user_id: u.user_id.clone(),
            files: u.files,
            records_invalid: u.records_invalid,
            trajectories: u.trajectories.len(),
            report: u.cleaning,
        })
        .collect();
    output::write_cleaning_csv(&dir.join(output::CLEANING_CSV), &cleaning)?;

    let stay_points: Vec<StayPoint> = out
        .users
        .iter()
        .flat_map(|u| u.stay_points.iter().cloned())
        .collect();
    output::write_staypoints_csv(&dir.join(output::STAYPOINTS_CSV), &stay_points)?;
    output::emit_geojson(
        &dir.join(output::STAYPOINTS_GEOJSON),
        &output::staypoint_features(&stay_points),
    )?;

    output::write_location_points_csv(
        &dir.join(output::LOCATION_POINTS_CSV),
        &out.location_points,
    )?;
    output::emit_geojson(
        &dir.join(output::LOCATION_POINTS_GEOJSON),
        &output::location_features(&out.location_points),
    )?;

    output::write_pois_csv(&dir.join(output::POIS_CSV), &out.pois)?;
    output::emit_geojson(
        &dir.join(output::POIS_GEOJSON),
        &output::poi_features(&out.pois),
    )?;

    output::write_similarity_csv(&dir.join(output::SIMILARITY_CSV), &out.similarity)?;

    let summary_csv = dir.join(output::SUMMARY_CSV);
    let mut w = csv::Writer::from_path(&summary_csv).map_err(|e| Error::csv(&summary_csv, e))?;
    for row in out
        .summary
        .rows
        .iter()
        .chain(std::iter::once(&out.summary.totals))
    {
        w.serialize(row).map_err(|e| Error::csv(&summary_csv, e))?;
    }
    w.flush().map_err(|e| Error::io(&summary_csv, e))?;

    let summary_txt = dir.join(output::SUMMARY_TXT);
    fs::write(&summary_txt, out.summary.render()).map_err(|e| Error::io(&summary_txt, e))
}

/// Runs the full pipeline and writes its artifacts to `config.output_dir`.
pub fn run_pipeline(config: &PipelineConfig) -> Result<PipelineOutput> {
    let out = run_in_memory(config)?;
    write_outputs(&config.output_dir, &out)?;
    Ok(out)
}
