//! Geolife PLT parsing and per-user trajectory assembly.
//!
//! A PLT file has six header lines followed by one record per line:
//!
//! ```text
//! lat,lon,0,altitude_feet,days_since_1899-12-30,YYYY-MM-DD,HH:MM:SS
//! ```
//!
//! Timestamps come from the date and time fields (UTC); the fractional-day
//! field is ignored. An altitude of `-777` means "no altitude".

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use chrono::{DateTime, Duration, NaiveDate, NaiveDateTime, NaiveTime, TimeZone, Utc};

use crate::error::{Error, Result};
use crate::geo::{GeoPoint, GpsFix, Trajectory};

pub const PLT_HEADER_LINES: usize = 6;
pub const FEET_TO_METERS: f64 = 0.3048;
const NO_ALTITUDE: f64 = -777.0;

/// How to treat records that fail to parse.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum ParseMode {
    /// Skip and count malformed records.
    #[default]
    Lenient,
    /// Fail on the first malformed record.
    Strict,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct ParsedPlt {
    pub fixes: Vec<GpsFix>,
    /// Records skipped in lenient mode.
    pub invalid: usize,
}

/// All of one user's fixes, merged across PLT files, sorted, de-duplicated.
#[derive(Debug, Clone, PartialEq)]
pub struct RawUserLog {
    pub user_id: String,
    pub fixes: Vec<GpsFix>,
    pub invalid_records: usize,
    pub files: usize,
}

pub fn parse_plt(contents: &str, mode: ParseMode) -> Result<ParsedPlt> {
    let mut lines = contents.lines();
    for seen in 0..PLT_HEADER_LINES {
        if lines.next().is_none() {
            return Err(Error::Format(format!(
                "expected {PLT_HEADER_LINES} header lines, found {seen}"
            )));
        }
    }

    let mut out = ParsedPlt::default();
    for (i, line) in lines.enumerate() {
        let line = line.trim();
        if line.is_empty() {
            continue;
        }
        match parse_record(line) {
            Ok(fix) => out.fixes.push(fix),
            Err(reason) => match mode {
                ParseMode::Lenient => out.invalid += 1,
                ParseMode::Strict => {
                    return Err(Error::MalformedRecord {
                        line: PLT_HEADER_LINES + i + 1,
                        reason,
                    })
                }
            },
        }
    }
    Ok(out)
}

fn parse_record(line: &str) -> std::result::Result<GpsFix, String> {
    let fields: Vec<&str> = line.split(',').map(str::trim).collect();
    if fields.len() < 7 {
        return Err(format!("expected 7 fields, found {}", fields.len()));
    }
    let num = |idx: usize, name: &str| {
        fields[idx]
            .parse::<f64>()
            .map_err(|e| format!("bad {name} {:?}: {e}", fields[idx]))
    };
    let lat = num(0, "latitude")?;
    let lon = num(1, "longitude")?;
    let point = GeoPoint::new(lat, lon).map_err(|e| e.to_string())?;

    let alt_feet = num(3, "altitude")?;
    let altitude = if alt_feet == NO_ALTITUDE || !alt_feet.is_finite() {
        None
    } else {
        Some(alt_feet * FEET_TO_METERS)
    };

    let date = NaiveDate::parse_from_str(fields[5], "%Y-%m-%d")
        .map_err(|e| format!("bad date {:?}: {e}", fields[5]))?;
    let time = NaiveTime::parse_from_str(fields[6], "%H:%M:%S")
        .map_err(|e| format!("bad time {:?}: {e}", fields[6]))?;
    let timestamp = Utc.from_utc_datetime(&NaiveDateTime::new(date, time));

    Ok(GpsFix {
        point,
        altitude,
        timestamp,
    })
}

fn plt_epoch() -> DateTime<Utc> {
    Utc.with_ymd_and_hms(1899, 12, 30, 0, 0, 0).unwrap()
}

/// Serializes fixes as a PLT file; the inverse of [`parse_plt`] up to
/// 6-decimal coordinate precision.
pub fn write_plt(fixes: &[GpsFix]) -> String {
    let mut out = String::from(
        "Geolife trajectory\nWGS 84\nAltitude is in Feet\nReserved 3\n0,2,255,My Track,0,0,2,8421376\n0\n",
    );
    let epoch = plt_epoch();
    for f in fixes {
        let feet = f.altitude.map_or(NO_ALTITUDE, |m| {
            (m / FEET_TO_METERS * 100.0).round() / 100.0
        });
        let days = (f.timestamp - epoch).num_seconds() as f64 / 86_400.0;
        let _ = writeln!(
            out,
            "{:.6},{:.6},0,{},{:.10},{},{}",
            f.point.lat,
            f.point.lon,
            feet,
            days,
            f.timestamp.format("%Y-%m-%d"),
            f.timestamp.format("%H:%M:%S"),
        );
    }
    out
}

/// Lists user ids (subdirectories holding a `Trajectory` folder), sorted.
pub fn discover_users(data_dir: &Path) -> Result<Vec<String>> {
    if !data_dir.is_dir() {
        return Err(Error::MissingDataDir(data_dir.to_path_buf()));
    }
    let entries = fs::read_dir(data_dir).map_err(|e| Error::io(data_dir, e))?;
    let mut users = Vec::new();
    for entry in entries {
        let entry = entry.map_err(|e| Error::io(data_dir, e))?;
        let path = entry.path();
        if path.join("Trajectory").is_dir() {
            if let Some(name) = path.file_name().and_then(|n| n.to_str()) {
                users.push(name.to_string());
            }
        }
    }
    users.sort();
    Ok(users)
}

fn plt_files(traj_dir: &Path) -> Result<Vec<PathBuf>> {
    let entries = fs::read_dir(traj_dir).map_err(|e| Error::io(traj_dir, e))?;
    let mut files = Vec::new();
    for entry in entries {
        let path = entry.map_err(|e| Error::io(traj_dir, e))?.path();
        let is_plt = path
            .extension()
            .and_then(|e| e.to_str())
            .is_some_and(|e| e.eq_ignore_ascii_case("plt"));
        if is_plt && path.is_file() {
            files.push(path);
        }
    }
    files.sort();
    Ok(files)
}

/// Loads every PLT file under `<user_dir>/Trajectory`.
pub fn load_user(user_dir: &Path, mode: ParseMode) -> Result<RawUserLog> {
    let user_id = user_dir
        .file_name()
        .and_then(|n| n.to_str())
        .unwrap_or_default()
        .to_string();
    let files = plt_files(&user_dir.join("Trajectory"))?;

    let mut fixes = Vec::new();
    let mut invalid_records = 0;
    for path in &files {
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let parsed = parse_plt(&text, mode).map_err(|e| match e {
            Error::MalformedRecord { line, reason } => Error::MalformedRecord {
                line,
                reason: format!("{}: {reason}", path.display()),
            },
            Error::Format(msg) => Error::Format(format!("{}: {msg}", path.display())),
            other => other,
        })?;
        if parsed.invalid > 0 {
            tracing::debug!(file = %path.display(), skipped = parsed.invalid, "skipped malformed records");
        }
        invalid_records += parsed.invalid;
        fixes.extend(parsed.fixes);
    }

    sort_and_dedup(&mut fixes);
    Ok(RawUserLog {
        user_id,
        fixes,
        invalid_records,
        files: files.len(),
    })
}

/// Sorts by timestamp and drops exact duplicates (same instant and coordinates).
///
/// Ties on the instant are ordered by coordinates so the result does not
/// depend on file order.
pub fn sort_and_dedup(fixes: &mut Vec<GpsFix>) {
    fixes.sort_by(|a, b| {
        a.timestamp
            .cmp(&b.timestamp)
            .then(a.point.lat.total_cmp(&b.point.lat))
            .then(a.point.lon.total_cmp(&b.point.lon))
    });
    fixes.dedup_by(|b, a| a.timestamp == b.timestamp && a.point == b.point);
}

/// Splits a sorted log wherever consecutive fixes are more than `gap_threshold` apart.
pub fn segment_trajectories(log: &RawUserLog, gap_threshold: Duration) -> Vec<Trajectory> {
    let mut out = Vec::new();
    let mut current: Vec<GpsFix> = Vec::new();
    for fix in &log.fixes {
        if let Some(last) = current.last() {
            if fix.timestamp - last.timestamp > gap_threshold {
                out.push(Trajectory {
                    user_id: log.user_id.clone(),
                    fixes: std::mem::take(&mut current),
                });
            }
        }
        current.push(*fix);
    }
    if !current.is_empty() {
        out.push(Trajectory {
            user_id: log.user_id.clone(),
            fixes: current,
        });
    }
    out
}
