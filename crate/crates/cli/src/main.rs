//! `trajmine` command line.
//!
//! Each stage subcommand reads the previous stage's CSV and writes its own
//! artifacts into `--out`; `pipeline` runs every stage in memory.

mod config;

use std::collections::BTreeSet;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use rayon::prelude::*;
use tracing_subscriber::EnvFilter;

use trajmine::clustering::{k_dist_curve, suggest_eps, DbscanParams};
use trajmine::ingest::ParseMode;
use trajmine::output::{self, CleaningRow};
use trajmine::pipeline::{ingest_user, run_pipeline, selected_users, PipelineConfig};
use trajmine::places::{extract_location_points, extract_pois, user_poi_sets};
use trajmine::similarity::rank_pairs;
use trajmine::staypoint::{detect_stay_points, RunMode, StayPointParams};
use trajmine::{Error, ErrorKind, Result};

use config::{pick, ConfigFile};

#[derive(Parser)]
#[command(
    name = "trajmine",
    version,
    about = "Mine stay points, places and similar users from GPS logs"
)]
struct Cli {
    /// Config file of `key = value` lines; flags override it.
    #[arg(long, global = true)]
    config: Option<PathBuf>,

    /// Worker threads for per-user stages (default: all cores).
    #[arg(long, global = true)]
    jobs: Option<usize>,

    /// More log output (-v info, -vv debug).
    #[arg(short, long, action = clap::ArgAction::Count, global = true)]
    verbose: u8,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Parse PLT logs, segment and clean them into fixes.csv.
    Ingest {
        #[command(flatten)]
        source: Source,
        #[command(flatten)]
        clean: Cleaning,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Detect stay points from fixes.csv.
    Staypoints {
        #[arg(long)]
        input: PathBuf,
        #[command(flatten)]
        stay: Stay,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Sorted k-dist curve and a suggested eps.
    Kdist {
        /// staypoints.csv or location_points.csv
        #[arg(long)]
        input: PathBuf,
        #[arg(long, default_value_t = 4)]
        k: usize,
        /// Only this user's points (stay points input).
        #[arg(long)]
        user: Option<String>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Cluster each user's stay points into location points.
    Locations {
        #[arg(long)]
        input: PathBuf,
        #[arg(long)]
        eps: Option<f64>,
        #[arg(long)]
        min_pts: Option<usize>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Cluster all location points into POIs.
    Pois {
        #[arg(long)]
        input: PathBuf,
        #[arg(long)]
        eps: Option<f64>,
        #[arg(long)]
        min_pts: Option<usize>,
        #[arg(long)]
        min_users: Option<usize>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Rank user pairs by Jaccard similarity of their POI sets.
    Similarity {
        #[arg(long)]
        input: PathBuf,
        /// location_points.csv, so users without POIs are ranked too.
        #[arg(long)]
        locations: Option<PathBuf>,
        #[arg(long)]
        top: Option<usize>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Run every stage in memory and write all artifacts.
    Pipeline {
        #[command(flatten)]
        source: Source,
        #[command(flatten)]
        clean: Cleaning,
        #[command(flatten)]
        stay: Stay,
        #[arg(long)]
        lp_eps: Option<f64>,
        #[arg(long)]
        lp_min_pts: Option<usize>,
        #[arg(long)]
        poi_eps: Option<f64>,
        #[arg(long)]
        poi_min_pts: Option<usize>,
        #[arg(long)]
        min_users: Option<usize>,
        #[arg(long)]
        top: Option<usize>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

#[derive(Args)]
struct Source {
    /// Geolife `Data` directory (one sub-directory per user).
    #[arg(long)]
    data: Option<PathBuf>,
    /// Comma-separated user ids (default: all).
    #[arg(long, value_delimiter = ',')]
    users: Option<Vec<String>>,
}

#[derive(Args)]
struct Cleaning {
    /// Recording gap that starts a new trajectory.
    #[arg(long)]
    gap: Option<humantime::Duration>,
    /// Speed limit in m/s for the spike filter.
    #[arg(long)]
    v_max: Option<f64>,
    /// Fail on the first malformed record instead of skipping it.
    #[arg(long)]
    strict_parse: bool,
}

#[derive(Args)]
struct Stay {
    /// Distance threshold in meters.
    #[arg(long)]
    dist: Option<f64>,
    /// Time threshold, e.g. `20m`.
    #[arg(long)]
    time: Option<humantime::Duration>,
    /// Compare fixes against the run's first fix instead of its predecessor.
    #[arg(long)]
    anchored: bool,
}

fn chrono_duration(d: humantime::Duration) -> Result<chrono::Duration> {
    chrono::Duration::from_std(*d)
        .map_err(|e| Error::InvalidParameter(format!("duration {d}: {e}")))
}

fn out_dir(flag: Option<PathBuf>, file: &ConfigFile) -> Result<PathBuf> {
    let dir = pick(flag, file, "out", PathBuf::from("."))?;
    output::ensure_dir(&dir)?;
    Ok(dir)
}

fn base_config(source: Source, clean: &Cleaning, file: &ConfigFile) -> Result<PipelineConfig> {
    let data = match source.data {
        Some(d) => d,
        None => file
            .get::<PathBuf>("data")?
            .ok_or_else(|| Error::Config("--data is required".into()))?,
    };
    let mut cfg = PipelineConfig::new(data, PathBuf::new());
    cfg.users = match source.users {
        Some(u) => Some(u),
        None => file
            .get::<String>("users")?
            .map(|s| s.split(',').map(|u| u.trim().to_string()).collect()),
    };
    if let Some(gap) = clean.gap.or(file.get("gap")?) {
        cfg.gap_threshold = chrono_duration(gap)?;
    }
    cfg.v_max = pick(clean.v_max, file, "v-max", cfg.v_max)?;
    if clean.strict_parse || file.flag("strict-parse")? {
        cfg.parse_mode = ParseMode::Strict;
    }
    Ok(cfg)
}

fn stay_params(stay: &Stay, file: &ConfigFile) -> Result<StayPointParams> {
    let mut p = StayPointParams::default();
    p.dist_threshold = pick(stay.dist, file, "dist", p.dist_threshold)?;
    if let Some(t) = stay.time.or(file.get("time")?) {
        p.time_threshold = chrono_duration(t)?;
    }
    if stay.anchored || file.flag("anchored")? {
        p.mode = RunMode::Anchored;
    }
    p.validate()?;
    Ok(p)
}

fn dbscan_params(
    eps: Option<f64>,
    min_pts: Option<usize>,
    file: &ConfigFile,
    prefix: &str,
    default: DbscanParams,
) -> Result<DbscanParams> {
    DbscanParams::new(
        pick(eps, file, &format!("{prefix}-eps"), default.eps())?,
        pick(
            min_pts,
            file,
            &format!("{prefix}-min-pts"),
            default.min_pts(),
        )?,
    )
}

fn run(cli: Cli) -> Result<()> {
    let file = match &cli.config {
        Some(path) => ConfigFile::load(path)?,
        None => ConfigFile::default(),
    };
    let jobs = pick(cli.jobs, &file, "jobs", 0)?;
    if jobs > 0 {
        rayon::ThreadPoolBuilder::new()
            .num_threads(jobs)
            .build_global()
            .map_err(|e| Error::InvalidParameter(format!("--jobs: {e}")))?;
    }

    match cli.command {
        Command::Ingest { source, clean, out } => {
            let cfg = base_config(source, &clean, &file)?;
            cfg.validate()?;
            let users = selected_users(&cfg)?;
            let out = out_dir(out, &file)?;
            let ingested = users
                .par_iter()
                .map(|u| ingest_user(&cfg.data_dir.join(u), &cfg))
                .collect::<Result<Vec<_>>>()?;
            let rows: Vec<CleaningRow> = ingested
                .iter()
                .map(|(r, t)| CleaningRow {
                    user_id: r.user_id.clone(),
                    files: r.files,
                    records_invalid: r.records_invalid,
                    trajectories: t.len(),
                    report: r.cleaning,
                })
                .collect();
            let fixes: Vec<_> = ingested.into_iter().map(|(r, t)| (r.user_id, t)).collect();
            output::write_fixes_csv(&out.join(output::FIXES_CSV), &fixes)?;
            output::write_cleaning_csv(&out.join(output::CLEANING_CSV), &rows)?;
            let kept: usize = fixes.iter().flat_map(|(_, t)| t).map(|t| t.len()).sum();
            println!("{} users, {kept} fixes kept", fixes.len());
        }
        Command::Staypoints { input, stay, out } => {
            let params = stay_params(&stay, &file)?;
            let users = output::read_fixes_csv(&input)?;
            let out = out_dir(out, &file)?;
            let per_user: Vec<Vec<_>> = users
                .par_iter()
                .map(|(_, ts)| {
                    ts.iter()
                        .flat_map(|t| detect_stay_points(t, &params))
                        .collect()
                })
                .collect();
            let sps: Vec<_> = per_user.into_iter().flatten().collect();
            output::write_staypoints_csv(&out.join(output::STAYPOINTS_CSV), &sps)?;
            output::emit_geojson(
                &out.join(output::STAYPOINTS_GEOJSON),
                &output::staypoint_features(&sps),
            )?;
            println!("{} stay points ({} mode)", sps.len(), params.mode.as_str());
        }
        Command::Kdist {
            input,
            k,
            user,
            out,
        } => {
            let points = read_points(&input, user.as_deref())?;
            let curve = k_dist_curve(&points, k)?;
            let out = out_dir(out, &file)?;
            output::write_kdist_csv(&out.join("kdist.csv"), &curve)?;
            let s = suggest_eps(&curve)?;
            println!(
                "suggested eps: {:.1} m (rank {} of {})",
                s.eps,
                s.index,
                curve.len()
            );
            if !s.pronounced_knee {
                println!("warning: the curve has no pronounced knee; inspect kdist.csv");
            }
        }
        Command::Locations {
            input,
            eps,
            min_pts,
            out,
        } => {
            let params = dbscan_params(
                eps,
                min_pts,
                &file,
                "lp",
                trajmine::places::default_location_params(),
            )?;
            let by_user = output::group_by_user(output::read_staypoints_csv(&input)?);
            let out = out_dir(out, &file)?;
            let per_user: Vec<Vec<_>> = by_user
                .par_iter()
                .map(|(_, sps)| extract_location_points(sps, &params))
                .collect();
            let lps: Vec<_> = per_user.into_iter().flatten().collect();
            output::write_location_points_csv(&out.join(output::LOCATION_POINTS_CSV), &lps)?;
            output::emit_geojson(
                &out.join(output::LOCATION_POINTS_GEOJSON),
                &output::location_features(&lps),
            )?;
            println!("{} location points", lps.len());
        }
        Command::Pois {
            input,
            eps,
            min_pts,
            min_users,
            out,
        } => {
            let params = dbscan_params(
                eps,
                min_pts,
                &file,
                "poi",
                trajmine::places::default_poi_params(),
            )?;
            let min_users = pick(min_users, &file, "min-users", 1)?;
            let lps = output::read_location_points_csv(&input)?;
            let out = out_dir(out, &file)?;
            let pois = extract_pois(&lps, &params, min_users);
            output::write_pois_csv(&out.join(output::POIS_CSV), &pois)?;
            output::emit_geojson(
                &out.join(output::POIS_GEOJSON),
                &output::poi_features(&pois),
            )?;
            println!("{} POIs", pois.len());
        }
        Command::Similarity {
            input,
            locations,
            top,
            out,
        } => {
            let top = pick(top, &file, "top", 10)?;
            let pois = output::read_pois_csv(&input)?;
            let users: Vec<String> = match locations {
                Some(path) => output::users_of(&output::read_location_points_csv(&path)?),
                None => pois
                    .iter()
                    .flat_map(|p| p.visiting_users.iter().cloned())
                    .collect::<BTreeSet<_>>()
                    .into_iter()
                    .collect(),
            };
            let ranked = rank_pairs(&user_poi_sets(&pois, &users))?;
            let out = out_dir(out, &file)?;
            output::write_similarity_csv(&out.join(output::SIMILARITY_CSV), &ranked)?;
            for r in ranked.iter().take(top) {
                println!(
                    "{} {} {} {}",
                    r.user_a,
                    r.user_b,
                    r.similarity,
                    r.similarity.truncated(2)
                );
            }
        }
        Command::Pipeline {
            source,
            clean,
            stay,
            lp_eps,
            lp_min_pts,
            poi_eps,
            poi_min_pts,
            min_users,
            top,
            out,
        } => {
            let mut cfg = base_config(source, &clean, &file)?;
            cfg.stay = stay_params(&stay, &file)?;
            cfg.location = dbscan_params(lp_eps, lp_min_pts, &file, "lp", cfg.location)?;
            cfg.poi = dbscan_params(poi_eps, poi_min_pts, &file, "poi", cfg.poi)?;
            cfg.min_users = pick(min_users, &file, "min-users", cfg.min_users)?;
            cfg.top = pick(top, &file, "top", cfg.top)?;
            cfg.output_dir = pick(out, &file, "out", PathBuf::from("."))?;
            let result = run_pipeline(&cfg)?;
            print!("{}", result.summary.render());
        }
    }
    Ok(())
}

fn read_points(path: &Path, user: Option<&str>) -> Result<Vec<trajmine::GeoPoint>> {
    let is_locations = path
        .file_name()
        .is_some_and(|n| n.to_string_lossy().starts_with("location"));
    let keep = |u: &str| user.is_none_or(|want| want == u);
    Ok(if is_locations {
        output::read_location_points_csv(path)?
            .into_iter()
            .filter(|lp| keep(&lp.user_id))
            .map(|lp| lp.centroid)
            .collect()
    } else {
        output::read_staypoints_csv(path)?
            .into_iter()
            .filter(|sp| keep(&sp.user_id))
            .map(|sp| sp.centroid)
            .collect()
    })
}

fn exit_code(kind: ErrorKind) -> u8 {
    match kind {
        ErrorKind::Usage => 2,
        ErrorKind::Data => 3,
        ErrorKind::Io => 4,
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let level = match cli.verbose {
        0 => "warn",
        1 => "info",
        _ => "debug",
    };
    tracing_subscriber::fmt()
        .with_env_filter(
            EnvFilter::try_from_default_env().unwrap_or_else(|_| EnvFilter::new(level)),
        )
        .with_writer(std::io::stderr)
        .init();

    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(exit_code(e.kind()))
        }
    }
}
