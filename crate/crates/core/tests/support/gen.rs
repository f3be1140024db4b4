//! Seeded random inputs shared by the property tests and the acceptance run.

use chrono::Duration;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use trajmine::ingest::RawUserLog;
use trajmine::{GeoPoint, GpsFix, Trajectory};

use super::fixture::{fix, offset, t0, BASE};

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Uniform points in a `side_m` square around the fixture base.
pub fn points_in_box(rng: &mut impl Rng, n: usize, side_m: f64) -> Vec<GeoPoint> {
    (0..n)
        .map(|_| {
            offset(
                BASE,
                rng.gen_range(0.0..side_m) - side_m / 2.0,
                rng.gen_range(0.0..side_m) - side_m / 2.0,
            )
        })
        .collect()
}

/// Clumpy points: a few random hot spots with points scattered around them,
/// plus uniform background. Produces real clusters, borders and noise.
pub fn clumpy_points(rng: &mut impl Rng, n: usize, side_m: f64, spread_m: f64) -> Vec<GeoPoint> {
    let n_hubs = rng.gen_range(1..6);
    let hubs = points_in_box(rng, n_hubs, side_m);
    (0..n)
        .map(|_| {
            if rng.gen_bool(0.7) {
                let h = hubs[rng.gen_range(0..hubs.len())];
                offset(
                    h,
                    rng.gen_range(-spread_m..spread_m),
                    rng.gen_range(-spread_m..spread_m),
                )
            } else {
                offset(
                    BASE,
                    rng.gen_range(-side_m / 2.0..side_m / 2.0),
                    rng.gen_range(-side_m / 2.0..side_m / 2.0),
                )
            }
        })
        .collect()
}

pub fn any_point(rng: &mut impl Rng) -> GeoPoint {
    GeoPoint {
        lat: rng.gen_range(-89.0..89.0),
        lon: rng.gen_range(-179.0..179.0),
    }
}

/// A random walk mixing dwells, walking, driving, occasional spikes and
/// long recording gaps. Timestamps strictly increase.
pub fn random_fixes(rng: &mut impl Rng, n: usize) -> Vec<GpsFix> {
    let mut out = Vec::with_capacity(n);
    let mut p = BASE;
    let mut t = t0();
    let mut mode = 0;
    for _ in 0..n {
        if rng.gen_bool(0.05) {
            mode = rng.gen_range(0..3);
        }
        let dt = match rng.gen_range(0..100) {
            0..=1 => rng.gen_range(1_800..20_000),
            _ => rng.gen_range(1..90),
        };
        t += Duration::seconds(dt);
        let step = match mode {
            0 => rng.gen_range(0.0..8.0),
            1 => rng.gen_range(0.0..2.0) * dt as f64,
            _ => rng.gen_range(5.0..20.0) * dt.min(60) as f64,
        };
        let heading = rng.gen_range(0.0..std::f64::consts::TAU);
        p = offset(p, step * heading.sin(), step * heading.cos());
        let recorded = if rng.gen_bool(0.02) {
            offset(
                p,
                rng.gen_range(-5_000.0..5_000.0),
                rng.gen_range(-5_000.0..5_000.0),
            )
        } else {
            p
        };
        out.push(fix(recorded, t));
    }
    out
}

pub fn random_trajectory(rng: &mut impl Rng, n: usize) -> Trajectory {
    Trajectory::new("r", random_fixes(rng, n.max(1))).expect("strictly increasing by construction")
}

pub fn random_log(rng: &mut impl Rng, n: usize) -> RawUserLog {
    RawUserLog {
        user_id: "r".into(),
        fixes: random_fixes(rng, n),
        invalid_records: 0,
        files: 1,
    }
}
