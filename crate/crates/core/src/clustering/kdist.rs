use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::geo::{haversine_distance, GeoPoint};

/// Distance from every point to its k-th nearest other point, sorted
/// descending (the classic k-dist plot).
pub fn k_dist_curve(points: &[GeoPoint], k: usize) -> Result<Vec<f64>> {
    if k == 0 {
        return Err(Error::InvalidParameter("k must be at least 1".into()));
    }
    if points.len() <= k {
        return Err(Error::TooFewPoints { k, n: points.len() });
    }
    let mut curve: Vec<f64> = (0..points.len())
        .into_par_iter()
        .map(|i| {
            let mut d: Vec<f64> = points
                .iter()
                .enumerate()
                .filter(|&(j, _)| j != i)
                .map(|(_, q)| haversine_distance(points[i], *q))
                .collect();
            *d.select_nth_unstable_by(k - 1, f64::total_cmp).1
        })
        .collect();
    curve.sort_unstable_by(|a, b| b.total_cmp(a));
    Ok(curve)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EpsSuggestion {
    pub eps: f64,
    /// Position of the knee in the curve.
    pub index: usize,
    /// False when the largest second difference is under 1% of the curve's range.
    pub pronounced_knee: bool,
}

/// Picks the curve value with the largest discrete second difference.
pub fn suggest_eps(curve: &[f64]) -> Result<EpsSuggestion> {
    if curve.len() < 3 {
        return Err(Error::InvalidParameter(format!(
            "k-dist curve needs at least 3 values, got {}",
            curve.len()
        )));
    }
    let (index, best) = (1..curve.len() - 1)
        .map(|i| (i, curve[i - 1] - 2.0 * curve[i] + curve[i + 1]))
        .fold(
            (1, f64::NEG_INFINITY),
            |acc, (i, s)| if s > acc.1 { (i, s) } else { acc },
        );
    let max = curve.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let min = curve.iter().copied().fold(f64::INFINITY, f64::min);
    let range = max - min;
    Ok(EpsSuggestion {
        eps: curve[index],
        index,
        pronounced_knee: range > 0.0 && best >= 0.01 * range,
    })
}
