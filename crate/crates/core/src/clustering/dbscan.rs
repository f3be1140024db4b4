use std::collections::VecDeque;

use crate::error::{Error, Result};
use crate::geo::GeoPoint;

use super::grid::GeoGrid;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DbscanParams {
    eps: f64,
    min_pts: usize,
}

impl DbscanParams {
    /// `eps` in meters (> 0); `min_pts` counts the point itself (>= 1).
    pub fn new(eps: f64, min_pts: usize) -> Result<Self> {
        if !eps.is_finite() || eps <= 0.0 {
            return Err(Error::InvalidParameter(format!(
                "eps must be positive, got {eps}"
            )));
        }
        if min_pts == 0 {
            return Err(Error::InvalidParameter("min_pts must be at least 1".into()));
        }
        Ok(DbscanParams { eps, min_pts })
    }

    pub fn eps(&self) -> f64 {
        self.eps
    }

    pub fn min_pts(&self) -> usize {
        self.min_pts
    }
}

/// Per-point cluster labels. `None` is noise; cluster ids are dense and
/// numbered in the order clusters are discovered.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct ClusterAssignment {
    pub labels: Vec<Option<usize>>,
    pub core: Vec<bool>,
    pub n_clusters: usize,
}

impl ClusterAssignment {
    /// Member indices of each cluster, ascending.
    pub fn clusters(&self) -> Vec<Vec<usize>> {
        let mut out = vec![Vec::new(); self.n_clusters];
        for (i, label) in self.labels.iter().enumerate() {
            if let Some(c) = label {
                out[*c].push(i);
            }
        }
        out
    }

    pub fn noise(&self) -> Vec<usize> {
        (0..self.labels.len())
            .filter(|&i| self.labels[i].is_none())
            .collect()
    }
}

#[derive(Clone, Copy, PartialEq)]
enum State {
    Unvisited,
    Noise,
    Member(usize),
}

/// DBSCAN with the haversine metric.
///
/// Neighborhoods are inclusive (`<= eps`) and count the point itself. A
/// border point reachable from several clusters joins the one discovered
/// first in index order.
pub fn dbscan(points: &[GeoPoint], params: &DbscanParams) -> ClusterAssignment {
    let n = points.len();
    if n == 0 {
        return ClusterAssignment::default();
    }
    let grid = GeoGrid::new(points, params.eps);
    let mut state = vec![State::Unvisited; n];
    let mut core = vec![false; n];
    let mut n_clusters = 0;
    let mut queue = VecDeque::new();

    for i in 0..n {
        if state[i] != State::Unvisited {
            continue;
        }
        let seeds = grid.neighbors(i);
        if seeds.len() < params.min_pts {
            state[i] = State::Noise;
            continue;
        }
        let cluster = n_clusters;
        n_clusters += 1;
        state[i] = State::Member(cluster);
        core[i] = true;
        queue.extend(seeds);

        while let Some(j) = queue.pop_front() {
            match state[j] {
                State::Noise => state[j] = State::Member(cluster),
                State::Unvisited => {
                    state[j] = State::Member(cluster);
                    let reach = grid.neighbors(j);
                    if reach.len() >= params.min_pts {
                        core[j] = true;
                        queue.extend(
                            reach
                                .into_iter()
                                .filter(|&q| matches!(state[q], State::Unvisited | State::Noise)),
                        );
                    }
                }
                State::Member(_) => {}
            }
        }
    }

    let labels = state
        .into_iter()
        .map(|s| match s {
            State::Member(c) => Some(c),
            _ => None,
        })
        .collect();
    ClusterAssignment {
        labels,
        core,
        n_clusters,
    }
}
