//! Density-based clustering over geographic points.

mod dbscan;
mod grid;
mod kdist;

pub use dbscan::{dbscan, ClusterAssignment, DbscanParams};
pub use kdist::{k_dist_curve, suggest_eps, EpsSuggestion};
