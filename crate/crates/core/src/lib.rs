//! Trajectory mining over raw GPS logs.
//!
//! The pipeline turns Geolife-style PLT logs into:
//!
//! 1. cleaned, gap-segmented [`Trajectory`]s ([`ingest`], [`preprocess`]),
//! 2. per-trajectory [`StayPoint`]s ([`staypoint`]),
//! 3. per-user [`LocationPoint`]s and community [`Poi`]s ([`places`], built
//!    on the haversine DBSCAN in [`clustering`]),
//! 4. a ranked Jaccard similarity report between users ([`similarity`]).
//!
//! [`pipeline`] wires the stages together and [`output`] holds the CSV and
//! GeoJSON formats each stage reads and writes.

pub mod clustering;
pub mod error;
pub mod geo;
pub mod ingest;
pub mod output;
pub mod pipeline;
pub mod places;
pub mod preprocess;
pub mod similarity;
pub mod staypoint;

pub use error::{Error, ErrorKind, Result};
pub use geo::{centroid, haversine_distance, speed_between, GeoPoint, GpsFix, Trajectory};
pub use places::{LocationPoint, Poi};
pub use staypoint::{StayPoint, StayPointParams};
