use std::collections::HashMap;

use crate::geo::{haversine_distance, GeoPoint, EARTH_RADIUS_M};

// Cells are padded slightly so floating-point rounding at a cell boundary
// can never push a true neighbor two cells away.
const PAD: f64 = 1.0 + 1e-9;

/// Uniform latitude/longitude bucket grid for fixed-radius neighbor queries.
///
/// Cell height is the latitude span of `radius`. Cell width is the largest
/// longitude span two points within `radius` of each other can have at the
/// most poleward latitude present, so every true neighbor lies in the 3x3
/// block around a point's own cell. Longitudes are not wrapped at ±180°.
pub(crate) struct GeoGrid<'a> {
    points: &'a [GeoPoint],
    radius: f64,
    cell_lat: f64,
    cell_lon: Option<f64>,
    cells: HashMap<(i64, i64), Vec<usize>>,
}

impl<'a> GeoGrid<'a> {
    pub(crate) fn new(points: &'a [GeoPoint], radius: f64) -> Self {
        let angle = radius / EARTH_RADIUS_M;
        let cell_lat = angle.to_degrees() * PAD;

        let min_cos = points
            .iter()
            .map(|p| p.lat.to_radians().cos().max(0.0))
            .fold(1.0_f64, f64::min);
        let spread = (angle / 2.0).sin() / min_cos;
        let cell_lon = (min_cos > 0.0 && spread < 1.0 && angle < std::f64::consts::PI)
            .then(|| (2.0 * spread.asin()).to_degrees() * PAD);

        let mut grid = GeoGrid {
            points,
            radius,
            cell_lat,
            cell_lon,
            cells: HashMap::new(),
        };
        for (i, p) in points.iter().enumerate() {
            let key = grid.key(p);
            grid.cells.entry(key).or_default().push(i);
        }
        grid
    }

    fn key(&self, p: &GeoPoint) -> (i64, i64) {
        let row = (p.lat / self.cell_lat).floor() as i64;
        let col = self.cell_lon.map_or(0, |w| (p.lon / w).floor() as i64);
        (row, col)
    }

    /// Indices of all points within `radius` of point `i` (inclusive, self
    /// included), in ascending order.
    pub(crate) fn neighbors(&self, i: usize) -> Vec<usize> {
        let p = self.points[i];
        let (row, col) = self.key(&p);
        let mut out = Vec::new();
        for dr in -1..=1 {
            for dc in -1..=1 {
                if self.cell_lon.is_none() && dc != 0 {
                    continue;
                }
                if let Some(bucket) = self.cells.get(&(row + dr, col + dc)) {
                    out.extend(
                        bucket
                            .iter()
                            .copied()
                            .filter(|&j| haversine_distance(p, self.points[j]) <= self.radius),
                    );
                }
            }
        }
        out.sort_unstable();
        out
    }
}
