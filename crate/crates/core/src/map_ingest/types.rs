use std::fmt;

use serde::{Deserialize, Serialize};

/// WGS84 coordinate in degrees.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct GeoPoint {
    pub lon: f64,
    pub lat: f64,
}

impl GeoPoint {
    pub fn new(lon: f64, lat: f64) -> Self {
        Self { lon, lat }
    }

    pub fn is_valid(&self) -> bool {
        self.lon.is_finite()
            && self.lat.is_finite()
            && (-180.0..=180.0).contains(&self.lon)
            && (-90.0..=90.0).contains(&self.lat)
    }
}

/// Meters east (`x`) and north (`y`) of the document origin.
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct LocalPoint {
    pub x: f64,
    pub y: f64,
}

/// Largest coordinate magnitude accepted in the local frame.
pub const LOCAL_LIMIT: f64 = 1.0e7;

impl LocalPoint {
    pub const fn new(x: f64, y: f64) -> Self {
        Self { x, y }
    }

    pub fn is_valid(&self) -> bool {
        self.x.is_finite() && self.y.is_finite() && self.x.abs() <= LOCAL_LIMIT && self.y.abs() <= LOCAL_LIMIT
    }

    pub fn distance(&self, other: &LocalPoint) -> f64 {
        (self.x - other.x).hypot(self.y - other.y)
    }
}

/// Identifier of a map feature, unique within its layer.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct FeatureId(pub i64);

impl fmt::Display for FeatureId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

/// The two building archetypes: gable-roofed houses and flat-roofed
/// industrial structures.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BuildingClass {
    Residential,
    Industrial,
}

impl BuildingClass {
    /// `industrial`, `warehouse` and `retail` map to industrial; everything
    /// else (including `yes`) is residential.
    pub fn from_subtag(subtag: &str) -> Self {
        match subtag.trim().to_ascii_lowercase().as_str() {
            "industrial" | "warehouse" | "retail" => BuildingClass::Industrial,
            _ => BuildingClass::Residential,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BuildingFootprint {
    pub id: FeatureId,
    /// Counter-clockwise ring without the closing duplicate vertex.
    pub ring: Vec<LocalPoint>,
    pub height: f64,
    pub klass: BuildingClass,
    pub subtag: String,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RoadPolyline {
    pub id: FeatureId,
    pub points: Vec<LocalPoint>,
    pub subtag: String,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LandcoverPolygon {
    pub id: FeatureId,
    pub ring: Vec<LocalPoint>,
    pub kind: String,
}

/// Axis-aligned rectangle in the local frame.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Bounds2 {
    pub min: LocalPoint,
    pub max: LocalPoint,
}

impl Bounds2 {
    pub fn empty() -> Self {
        Self {
            min: LocalPoint::new(f64::INFINITY, f64::INFINITY),
            max: LocalPoint::new(f64::NEG_INFINITY, f64::NEG_INFINITY),
        }
    }

    pub fn is_empty(&self) -> bool {
        !(self.min.x <= self.max.x && self.min.y <= self.max.y)
    }

    pub fn include(&mut self, p: LocalPoint) {
        self.min.x = self.min.x.min(p.x);
        self.min.y = self.min.y.min(p.y);
        self.max.x = self.max.x.max(p.x);
        self.max.y = self.max.y.max(p.y);
    }

    pub fn union(&self, other: &Bounds2) -> Bounds2 {
        let mut b = *self;
        if !other.is_empty() {
            b.include(other.min);
            b.include(other.max);
        }
        b
    }

    /// Inclusive containment with a small absolute tolerance.
    pub fn contains(&self, p: LocalPoint) -> bool {
        const EPS: f64 = 1e-6;
        p.x >= self.min.x - EPS && p.x <= self.max.x + EPS && p.y >= self.min.y - EPS && p.y <= self.max.y + EPS
    }

    pub fn width(&self) -> f64 {
        self.max.x - self.min.x
    }

    pub fn height(&self) -> f64 {
        self.max.y - self.min.y
    }

    pub fn center(&self) -> LocalPoint {
        LocalPoint::new(0.5 * (self.min.x + self.max.x), 0.5 * (self.min.y + self.max.y))
    }
}

/// Parsed vector map in the local metric frame of `origin`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MapDocument {
    pub buildings: Vec<BuildingFootprint>,
    pub roads: Vec<RoadPolyline>,
    pub landcover: Vec<LandcoverPolygon>,
    pub bounds: Bounds2,
    pub origin: GeoPoint,
}

impl MapDocument {
    /// Bounding box of all feature geometry.
    pub fn geometry_bounds(&self) -> Bounds2 {
        let mut b = Bounds2::empty();
        for p in self
            .buildings
            .iter()
            .flat_map(|f| f.ring.iter())
            .chain(self.roads.iter().flat_map(|r| r.points.iter()))
            .chain(self.landcover.iter().flat_map(|l| l.ring.iter()))
        {
            b.include(*p);
        }
        b
    }
}

/// Heights sampled on a regular grid. Row 0 is the southern edge and
/// column 0 the western edge.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ElevationGrid {
    /// South-west corner (position of node `[0][0]`).
    pub origin: LocalPoint,
    pub cell_size: f64,
    pub rows: usize,
    pub cols: usize,
    /// Row-major, `rows * cols` values.
    pub heights: Vec<f64>,
}

impl ElevationGrid {
    /// A constant-height grid covering at least `bounds`.
    pub fn flat(bounds: &Bounds2, cell_size: f64, height: f64) -> Self {
        let cols = ((bounds.width() / cell_size).ceil() as usize + 1).max(2);
        let rows = ((bounds.height() / cell_size).ceil() as usize + 1).max(2);
        Self {
            origin: bounds.min,
            cell_size,
            rows,
            cols,
            heights: vec![height; rows * cols],
        }
    }

    pub fn height_at(&self, row: usize, col: usize) -> f64 {
        self.heights[row * self.cols + col]
    }

    /// Position of node `(row, col)`.
    pub fn node(&self, row: usize, col: usize) -> LocalPoint {
        LocalPoint::new(
            self.origin.x + col as f64 * self.cell_size,
            self.origin.y + row as f64 * self.cell_size,
        )
    }

    pub fn extent(&self) -> Bounds2 {
        Bounds2 {
            min: self.origin,
            max: self.node(self.rows - 1, self.cols - 1),
        }
    }
}

/// Signed shoelace area; positive for counter-clockwise rings.
pub fn signed_area(ring: &[LocalPoint]) -> f64 {
    let n = ring.len();
    if n < 3 {
        return 0.0;
    }
    let mut acc = 0.0;
    for i in 0..n {
        let a = ring[i];
        let b = ring[(i + 1) % n];
        acc += a.x * b.y - b.x * a.y;
    }
    0.5 * acc
}

/// Drops the closing duplicate and repeated consecutive vertices, then
/// flips the ring to counter-clockwise order.
pub fn normalize_ring(points: &[LocalPoint]) -> Vec<LocalPoint> {
    let mut ring: Vec<LocalPoint> = Vec::with_capacity(points.len());
    for p in points {
        if ring.last() != Some(p) {
            ring.push(*p);
        }
    }
    while ring.len() > 1 && ring.first() == ring.last() {
        ring.pop();
    }
    if signed_area(&ring) < 0.0 {
        ring.reverse();
    }
    ring
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn class_mapping() {
        assert_eq!(BuildingClass::from_subtag("warehouse"), BuildingClass::Industrial);
        assert_eq!(BuildingClass::from_subtag("retail"), BuildingClass::Industrial);
        assert_eq!(BuildingClass::from_subtag("Industrial"), BuildingClass::Industrial);
        assert_eq!(BuildingClass::from_subtag("house"), BuildingClass::Residential);
        assert_eq!(BuildingClass::from_subtag("school"), BuildingClass::Residential);
        assert_eq!(BuildingClass::from_subtag("yes"), BuildingClass::Residential);
    }

    #[test]
    fn normalize_flips_clockwise_and_drops_closure() {
        let cw = [
            LocalPoint::new(0.0, 0.0),
            LocalPoint::new(0.0, 1.0),
            LocalPoint::new(1.0, 1.0),
            LocalPoint::new(1.0, 0.0),
            LocalPoint::new(0.0, 0.0),
        ];
        let ring = normalize_ring(&cw);
        assert_eq!(ring.len(), 4);
        assert!((signed_area(&ring) - 1.0).abs() < 1e-12);
    }
}
