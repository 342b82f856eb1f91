//! Synthetic territories for tests, benchmarks and demos.

use rand::Rng;

use crate::map_ingest::{
    Bounds2, BuildingClass, BuildingFootprint, ElevationGrid, FeatureId, GeoPoint, LocalPoint, MapDocument,
    RoadPolyline,
};
use crate::rng::{derive_seed, stream};

/// Distance between neighbouring building lots, meters.
pub const LOT_SPACING: f64 = 30.0;

fn rect(cx: f64, cy: f64, w: f64, h: f64, angle: f64) -> Vec<LocalPoint> {
    let (s, c) = angle.sin_cos();
    [(-w, -h), (w, -h), (w, h), (-w, h)]
        .iter()
        .map(|(dx, dy)| LocalPoint::new(cx + 0.5 * (dx * c - dy * s), cy + 0.5 * (dx * s + dy * c)))
        .collect()
}

fn l_shape(cx: f64, cy: f64, w: f64, h: f64) -> Vec<LocalPoint> {
    let (x0, y0) = (cx - 0.5 * w, cy - 0.5 * h);
    [(0.0, 0.0), (w, 0.0), (w, 0.45 * h), (0.5 * w, 0.45 * h), (0.5 * w, h), (0.0, h)]
        .iter()
        .map(|(dx, dy)| LocalPoint::new(x0 + dx, y0 + dy))
        .collect()
}

/// A gently rolling grid covering `bounds` with a margin.
pub fn rolling_terrain(bounds: &Bounds2, cell_size: f64, relief: f64) -> ElevationGrid {
    let margin = 2.0 * cell_size;
    let ext = Bounds2 {
        min: LocalPoint::new(bounds.min.x - margin, bounds.min.y - margin),
        max: LocalPoint::new(bounds.max.x + margin, bounds.max.y + margin),
    };
    let mut grid = ElevationGrid::flat(&ext, cell_size, 0.0);
    for r in 0..grid.rows {
        for c in 0..grid.cols {
            let p = grid.node(r, c);
            grid.heights[r * grid.cols + c] =
                100.0 + relief * ((p.x / 170.0).sin() * (p.y / 230.0).cos() + 0.002 * p.x);
        }
    }
    grid
}

/// A city of `n` buildings on a square lot grid centered at the origin:
/// mostly rotated rectangles, some L-shapes, one in five industrial, with
/// a road between every pair of lot rows.
pub fn grid_city(n: usize, seed: u64) -> (MapDocument, ElevationGrid) {
    let side = (n as f64).sqrt().ceil().max(1.0) as usize;
    let half = 0.5 * side as f64 * LOT_SPACING;
    let mut buildings = Vec::with_capacity(n);
    for i in 0..n {
        let mut rng = stream(derive_seed(seed, i as u64));
        let (row, col) = (i / side, i % side);
        let cx = -half + (col as f64 + 0.5) * LOT_SPACING;
        let cy = -half + (row as f64 + 0.5) * LOT_SPACING;
        let w = rng.random_range(9.0..18.0);
        let h = rng.random_range(7.0..12.0);
        let klass = if i % 5 == 4 { BuildingClass::Industrial } else { BuildingClass::Residential };
        let ring = if i % 7 == 3 {
            l_shape(cx, cy, w, h + 4.0)
        } else {
            rect(cx, cy, w, h, rng.random_range(-0.6..0.6))
        };
        let height = match klass {
            BuildingClass::Residential => rng.random_range(5.0..9.0),
            BuildingClass::Industrial => rng.random_range(8.0..14.0),
        };
        buildings.push(BuildingFootprint {
            id: FeatureId(1000 + i as i64),
            ring,
            height,
            klass,
            subtag: match klass {
                BuildingClass::Residential => "house".into(),
                BuildingClass::Industrial => "industrial".into(),
            },
        });
    }
    let roads = (1..side)
        .map(|r| {
            let y = -half + r as f64 * LOT_SPACING;
            RoadPolyline {
                id: FeatureId(r as i64),
                points: vec![LocalPoint::new(-half, y), LocalPoint::new(half, y)],
                subtag: "residential".into(),
            }
        })
        .collect();
    let bounds = Bounds2 {
        min: LocalPoint::new(-half, -half),
        max: LocalPoint::new(half, half),
    };
    let grid = rolling_terrain(&bounds, 10.0, 4.0);
    let doc = MapDocument {
        buildings,
        roads,
        landcover: Vec::new(),
        bounds,
        origin: GeoPoint::new(30.52, 50.45),
    };
    (doc, grid)
}

/// One axis-aligned square building of side `side` centered at the origin
/// on flat ground at height 0, inside a `extent`-meter square territory.
pub fn single_square(side: f64, height: f64, klass: BuildingClass, extent: f64) -> (MapDocument, ElevationGrid) {
    let half = 0.5 * extent;
    let bounds = Bounds2 {
        min: LocalPoint::new(-half, -half),
        max: LocalPoint::new(half, half),
    };
    let doc = MapDocument {
        buildings: vec![BuildingFootprint {
            id: FeatureId(1),
            ring: rect(0.0, 0.0, side, side, 0.0),
            height,
            klass,
            subtag: "yes".into(),
        }],
        roads: Vec::new(),
        landcover: Vec::new(),
        bounds,
        origin: GeoPoint::new(0.0, 0.0),
    };
    let grid = ElevationGrid::flat(&bounds, 10.0, 0.0);
    (doc, grid)
}
