use std::collections::BTreeMap;

use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::building::{build_roof, extrude_building, RoofKind, RoofParams};
use super::damage::build_damaged_footprint;
use super::error::GeometryError;
use super::mesh::*;
use super::terrain::{build_terrain, sample_elevation};
use crate::map_ingest::{
    Bounds2, BuildingClass, BuildingFootprint, ElevationGrid, FeatureId, LocalPoint, MapDocument, RoadPolyline,
};
use crate::rng::{derive_seed, stream};

/// Gable roof colors (linear RGB): terracotta, reds, browns and grays.
pub const ROOF_PALETTE: [[f64; 3]; 8] = [
    [0.62, 0.24, 0.16],
    [0.50, 0.17, 0.13],
    [0.45, 0.29, 0.20],
    [0.34, 0.22, 0.16],
    [0.56, 0.40, 0.29],
    [0.42, 0.41, 0.42],
    [0.27, 0.28, 0.31],
    [0.60, 0.57, 0.52],
];

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SceneConfig {
    /// Damaged-footprint scale about the footprint centroid.
    pub damage_scale: f64,
    /// Height of damaged patches above the terrain, meters.
    pub damage_lift: f64,
    pub road_width: f64,
    /// Height of road ribbons above the terrain, meters.
    pub road_lift: f64,
    /// How far walls extend below the building base, meters.
    pub wall_skirt: f64,
    pub roof: RoofParams,
    /// Relative noise modulation of the terrain texture.
    pub terrain_noise: f64,
    /// Size of one terrain noise cell, meters.
    pub terrain_texel: f64,
}

impl Default for SceneConfig {
    fn default() -> Self {
        Self {
            damage_scale: 1.05,
            damage_lift: 0.02,
            road_width: 6.0,
            road_lift: 0.05,
            wall_skirt: 0.5,
            roof: RoofParams::default(),
            terrain_noise: 0.15,
            terrain_texel: 6.0,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BuildingMeshes {
    pub body: Mesh,
    pub roof: Mesh,
    pub roof_kind: RoofKind,
    /// Minimum terrain height over the footprint vertices.
    pub base_z: f64,
    /// Footprint area, m².
    pub footprint_area: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SceneModel {
    pub terrain: Mesh,
    pub buildings: BTreeMap<FeatureId, BuildingMeshes>,
    pub damaged: BTreeMap<FeatureId, Mesh>,
    pub roads: Vec<Mesh>,
    pub materials: BTreeMap<MaterialId, MaterialSpec>,
    pub bounds: Aabb3,
    /// Ground rectangle the terrain uv coordinates span.
    pub terrain_extent: Bounds2,
    /// Center of the map bounds, on the terrain surface.
    pub focus: [f64; 3],
}

impl SceneModel {
    pub fn building_ids(&self) -> Vec<FeatureId> {
        self.buildings.keys().copied().collect()
    }

    /// Deterministic JSON dump (debugging and visual inspection).
    pub fn to_json(&self) -> String {
        serde_json::to_string(self).expect("scene model serializes")
    }

    pub fn material(&self, id: MaterialId) -> &MaterialSpec {
        &self.materials[&id]
    }
}

fn base_materials(seed: u64, terrain_extent: &Bounds2, cfg: &SceneConfig) -> BTreeMap<MaterialId, MaterialSpec> {
    let terrain_cells = [
        (terrain_extent.width() / cfg.terrain_texel).max(1.0),
        (terrain_extent.height() / cfg.terrain_texel).max(1.0),
    ];
    let m = |base_color, texture_kind, k: u64, noise_amplitude, uv_scale| MaterialSpec {
        base_color,
        texture_kind,
        noise_seed: derive_seed(seed, k),
        noise_amplitude,
        uv_scale,
    };
    BTreeMap::from([
        (MaterialId::TERRAIN, m([0.56, 0.50, 0.35], TextureKind::Terrain, 1, cfg.terrain_noise, terrain_cells)),
        (MaterialId::ROAD, m([0.24, 0.24, 0.25], TextureKind::Road, 2, 0.04, [2.0, 40.0])),
        (MaterialId::FACADE_RESIDENTIAL, m([0.82, 0.78, 0.70], TextureKind::Facade, 3, 0.08, [4.0, 4.0])),
        (MaterialId::FACADE_INDUSTRIAL, m([0.66, 0.66, 0.64], TextureKind::Facade, 4, 0.08, [4.0, 4.0])),
        (MaterialId::FLAT_ROOF, m([0.70, 0.70, 0.68], TextureKind::FlatRoof, 5, 0.10, [3.0, 3.0])),
        (MaterialId::DAMAGE, m([0.20, 0.19, 0.18], TextureKind::Damage, 6, 0.8, [5.0, 5.0])),
    ])
}

fn build_one(
    fp: &BuildingFootprint,
    index: usize,
    grid: &ElevationGrid,
    cfg: &SceneConfig,
    seed: u64,
) -> Result<(BuildingMeshes, Mesh, Option<(MaterialId, MaterialSpec)>), GeometryError> {
    let base_z = fp
        .ring
        .iter()
        .map(|p| sample_elevation(grid, *p))
        .fold(f64::INFINITY, f64::min);
    let facade = match fp.klass {
        BuildingClass::Residential => MaterialId::FACADE_RESIDENTIAL,
        BuildingClass::Industrial => MaterialId::FACADE_INDUSTRIAL,
    };
    let body = extrude_building(fp, base_z, cfg.wall_skirt, facade);
    let gable_id = MaterialId(MaterialId::GABLE_ROOF_BASE + index as u32);
    let roof = build_roof(fp, base_z, &cfg.roof, gable_id, MaterialId::FLAT_ROOF)?;
    if roof.fell_back {
        log::info!("building {}: footprint too narrow for a gable roof, using flat", fp.id);
    }
    let gable = (roof.kind == RoofKind::Gable).then(|| {
        let mut rng = stream(derive_seed(seed, fp.id.0 as u64));
        let color = ROOF_PALETTE[rng.random_range(0..ROOF_PALETTE.len())];
        (
            gable_id,
            MaterialSpec {
                base_color: color,
                texture_kind: TextureKind::GableRoof,
                noise_seed: rng.random(),
                noise_amplitude: 0.12,
                uv_scale: [2.0, 2.0],
            },
        )
    });
    let damaged = build_damaged_footprint(fp, grid, cfg.damage_scale, cfg.damage_lift)?;
    Ok((
        BuildingMeshes {
            body,
            roof: roof.mesh,
            roof_kind: roof.kind,
            base_z,
            footprint_area: crate::map_ingest::signed_area(&fp.ring),
        },
        damaged,
        gable,
    ))
}

/// Flat ribbon of `width` along the polyline, densified to the grid cell
/// size and draped `lift` meters above the terrain.
pub fn build_road(road: &RoadPolyline, grid: &ElevationGrid, width: f64, lift: f64) -> Mesh {
    let mut mesh = Mesh::new(MaterialId::ROAD, LayerTag::Static);
    let step = grid.cell_size.max(1e-3);
    let mut pts: Vec<LocalPoint> = Vec::new();
    for w in road.points.windows(2) {
        let (a, b) = (w[0], w[1]);
        let len = a.distance(&b);
        let pieces = (len / step).ceil().max(1.0) as usize;
        for k in 0..pieces {
            let t = k as f64 / pieces as f64;
            pts.push(LocalPoint::new(a.x + t * (b.x - a.x), a.y + t * (b.y - a.y)));
        }
    }
    pts.push(*road.points.last().expect("roads have at least two points"));
    pts.dedup();
    if pts.len() < 2 {
        return mesh;
    }
    let dir = |a: LocalPoint, b: LocalPoint| {
        let l = a.distance(&b);
        ((b.x - a.x) / l, (b.y - a.y) / l)
    };
    let half = 0.5 * width;
    let total: f64 = pts.windows(2).map(|w| w[0].distance(&w[1])).sum();
    let mut walked = 0.0;
    let n = pts.len();
    for i in 0..n {
        let d_in = if i > 0 { Some(dir(pts[i - 1], pts[i])) } else { None };
        let d_out = if i + 1 < n { Some(dir(pts[i], pts[i + 1])) } else { None };
        let (dx, dy) = match (d_in, d_out) {
            (Some(a), Some(b)) => {
                let s = (a.0 + b.0, a.1 + b.1);
                let l = s.0.hypot(s.1);
                if l < 1e-9 {
                    a
                } else {
                    (s.0 / l, s.1 / l)
                }
            }
            (Some(a), None) | (None, Some(a)) => a,
            (None, None) => unreachable!(),
        };
        // Miter length, limited to twice the half width at sharp turns.
        let cos_half = match d_in {
            Some(a) => (a.0 * dx + a.1 * dy).max(0.5),
            None => 1.0,
        };
        let off = half / cos_half;
        let left = LocalPoint::new(pts[i].x - dy * off, pts[i].y + dx * off);
        let right = LocalPoint::new(pts[i].x + dy * off, pts[i].y - dx * off);
        if i > 0 {
            walked += pts[i - 1].distance(&pts[i]);
        }
        let v = if total > 0.0 { (walked / total).clamp(0.0, 1.0) } else { 0.0 };
        mesh.push_vertex([left.x, left.y, sample_elevation(grid, left) + lift], [0.0, 0.0, 1.0], [0.0, v]);
        mesh.push_vertex([right.x, right.y, sample_elevation(grid, right) + lift], [0.0, 0.0, 1.0], [1.0, v]);
    }
    for i in 0..(n - 1) as u32 {
        let (l0, r0, l1, r1) = (2 * i, 2 * i + 1, 2 * i + 2, 2 * i + 3);
        mesh.push_triangle([l0, r0, r1]);
        mesh.push_triangle([l0, r1, l1]);
    }
    mesh.smooth_normals();
    mesh
}

/// Builds the full scene: terrain, one body + roof + damaged patch per
/// building (ordered by id), and draped road ribbons. Pure in
/// `(doc, grid, cfg, seed)`.
pub fn assemble_scene(
    doc: &MapDocument,
    grid: &ElevationGrid,
    cfg: &SceneConfig,
    seed: u64,
) -> Result<SceneModel, GeometryError> {
    let mut sorted: Vec<&BuildingFootprint> = doc.buildings.iter().collect();
    sorted.sort_by_key(|b| b.id);
    for w in sorted.windows(2) {
        if w[0].id == w[1].id {
            return Err(GeometryError::DuplicateId(w[0].id));
        }
    }
    let terrain_extent = grid.extent();
    let terrain = build_terrain(grid);
    let mut materials = base_materials(seed, &terrain_extent, cfg);

    let built: Vec<_> = sorted
        .par_iter()
        .enumerate()
        .map(|(i, fp)| build_one(fp, i, grid, cfg, seed).map_err(|e| e.at(fp.id)))
        .collect::<Result<_, _>>()?;

    let mut buildings = BTreeMap::new();
    let mut damaged = BTreeMap::new();
    for (fp, (meshes, patch, gable)) in sorted.iter().zip(built) {
        if let Some((id, spec)) = gable {
            materials.insert(id, spec);
        }
        buildings.insert(fp.id, meshes);
        damaged.insert(fp.id, patch);
    }

    let mut roads: Vec<&RoadPolyline> = doc.roads.iter().collect();
    roads.sort_by_key(|r| r.id);
    let roads: Vec<Mesh> = roads
        .par_iter()
        .map(|r| build_road(r, grid, cfg.road_width, cfg.road_lift))
        .filter(|m| !m.is_empty())
        .collect();

    let mut bounds = terrain.bounds();
    for b in buildings.values() {
        bounds.merge(&b.body.bounds());
        bounds.merge(&b.roof.bounds());
    }
    for m in damaged.values().chain(roads.iter()) {
        bounds.merge(&m.bounds());
    }

    let c = doc.bounds.center();
    let focus = [c.x, c.y, sample_elevation(grid, c)];

    Ok(SceneModel {
        terrain,
        buildings,
        damaged,
        roads,
        materials,
        bounds,
        terrain_extent,
        focus,
    })
}
