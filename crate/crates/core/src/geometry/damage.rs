use super::building::oriented_box;
use super::error::GeometryError;
use super::mesh::{LayerTag, MaterialId, Mesh};
use super::terrain::sample_elevation;
use super::triangulate::triangulate_polygon;
use crate::map_ingest::{BuildingFootprint, ElevationGrid, LocalPoint};
use crate::planar::ring_centroid;

/// Flat patch replacing a removed building: the footprint scaled by `scale`
/// about its area centroid, each vertex `lift` meters above the terrain.
pub fn build_damaged_footprint(
    fp: &BuildingFootprint,
    grid: &ElevationGrid,
    scale: f64,
    lift: f64,
) -> Result<Mesh, GeometryError> {
    let ring = scaled_ring(fp, scale);
    let tris = triangulate_polygon(&ring)?;
    let obb = oriented_box(&ring);
    let mut mesh = Mesh::new(MaterialId::DAMAGE, LayerTag::Annotation);
    for p in &ring {
        mesh.push_vertex([p.x, p.y, sample_elevation(grid, *p) + lift], [0.0, 0.0, 1.0], obb.uv(*p));
    }
    for t in tris {
        mesh.push_triangle([t[0] as u32, t[1] as u32, t[2] as u32]);
    }
    mesh.smooth_normals();
    Ok(mesh)
}

/// The scaled ring used by [`build_damaged_footprint`].
pub fn scaled_ring(fp: &BuildingFootprint, scale: f64) -> Vec<LocalPoint> {
    let c = ring_centroid(&fp.ring);
    fp.ring
        .iter()
        .map(|p| LocalPoint::new(c.x + scale * (p.x - c.x), c.y + scale * (p.y - c.y)))
        .collect()
}
