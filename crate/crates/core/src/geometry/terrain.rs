use super::mesh::{LayerTag, MaterialId, Mesh};
use crate::map_ingest::{ElevationGrid, LocalPoint};

/// Regular triangulation of the grid. Each cell is split along its SW–NE
/// diagonal; vertex normals are area-weighted face averages and uv spans
/// the grid extent.
pub fn build_terrain(grid: &ElevationGrid) -> Mesh {
    let mut mesh = Mesh::new(MaterialId::TERRAIN, LayerTag::Static);
    let extent = grid.extent();
    let (w, h) = (extent.width(), extent.height());
    mesh.vertices.reserve(grid.rows * grid.cols);
    for r in 0..grid.rows {
        for c in 0..grid.cols {
            let p = grid.node(r, c);
            mesh.push_vertex(
                [p.x, p.y, grid.height_at(r, c)],
                [0.0, 0.0, 1.0],
                [c as f64 / (grid.cols - 1) as f64, r as f64 / (grid.rows - 1) as f64],
            );
        }
    }
    debug_assert!(w > 0.0 && h > 0.0);
    let idx = |r: usize, c: usize| (r * grid.cols + c) as u32;
    mesh.triangles.reserve(2 * (grid.rows - 1) * (grid.cols - 1));
    for r in 0..grid.rows - 1 {
        for c in 0..grid.cols - 1 {
            let sw = idx(r, c);
            let se = idx(r, c + 1);
            let ne = idx(r + 1, c + 1);
            let nw = idx(r + 1, c);
            mesh.triangles.push([sw, se, ne]);
            mesh.triangles.push([sw, ne, nw]);
        }
    }
    mesh.smooth_normals();
    mesh
}

/// Bilinear height at `p`; points outside the grid are clamped to the
/// nearest boundary point.
pub fn sample_elevation(grid: &ElevationGrid, p: LocalPoint) -> f64 {
    let fx = ((p.x - grid.origin.x) / grid.cell_size).clamp(0.0, (grid.cols - 1) as f64);
    let fy = ((p.y - grid.origin.y) / grid.cell_size).clamp(0.0, (grid.rows - 1) as f64);
    let c0 = (fx.floor() as usize).min(grid.cols - 2);
    let r0 = (fy.floor() as usize).min(grid.rows - 2);
    let tx = fx - c0 as f64;
    let ty = fy - r0 as f64;
    let h00 = grid.height_at(r0, c0);
    let h01 = grid.height_at(r0, c0 + 1);
    let h10 = grid.height_at(r0 + 1, c0);
    let h11 = grid.height_at(r0 + 1, c0 + 1);
    let south = h00 + (h01 - h00) * tx;
    let north = h10 + (h11 - h10) * tx;
    south + (north - south) * ty
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::mesh::v3;

    fn grid(rows: usize, cols: usize, heights: Vec<f64>) -> ElevationGrid {
        ElevationGrid {
            origin: LocalPoint::new(0.0, 0.0),
            cell_size: 1.0,
            rows,
            cols,
            heights,
        }
    }

    #[test]
    fn flat_two_by_two() {
        let m = build_terrain(&grid(2, 2, vec![0.0; 4]));
        assert_eq!(m.vertices.len(), 4);
        assert_eq!(m.triangles.len(), 2);
        for v in &m.vertices {
            assert_eq!(v.normal, [0.0, 0.0, 1.0]);
        }
        m.check().unwrap();
    }

    #[test]
    fn raised_corner_gives_distinct_upward_faces() {
        // NE corner raised: faces (0,-10,1) and (-10,0,1) by hand.
        let m = build_terrain(&grid(2, 2, vec![0.0, 0.0, 0.0, 10.0]));
        let face = |t: [u32; 3]| {
            let a = v3(m.vertices[t[0] as usize].position);
            let b = v3(m.vertices[t[1] as usize].position);
            let c = v3(m.vertices[t[2] as usize].position);
            (b - a).cross(&(c - a))
        };
        let n0 = face(m.triangles[0]);
        let n1 = face(m.triangles[1]);
        assert_eq!([n0.x, n0.y, n0.z], [0.0, -10.0, 1.0]);
        assert_eq!([n1.x, n1.y, n1.z], [-10.0, 0.0, 1.0]);
        assert!(n0.cross(&n1).norm() > 1.0);
        assert!(m.vertices.iter().all(|v| v.normal[2] > 0.0));
    }

    #[test]
    fn counting_identity() {
        for (rows, cols) in [(2, 2), (3, 5), (7, 4)] {
            let m = build_terrain(&grid(rows, cols, vec![1.0; rows * cols]));
            assert_eq!(m.vertices.len(), rows * cols);
            assert_eq!(m.triangles.len(), 2 * (rows - 1) * (cols - 1));
        }
    }

    #[test]
    fn bilinear_sampling() {
        let g = grid(3, 3, vec![1.0, 2.0, 3.0, 4.0, 5.0, 6.0, 7.0, 8.0, 9.0]);
        assert_eq!(sample_elevation(&g, LocalPoint::new(1.0, 1.0)), 5.0);
        assert_eq!(sample_elevation(&g, LocalPoint::new(2.0, 2.0)), 9.0);
        let cell = grid(2, 2, vec![0.0, 0.0, 10.0, 10.0]);
        assert_eq!(sample_elevation(&cell, LocalPoint::new(0.5, 0.5)), 5.0);
    }

    #[test]
    fn outside_points_clamp_to_boundary() {
        let g = grid(2, 2, vec![0.0, 4.0, 8.0, 12.0]);
        assert_eq!(sample_elevation(&g, LocalPoint::new(-5.0, 0.5)), sample_elevation(&g, LocalPoint::new(0.0, 0.5)));
        assert_eq!(sample_elevation(&g, LocalPoint::new(9.0, 9.0)), 12.0);
    }
}
