//! Ear-clipping triangulation of simple polygons.

use super::error::GeometryError;
use crate::map_ingest::LocalPoint;
use crate::planar::{orient, ring_is_simple};

fn in_closed_triangle(p: LocalPoint, a: LocalPoint, b: LocalPoint, c: LocalPoint) -> bool {
    orient(a, b, p) >= 0.0 && orient(b, c, p) >= 0.0 && orient(c, a, p) >= 0.0
}

/// Triangulates a simple ring into `n - 2` counter-clockwise triangles
/// (indices into `ring`). Clockwise input is accepted; the output is
/// counter-clockwise either way.
pub fn triangulate_polygon(ring: &[LocalPoint]) -> Result<Vec<[usize; 3]>, GeometryError> {
    let n = ring.len();
    if n < 3 {
        return Err(GeometryError::TooFewVertices);
    }
    if !ring_is_simple(ring) {
        return Err(GeometryError::SelfIntersecting);
    }
    let mut idx: Vec<usize> = (0..n).collect();
    if crate::map_ingest::signed_area(ring) < 0.0 {
        idx.reverse();
    }

    let mut scale = 0.0f64;
    for p in ring {
        scale = scale.max((p.x - ring[0].x).abs()).max((p.y - ring[0].y).abs());
    }
    let eps = 1e-12 * scale * scale;

    let mut out = Vec::with_capacity(n - 2);
    while idx.len() > 3 {
        let m = idx.len();
        let mut ear = None;
        let mut fallback: Option<(usize, f64)> = None;
        for i in 0..m {
            let (ip, ic, inx) = (idx[(i + m - 1) % m], idx[i], idx[(i + 1) % m]);
            let (a, b, c) = (ring[ip], ring[ic], ring[inx]);
            let area2 = orient(a, b, c);
            if fallback.is_none_or(|(_, best)| area2 > best) {
                fallback = Some((i, area2));
            }
            if area2 <= eps {
                continue;
            }
            let blocked = idx.iter().any(|&k| {
                k != ip && k != ic && k != inx && {
                    let p = ring[k];
                    p != a && p != b && p != c && in_closed_triangle(p, a, b, c)
                }
            });
            if !blocked {
                ear = Some(i);
                break;
            }
        }
        // Only reachable through floating-point trouble on nearly collinear
        // input; clip the most convex vertex so the count stays n - 2.
        let i = ear.unwrap_or_else(|| fallback.map(|f| f.0).unwrap_or(0));
        let m = idx.len();
        out.push([idx[(i + m - 1) % m], idx[i], idx[(i + 1) % m]]);
        idx.remove(i);
    }
    out.push([idx[0], idx[1], idx[2]]);
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::map_ingest::signed_area;

    fn pts(v: &[(f64, f64)]) -> Vec<LocalPoint> {
        v.iter().map(|&(x, y)| LocalPoint::new(x, y)).collect()
    }

    fn area_sum(ring: &[LocalPoint], tris: &[[usize; 3]]) -> f64 {
        tris.iter()
            .map(|t| {
                let a = 0.5 * orient(ring[t[0]], ring[t[1]], ring[t[2]]);
                assert!(a >= 0.0, "clockwise triangle {t:?}");
                a
            })
            .sum()
    }

    #[test]
    fn unit_square() {
        let ring = pts(&[(0., 0.), (1., 0.), (1., 1.), (0., 1.)]);
        let t = triangulate_polygon(&ring).unwrap();
        assert_eq!(t.len(), 2);
        assert!((area_sum(&ring, &t) - 1.0).abs() < 1e-15);
    }

    #[test]
    fn convex_pentagon_matches_shoelace() {
        let ring = pts(&[(0., 0.), (4., 0.), (5., 3.), (2., 5.), (-1., 3.)]);
        let t = triangulate_polygon(&ring).unwrap();
        assert_eq!(t.len(), 3);
        // shoelace: 0.5 * |0*0-4*0 + 4*3-5*0 + 5*5-2*3 + 2*3-(-1)*5 + (-1)*0-0*3| = 0.5*42 = 21
        assert!((area_sum(&ring, &t) - 21.0).abs() < 1e-9);
        assert!((signed_area(&ring) - 21.0).abs() < 1e-12);
    }

    #[test]
    fn l_shaped_hexagon() {
        let ring = pts(&[(0., 0.), (4., 0.), (4., 1.), (1., 1.), (1., 3.), (0., 3.)]);
        let t = triangulate_polygon(&ring).unwrap();
        assert_eq!(t.len(), 4);
        // 4x1 + 1x2 = 6
        assert!((area_sum(&ring, &t) - 6.0).abs() < 1e-9);
    }

    #[test]
    fn clockwise_input_gives_ccw_triangles() {
        let mut ring = pts(&[(0., 0.), (4., 0.), (4., 1.), (1., 1.), (1., 3.), (0., 3.)]);
        ring.reverse();
        let t = triangulate_polygon(&ring).unwrap();
        assert!((area_sum(&ring, &t) - 6.0).abs() < 1e-9);
    }

    #[test]
    fn collinear_vertex_keeps_count() {
        let ring = pts(&[(0., 0.), (1., 0.), (2., 0.), (2., 1.), (0., 1.)]);
        let t = triangulate_polygon(&ring).unwrap();
        assert_eq!(t.len(), 3);
        assert!((area_sum(&ring, &t) - 2.0).abs() < 1e-12);
    }

    #[test]
    fn bowtie_rejected() {
        let ring = pts(&[(0., 0.), (1., 1.), (1., 0.), (0., 1.)]);
        assert_eq!(triangulate_polygon(&ring), Err(GeometryError::SelfIntersecting));
        assert_eq!(triangulate_polygon(&ring[..2]), Err(GeometryError::TooFewVertices));
    }
}
