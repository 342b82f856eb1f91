//! 2D predicates shared by validation and triangulation.

use crate::map_ingest::LocalPoint;

/// Twice the signed area of triangle `abc`; positive when counter-clockwise.
#[inline]
pub fn orient(a: LocalPoint, b: LocalPoint, c: LocalPoint) -> f64 {
    (b.x - a.x) * (c.y - a.y) - (b.y - a.y) * (c.x - a.x)
}

fn on_segment(a: LocalPoint, b: LocalPoint, p: LocalPoint) -> bool {
    p.x >= a.x.min(b.x) && p.x <= a.x.max(b.x) && p.y >= a.y.min(b.y) && p.y <= a.y.max(b.y)
}

/// Closed-segment intersection test, touching and collinear overlap included.
pub fn segments_intersect(a: LocalPoint, b: LocalPoint, c: LocalPoint, d: LocalPoint) -> bool {
    let d1 = orient(c, d, a);
    let d2 = orient(c, d, b);
    let d3 = orient(a, b, c);
    let d4 = orient(a, b, d);
    if ((d1 > 0.0 && d2 < 0.0) || (d1 < 0.0 && d2 > 0.0)) && ((d3 > 0.0 && d4 < 0.0) || (d3 < 0.0 && d4 > 0.0)) {
        return true;
    }
    (d1 == 0.0 && on_segment(c, d, a))
        || (d2 == 0.0 && on_segment(c, d, b))
        || (d3 == 0.0 && on_segment(a, b, c))
        || (d4 == 0.0 && on_segment(a, b, d))
}

/// True when the closed ring has no crossing, touching or overlapping edges
/// other than adjacent edges meeting at their shared vertex.
pub fn ring_is_simple(ring: &[LocalPoint]) -> bool {
    let n = ring.len();
    if n < 3 {
        return false;
    }
    for i in 0..n {
        let a = ring[i];
        let b = ring[(i + 1) % n];
        if a == b {
            return false;
        }
        for j in (i + 1)..n {
            let c = ring[j];
            let d = ring[(j + 1) % n];
            let adjacent = j == i + 1 || (i == 0 && j == n - 1);
            if adjacent {
                // Adjacent edges may only share their common vertex; a fold
                // back along the same line is an overlap.
                let (shared, other_a, other_b) = if j == i + 1 { (b, a, d) } else { (a, b, c) };
                if orient(other_a, shared, other_b) == 0.0 {
                    let u = (other_a.x - shared.x, other_a.y - shared.y);
                    let v = (other_b.x - shared.x, other_b.y - shared.y);
                    if u.0 * v.0 + u.1 * v.1 > 0.0 {
                        return false;
                    }
                }
                continue;
            }
            if segments_intersect(a, b, c, d) {
                return false;
            }
        }
    }
    true
}

/// Area centroid of a ring; falls back to the vertex mean for zero area.
pub fn ring_centroid(ring: &[LocalPoint]) -> LocalPoint {
    let n = ring.len();
    let (mut cx, mut cy, mut a2) = (0.0, 0.0, 0.0);
    // Shift to the first vertex to limit cancellation on large coordinates.
    let o = ring[0];
    for i in 0..n {
        let p = LocalPoint::new(ring[i].x - o.x, ring[i].y - o.y);
        let q = LocalPoint::new(ring[(i + 1) % n].x - o.x, ring[(i + 1) % n].y - o.y);
        let cross = p.x * q.y - q.x * p.y;
        a2 += cross;
        cx += (p.x + q.x) * cross;
        cy += (p.y + q.y) * cross;
    }
    if a2.abs() < 1e-12 {
        let (sx, sy) = ring.iter().fold((0.0, 0.0), |acc, p| (acc.0 + p.x, acc.1 + p.y));
        return LocalPoint::new(sx / n as f64, sy / n as f64);
    }
    LocalPoint::new(o.x + cx / (3.0 * a2), o.y + cy / (3.0 * a2))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn pts(v: &[(f64, f64)]) -> Vec<LocalPoint> {
        v.iter().map(|&(x, y)| LocalPoint::new(x, y)).collect()
    }

    #[test]
    fn square_is_simple_bowtie_is_not() {
        assert!(ring_is_simple(&pts(&[(0., 0.), (1., 0.), (1., 1.), (0., 1.)])));
        assert!(!ring_is_simple(&pts(&[(0., 0.), (1., 1.), (1., 0.), (0., 1.)])));
    }

    #[test]
    fn spike_and_touching_vertex_are_not_simple() {
        assert!(!ring_is_simple(&pts(&[(0., 0.), (2., 0.), (1., 0.), (1., 1.)])));
        // Vertex (1,0) touches the edge (0,0)-(2,0) from the other side.
        assert!(!ring_is_simple(&pts(&[(0., 0.), (2., 0.), (2., 2.), (1., 0.), (0., 2.)])));
    }

    #[test]
    fn collinear_vertex_is_allowed() {
        assert!(ring_is_simple(&pts(&[(0., 0.), (1., 0.), (2., 0.), (2., 1.), (0., 1.)])));
    }

    #[test]
    fn centroid_of_rectangle() {
        let c = ring_centroid(&pts(&[(0., 0.), (4., 0.), (4., 2.), (0., 2.)]));
        assert!((c.x - 2.0).abs() < 1e-12 && (c.y - 1.0).abs() < 1e-12);
    }
}
