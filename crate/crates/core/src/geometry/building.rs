//! Building bodies (extruded walls) and roofs.

use serde::{Deserialize, Serialize};

use super::error::GeometryError;
use super::mesh::{LayerTag, MaterialId, Mesh};
use super::triangulate::triangulate_polygon;
use crate::map_ingest::{BuildingClass, BuildingFootprint, LocalPoint};

/// Oriented bounding box of a footprint (minimum-area rectangle).
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct OrientedBox {
    pub center: LocalPoint,
    /// Unit vector along the long side.
    pub long_axis: [f64; 2],
    pub half_long: f64,
    pub half_short: f64,
}

impl OrientedBox {
    pub fn short_axis(&self) -> [f64; 2] {
        [-self.long_axis[1], self.long_axis[0]]
    }

    /// Coordinates of `p` along (long, short) axes relative to the center.
    pub fn local(&self, p: LocalPoint) -> (f64, f64) {
        let (dx, dy) = (p.x - self.center.x, p.y - self.center.y);
        let s = self.short_axis();
        (
            dx * self.long_axis[0] + dy * self.long_axis[1],
            dx * s[0] + dy * s[1],
        )
    }

    /// Box-normalized texture coordinate.
    pub fn uv(&self, p: LocalPoint) -> [f64; 2] {
        let (l, s) = self.local(p);
        let u = if self.half_long > 0.0 { 0.5 + 0.5 * l / self.half_long } else { 0.5 };
        let v = if self.half_short > 0.0 { 0.5 + 0.5 * s / self.half_short } else { 0.5 };
        [u.clamp(0.0, 1.0), v.clamp(0.0, 1.0)]
    }
}

fn convex_hull(points: &[LocalPoint]) -> Vec<LocalPoint> {
    let mut pts = points.to_vec();
    pts.sort_by(|a, b| a.x.total_cmp(&b.x).then(a.y.total_cmp(&b.y)));
    pts.dedup();
    if pts.len() < 3 {
        return pts;
    }
    let cross = |o: LocalPoint, a: LocalPoint, b: LocalPoint| (a.x - o.x) * (b.y - o.y) - (a.y - o.y) * (b.x - o.x);
    let mut lower: Vec<LocalPoint> = Vec::new();
    for &p in &pts {
        while lower.len() >= 2 && cross(lower[lower.len() - 2], lower[lower.len() - 1], p) <= 0.0 {
            lower.pop();
        }
        lower.push(p);
    }
    let mut upper: Vec<LocalPoint> = Vec::new();
    for &p in pts.iter().rev() {
        while upper.len() >= 2 && cross(upper[upper.len() - 2], upper[upper.len() - 1], p) <= 0.0 {
            upper.pop();
        }
        upper.push(p);
    }
    lower.pop();
    upper.pop();
    lower.extend(upper);
    lower
}

/// Minimum-area enclosing rectangle, found by trying every hull edge
/// direction. On a square the axis closer to world x becomes the long axis.
pub fn oriented_box(ring: &[LocalPoint]) -> OrientedBox {
    let hull = convex_hull(ring);
    let mut best: Option<(f64, [f64; 2], f64, f64, f64, f64)> = None;
    let n = hull.len();
    for i in 0..n {
        let (a, b) = (hull[i], hull[(i + 1) % n]);
        let len = a.distance(&b);
        if len == 0.0 {
            continue;
        }
        let e = [(b.x - a.x) / len, (b.y - a.y) / len];
        let (mut lo_e, mut hi_e, mut lo_p, mut hi_p) = (f64::INFINITY, f64::NEG_INFINITY, f64::INFINITY, f64::NEG_INFINITY);
        for p in &hull {
            let de = p.x * e[0] + p.y * e[1];
            let dp = -p.x * e[1] + p.y * e[0];
            lo_e = lo_e.min(de);
            hi_e = hi_e.max(de);
            lo_p = lo_p.min(dp);
            hi_p = hi_p.max(dp);
        }
        let area = (hi_e - lo_e) * (hi_p - lo_p);
        let better = match best {
            None => true,
            Some((a0, ..)) => area < a0 * (1.0 - 1e-12),
        };
        if better {
            best = Some((area, e, lo_e, hi_e, lo_p, hi_p));
        }
    }
    let Some((_, e, lo_e, hi_e, lo_p, hi_p)) = best else {
        let c = ring.first().copied().unwrap_or_default();
        return OrientedBox { center: c, long_axis: [1.0, 0.0], half_long: 0.0, half_short: 0.0 };
    };
    let (ce, cp) = (0.5 * (lo_e + hi_e), 0.5 * (lo_p + hi_p));
    let center = LocalPoint::new(ce * e[0] - cp * e[1], ce * e[1] + cp * e[0]);
    let (len_e, len_p) = (hi_e - lo_e, hi_p - lo_p);
    let perp = [-e[1], e[0]];
    let tie = (len_e - len_p).abs() <= 1e-9 * len_e.max(len_p);
    let mut axis = if tie {
        if e[0].abs() >= perp[0].abs() { e } else { perp }
    } else if len_e > len_p {
        e
    } else {
        perp
    };
    // Canonical sign: point towards +x (or +y when vertical).
    if axis[0] < 0.0 || (axis[0] == 0.0 && axis[1] < 0.0) {
        axis = [-axis[0], -axis[1]];
    }
    OrientedBox {
        center,
        long_axis: axis,
        half_long: 0.5 * len_e.max(len_p),
        half_short: 0.5 * len_e.min(len_p),
    }
}

/// Vertical walls, one quad (two triangles) per ring edge with an outward
/// normal. Walls run from `base_z - skirt` to `base_z + height`; there is no
/// top cap.
pub fn extrude_building(fp: &BuildingFootprint, base_z: f64, skirt: f64, material: MaterialId) -> Mesh {
    let mut mesh = Mesh::new(material, LayerTag::Static);
    let ring = &fp.ring;
    let n = ring.len();
    let (z0, z1) = (base_z - skirt, base_z + fp.height);
    for i in 0..n {
        let (a, b) = (ring[i], ring[(i + 1) % n]);
        let len = a.distance(&b);
        if len == 0.0 {
            continue;
        }
        let normal = [(b.y - a.y) / len, -(b.x - a.x) / len, 0.0];
        let k = mesh.vertices.len() as u32;
        mesh.push_vertex([a.x, a.y, z0], normal, [0.0, 0.0]);
        mesh.push_vertex([b.x, b.y, z0], normal, [1.0, 0.0]);
        mesh.push_vertex([b.x, b.y, z1], normal, [1.0, 1.0]);
        mesh.push_vertex([a.x, a.y, z1], normal, [0.0, 1.0]);
        mesh.push_triangle([k, k + 1, k + 2]);
        mesh.push_triangle([k, k + 2, k + 3]);
    }
    mesh
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RoofKind {
    Gable,
    Flat,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RoofParams {
    /// Ridge rise over half span.
    pub pitch: f64,
    /// Gable roofs need at least this OBB short extent, meters.
    pub min_gable_span: f64,
}

impl Default for RoofParams {
    fn default() -> Self {
        Self { pitch: 0.5, min_gable_span: 0.5 }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Roof {
    pub mesh: Mesh,
    pub kind: RoofKind,
    /// Ridge height above the wall top (0 for flat roofs).
    pub ridge_rise: f64,
    /// Set when a gable roof was requested but the footprint was too narrow.
    pub fell_back: bool,
    pub obb: OrientedBox,
}

/// Roof for a footprint: gable for residential, flat for industrial.
///
/// The gable ridge runs along the long axis of the footprint's oriented box
/// at `ridge_rise = pitch * half_short` above the wall top. Non-rectangular
/// footprints get the same two roof planes clipped to the footprint plus
/// vertical end caps filling the space between the wall top and the roof.
pub fn build_roof(
    fp: &BuildingFootprint,
    base_z: f64,
    params: &RoofParams,
    gable_material: MaterialId,
    flat_material: MaterialId,
) -> Result<Roof, GeometryError> {
    let obb = oriented_box(&fp.ring);
    let top = base_z + fp.height;
    let tris = triangulate_polygon(&fp.ring)?;
    let wants_gable = fp.klass == BuildingClass::Residential;
    let too_narrow = 2.0 * obb.half_short < params.min_gable_span;
    if !wants_gable || too_narrow {
        let mut mesh = Mesh::new(flat_material, LayerTag::Static);
        for v in &fp.ring {
            mesh.push_vertex([v.x, v.y, top], [0.0, 0.0, 1.0], obb.uv(*v));
        }
        for t in tris {
            mesh.push_triangle([t[0] as u32, t[1] as u32, t[2] as u32]);
        }
        return Ok(Roof {
            mesh,
            kind: RoofKind::Flat,
            ridge_rise: 0.0,
            fell_back: wants_gable,
            obb,
        });
    }

    let rise = params.pitch * obb.half_short;
    let z_at = |p: LocalPoint| {
        let (_, s) = obb.local(p);
        top + rise * (1.0 - (s.abs() / obb.half_short).min(1.0))
    };
    let side = |p: LocalPoint| obb.local(p).1;
    // The same crossing point for an edge no matter which triangle asks.
    let crossing = |a: LocalPoint, b: LocalPoint| {
        let (a, b) = if (a.x, a.y) <= (b.x, b.y) { (a, b) } else { (b, a) };
        let (sa, sb) = (side(a), side(b));
        let t = sa / (sa - sb);
        LocalPoint::new(a.x + t * (b.x - a.x), a.y + t * (b.y - a.y))
    };

    let mut mesh = Mesh::new(gable_material, LayerTag::Static);
    let emit = |mesh: &mut Mesh, p: [LocalPoint; 3]| {
        let lift = |q: LocalPoint| [q.x, q.y, z_at(q)];
        mesh.push_flat_triangle(
            [lift(p[0]), lift(p[1]), lift(p[2])],
            [obb.uv(p[0]), obb.uv(p[1]), obb.uv(p[2])],
        );
    };
    for t in tris {
        let p = [fp.ring[t[0]], fp.ring[t[1]], fp.ring[t[2]]];
        let s = [side(p[0]), side(p[1]), side(p[2])];
        let pos = s.iter().filter(|v| **v > 0.0).count();
        let neg = s.iter().filter(|v| **v < 0.0).count();
        if pos == 0 || neg == 0 {
            emit(&mut mesh, p);
            continue;
        }
        // Find the vertex alone on its side of the ridge (zeros join the
        // majority side trivially since they lie on the line).
        let lone = (0..3)
            .find(|&i| {
                let si = s[i];
                let others = [s[(i + 1) % 3], s[(i + 2) % 3]];
                (si > 0.0 && others.iter().all(|o| *o <= 0.0)) || (si < 0.0 && others.iter().all(|o| *o >= 0.0))
            })
            .expect("a split triangle has a lone vertex");
        let (a, b, c) = (p[lone], p[(lone + 1) % 3], p[(lone + 2) % 3]);
        let (sb, sc) = (s[(lone + 1) % 3], s[(lone + 2) % 3]);
        let ab = if sb == 0.0 { b } else { crossing(a, b) };
        let ac = if sc == 0.0 { c } else { crossing(a, c) };
        emit(&mut mesh, [a, ab, ac]);
        if sb != 0.0 {
            emit(&mut mesh, [ab, b, c]);
        }
        if sc != 0.0 {
            emit(&mut mesh, [ab, c, ac]);
        }
    }

    // End caps between the wall top and the roof edge.
    let n = fp.ring.len();
    for i in 0..n {
        let (a, b) = (fp.ring[i], fp.ring[(i + 1) % n]);
        let len = a.distance(&b);
        let (sa, sb) = (side(a), side(b));
        let at = [a.x, a.y, top];
        let bt = [b.x, b.y, top];
        let ar = [a.x, a.y, z_at(a)];
        let br = [b.x, b.y, z_at(b)];
        let along = |q: LocalPoint| a.distance(&q) / len;
        let cap_uv = |q: LocalPoint, z: f64| [along(q).clamp(0.0, 1.0), ((z - top) / rise).clamp(0.0, 1.0)];
        let (uat, ubt, uar, ubr) = (cap_uv(a, top), cap_uv(b, top), cap_uv(a, ar[2]), cap_uv(b, br[2]));
        if (sa > 0.0 && sb < 0.0) || (sa < 0.0 && sb > 0.0) {
            let m = crossing(a, b);
            let mr = [m.x, m.y, z_at(m)];
            let umr = cap_uv(m, mr[2]);
            mesh.push_flat_triangle([at, bt, br], [uat, ubt, ubr]);
            mesh.push_flat_triangle([at, br, mr], [uat, ubr, umr]);
            mesh.push_flat_triangle([at, mr, ar], [uat, umr, uar]);
        } else {
            mesh.push_flat_triangle([at, bt, br], [uat, ubt, ubr]);
            mesh.push_flat_triangle([at, br, ar], [uat, ubr, uar]);
        }
    }

    Ok(Roof {
        mesh,
        kind: RoofKind::Gable,
        ridge_rise: rise,
        fell_back: false,
        obb,
    })
}
