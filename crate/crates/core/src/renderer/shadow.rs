use super::raster::{raster_full, RasterTri};
use super::{RenderConfig, RenderError, MIN_SUN_ELEVATION};
use crate::geometry::{Aabb3, Mesh};

/// Upper bound on the slope factor of the shadow bias.
const MAX_BIAS_SLOPE: f64 = 8.0;

/// Orthographic depth map seen from the Sun. Depth is distance along the
/// light direction, smaller meaning nearer the Sun.
#[derive(Clone, Debug)]
pub struct ShadowMap {
    pub size: usize,
    pub depth: Vec<f32>,
    sun: [f64; 3],
    right: [f64; 3],
    up: [f64; 3],
    origin: [f64; 2],
    /// Texels per meter.
    scale: f64,
    kernel: usize,
}

fn dot(a: [f64; 3], b: [f64; 3]) -> f64 {
    a[0] * b[0] + a[1] * b[1] + a[2] * b[2]
}

fn cross(a: [f64; 3], b: [f64; 3]) -> [f64; 3] {
    [a[1] * b[2] - a[2] * b[1], a[2] * b[0] - a[0] * b[2], a[0] * b[1] - a[1] * b[0]]
}

fn normalize(a: [f64; 3]) -> [f64; 3] {
    let l = dot(a, a).sqrt();
    [a[0] / l, a[1] / l, a[2] / l]
}

impl ShadowMap {
    /// Light-space texel coordinates and depth of a world point.
    fn light_coords(&self, p: [f64; 3]) -> (f64, f64, f64) {
        (
            (dot(p, self.right) - self.origin[0]) * self.scale,
            (dot(p, self.up) - self.origin[1]) * self.scale,
            -dot(p, self.sun),
        )
    }

    /// World size of one texel, meters.
    pub fn texel_size(&self) -> f64 {
        1.0 / self.scale
    }

    fn texel(&self, tx: i64, ty: i64) -> f32 {
        if tx < 0 || ty < 0 || tx >= self.size as i64 || ty >= self.size as i64 {
            return f32::INFINITY;
        }
        self.depth[ty as usize * self.size + tx as usize]
    }

    /// Stored depth under a world point (infinite where nothing was drawn).
    pub fn depth_under(&self, p: [f64; 3]) -> f32 {
        let (x, y, _) = self.light_coords(p);
        self.texel(x.floor() as i64, y.floor() as i64)
    }

    /// Fraction of shadow-map taps that see `p` lit, for a surface with unit
    /// normal `n`. The depth bias is `2·texel·max(1, tan θ)` with θ the
    /// angle between `n` and the Sun direction.
    pub fn visibility(&self, p: [f64; 3], n: [f64; 3]) -> f64 {
        let c = dot(n, self.sun).clamp(1e-6, 1.0);
        let tan = ((1.0 - c * c).max(0.0).sqrt() / c).clamp(1.0, MAX_BIAS_SLOPE);
        let bias = 2.0 * self.texel_size() * tan;
        let (x, y, d) = self.light_coords(p);
        let (tx, ty) = (x.floor() as i64, y.floor() as i64);
        let limit = d - bias;
        if self.kernel <= 1 {
            return if f64::from(self.texel(tx, ty)) >= limit { 1.0 } else { 0.0 };
        }
        let mut lit = 0u32;
        for dy in -1..=1 {
            for dx in -1..=1 {
                if f64::from(self.texel(tx + dx, ty + dy)) >= limit {
                    lit += 1;
                }
            }
        }
        f64::from(lit) / 9.0
    }
}

/// Renders the occluders orthographically from the Sun over the
/// light-space footprint of `bounds`.
pub fn render_shadow_map(
    occluders: &[&Mesh],
    bounds: &Aabb3,
    sun: [f64; 3],
    cfg: &RenderConfig,
) -> Result<ShadowMap, RenderError> {
    if sun[2] <= MIN_SUN_ELEVATION {
        return Err(RenderError::DegenerateLighting { z: sun[2] });
    }
    let sun = normalize(sun);
    let reference = if sun[1].abs() > 0.99 { [1.0, 0.0, 0.0] } else { [0.0, 1.0, 0.0] };
    let right = normalize(cross(reference, sun));
    let up = cross(sun, right);
    let size = cfg.shadow_map_size;

    let (mut lo, mut hi) = ([f64::INFINITY; 2], [f64::NEG_INFINITY; 2]);
    let corners = if bounds.is_empty() { [[0.0; 3]; 8] } else { bounds.corners() };
    for c in corners {
        let (a, b) = (dot(c, right), dot(c, up));
        lo = [lo[0].min(a), lo[1].min(b)];
        hi = [hi[0].max(a), hi[1].max(b)];
    }
    let span = (hi[0] - lo[0]).max(hi[1] - lo[1]).max(1e-3);
    let mut map = ShadowMap {
        size,
        depth: Vec::new(),
        sun,
        right,
        up,
        origin: lo,
        scale: size as f64 / span,
        kernel: cfg.soft_shadow_kernel,
    };

    let mut tris = Vec::new();
    for m in occluders {
        for t in &m.triangles {
            let mut pts = [[0.0; 2]; 3];
            let mut d = [0.0; 3];
            for k in 0..3 {
                let (x, y, z) = map.light_coords(m.vertices[t[k] as usize].position);
                pts[k] = [x, y];
                d[k] = z;
            }
            if let Some(rt) = RasterTri::new(pts, [1.0; 3], d, 0.0, 0) {
                tris.push(rt);
            }
        }
    }
    let (depth, _) = raster_full(&tris, size, size, 64);
    map.depth = depth.into_iter().map(|d| d as f32).collect();
    Ok(map)
}
