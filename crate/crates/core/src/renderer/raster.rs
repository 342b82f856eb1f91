//! Fixed-point triangle setup and tile rasterization.
//!
//! Vertices are snapped to 1/256 of a sample. Coverage uses exact integer
//! edge functions with the top-left rule, so a sample on an edge shared by
//! two triangles is covered exactly once.

use rayon::prelude::*;

pub(crate) const SUBPIXEL: i64 = 256;
const HALF: i64 = SUBPIXEL / 2;

/// Largest coordinate magnitude accepted, in samples. Keeps edge products
/// far from `i64` overflow.
pub(crate) const MAX_COORD: f64 = 1.0e6;

#[derive(Clone, Copy, Debug)]
pub(crate) struct RasterTri {
    x: [i64; 3],
    y: [i64; 3],
    area2: i64,
    top_left: [bool; 3],
    inv_w: [f64; 3],
    depth_w: [f64; 3],
    depth_offset: f64,
    /// Covered sample rectangle `[x0, x1] × [y0, y1]`, inclusive, before
    /// clamping to the target.
    bbox: [i64; 4],
    /// `order[k]` is the caller's index of oriented vertex `k`.
    pub order: [usize; 3],
    pub payload: u32,
}

fn edge(ax: i64, ay: i64, bx: i64, by: i64, px: i64, py: i64) -> i64 {
    (bx - ax) * (py - ay) - (by - ay) * (px - ax)
}

impl RasterTri {
    /// `pts` in sample units (sample `(i, j)` has its center at
    /// `(i + 0.5, j + 0.5)`), `inv_w` the reciprocal clip w and `depth` the
    /// per-vertex depth; depth is interpolated perspective-correctly.
    /// Returns `None` for zero-area or out-of-range triangles.
    pub fn new(pts: [[f64; 2]; 3], inv_w: [f64; 3], depth: [f64; 3], depth_offset: f64, payload: u32) -> Option<Self> {
        if pts.iter().flatten().any(|c| !c.is_finite() || c.abs() > MAX_COORD) {
            return None;
        }
        let fx = |c: f64| (c * SUBPIXEL as f64).round() as i64;
        let mut order = [0usize, 1, 2];
        let (mut x, mut y) = ([0i64; 3], [0i64; 3]);
        for k in 0..3 {
            x[k] = fx(pts[k][0]);
            y[k] = fx(pts[k][1]);
        }
        let mut area2 = edge(x[0], y[0], x[1], y[1], x[2], y[2]);
        if area2 == 0 {
            return None;
        }
        if area2 < 0 {
            x.swap(1, 2);
            y.swap(1, 2);
            order.swap(1, 2);
            area2 = -area2;
        }
        let mut top_left = [false; 3];
        for k in 0..3 {
            // Edge k runs from vertex k+1 to vertex k+2 (opposite vertex k).
            let (a, b) = ((k + 1) % 3, (k + 2) % 3);
            let (dx, dy) = (x[b] - x[a], y[b] - y[a]);
            top_left[k] = (dy == 0 && dx > 0) || dy < 0;
        }
        let lo = |v: i64| (v - HALF).div_euclid(SUBPIXEL) + i64::from((v - HALF).rem_euclid(SUBPIXEL) != 0);
        let hi = |v: i64| (v - HALF).div_euclid(SUBPIXEL);
        let bbox = [
            lo(*x.iter().min().unwrap()),
            hi(*x.iter().max().unwrap()),
            lo(*y.iter().min().unwrap()),
            hi(*y.iter().max().unwrap()),
        ];
        let depth_w = order.map(|k| depth[k] * inv_w[k]);
        let inv_w = order.map(|k| inv_w[k]);
        Some(Self { x, y, area2, top_left, inv_w, depth_w, depth_offset, bbox, order, payload })
    }

    /// Edge values at the center of sample `(sx, sy)`.
    fn edges_at(&self, sx: i64, sy: i64) -> [i64; 3] {
        let (px, py) = (sx * SUBPIXEL + HALF, sy * SUBPIXEL + HALF);
        let e = |k: usize| {
            let (a, b) = ((k + 1) % 3, (k + 2) % 3);
            edge(self.x[a], self.y[a], self.x[b], self.y[b], px, py)
        };
        [e(0), e(1), e(2)]
    }

    fn inside(&self, e: &[i64; 3]) -> bool {
        (0..3).all(|k| e[k] > 0 || (e[k] == 0 && self.top_left[k]))
    }

    #[cfg(test)]
    pub fn covers(&self, sx: i64, sy: i64) -> bool {
        self.inside(&self.edges_at(sx, sy))
    }

    /// Perspective-correct weights of the oriented vertices at a sample.
    pub fn weights(&self, sx: i64, sy: i64) -> [f64; 3] {
        let e = self.edges_at(sx, sy);
        let a = self.area2 as f64;
        let l = [e[0] as f64 / a, e[1] as f64 / a, e[2] as f64 / a];
        let m = [l[0] * self.inv_w[0], l[1] * self.inv_w[1], l[2] * self.inv_w[2]];
        let s = m[0] + m[1] + m[2];
        [m[0] / s, m[1] / s, m[2] / s]
    }

    fn depth_from_edges(&self, e: &[i64; 3]) -> f64 {
        let a = self.area2 as f64;
        let l = [e[0] as f64 / a, e[1] as f64 / a, e[2] as f64 / a];
        let iw = l[0] * self.inv_w[0] + l[1] * self.inv_w[1] + l[2] * self.inv_w[2];
        let dw = l[0] * self.depth_w[0] + l[1] * self.depth_w[1] + l[2] * self.depth_w[2];
        dw / iw - self.depth_offset
    }

    #[cfg(test)]
    pub fn depth_at(&self, sx: i64, sy: i64) -> f64 {
        self.depth_from_edges(&self.edges_at(sx, sy))
    }

    fn clamped_bbox(&self, rect: &Rect) -> Option<[i64; 4]> {
        let x0 = self.bbox[0].max(rect.x0 as i64);
        let x1 = self.bbox[1].min((rect.x0 + rect.w) as i64 - 1);
        let y0 = self.bbox[2].max(rect.y0 as i64);
        let y1 = self.bbox[3].min((rect.y0 + rect.h) as i64 - 1);
        (x0 <= x1 && y0 <= y1).then_some([x0, x1, y0, y1])
    }
}

/// A rectangle of samples.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub(crate) struct Rect {
    pub x0: usize,
    pub y0: usize,
    pub w: usize,
    pub h: usize,
}

/// Square tiles covering a `width`×`height` sample grid, row-major.
pub(crate) fn tiles(width: usize, height: usize, size: usize) -> Vec<Rect> {
    let mut out = Vec::new();
    for y0 in (0..height).step_by(size) {
        for x0 in (0..width).step_by(size) {
            out.push(Rect { x0, y0, w: size.min(width - x0), h: size.min(height - y0) });
        }
    }
    out
}

/// Triangle indices per tile, each list in ascending triangle order.
pub(crate) fn bin(tris: &[RasterTri], width: usize, height: usize, size: usize) -> Vec<Vec<u32>> {
    let tx = width.div_ceil(size);
    let ty = height.div_ceil(size);
    let mut bins = vec![Vec::new(); tx * ty];
    let full = Rect { x0: 0, y0: 0, w: width, h: height };
    for (i, t) in tris.iter().enumerate() {
        let Some([x0, x1, y0, y1]) = t.clamped_bbox(&full) else { continue };
        for by in (y0 as usize / size)..=(y1 as usize / size) {
            for bx in (x0 as usize / size)..=(x1 as usize / size) {
                bins[by * tx + bx].push(i as u32);
            }
        }
    }
    bins
}

/// Per-sample nearest depth and triangle index within one tile.
pub(crate) struct TileDepth {
    pub rect: Rect,
    pub depth: Vec<f64>,
    /// `u32::MAX` where no triangle covers the sample.
    pub ids: Vec<u32>,
}

/// Z-buffered rasterization of the binned triangles into one tile. A later
/// triangle replaces an earlier one only when strictly nearer.
pub(crate) fn raster_tile(tris: &[RasterTri], bin: &[u32], rect: Rect) -> TileDepth {
    let mut depth = vec![f64::INFINITY; rect.w * rect.h];
    let mut ids = vec![u32::MAX; rect.w * rect.h];
    for &ti in bin {
        let t = &tris[ti as usize];
        let Some([x0, x1, y0, y1]) = t.clamped_bbox(&rect) else { continue };
        // Edge increments per sample step.
        let mut step_x = [0i64; 3];
        let mut step_y = [0i64; 3];
        for k in 0..3 {
            let (a, b) = ((k + 1) % 3, (k + 2) % 3);
            step_x[k] = -(t.y[b] - t.y[a]) * SUBPIXEL;
            step_y[k] = (t.x[b] - t.x[a]) * SUBPIXEL;
        }
        let mut row = t.edges_at(x0, y0);
        for sy in y0..=y1 {
            let mut e = row;
            let base = (sy as usize - rect.y0) * rect.w;
            for sx in x0..=x1 {
                if t.inside(&e) {
                    let d = t.depth_from_edges(&e);
                    let i = base + (sx as usize - rect.x0);
                    if d < depth[i] {
                        depth[i] = d;
                        ids[i] = ti;
                    }
                }
                for k in 0..3 {
                    e[k] += step_x[k];
                }
            }
            for k in 0..3 {
                row[k] += step_y[k];
            }
        }
    }
    TileDepth { rect, depth, ids }
}

/// Rasterizes into a full `width`×`height` buffer, tiles in parallel.
pub(crate) fn raster_full(tris: &[RasterTri], width: usize, height: usize, tile: usize) -> (Vec<f64>, Vec<u32>) {
    let rects = tiles(width, height, tile);
    let bins = bin(tris, width, height, tile);
    let parts: Vec<TileDepth> = rects.par_iter().zip(bins.par_iter()).map(|(r, b)| raster_tile(tris, b, *r)).collect();
    let mut depth = vec![f64::INFINITY; width * height];
    let mut ids = vec![u32::MAX; width * height];
    for p in parts {
        for row in 0..p.rect.h {
            let dst = (p.rect.y0 + row) * width + p.rect.x0;
            depth[dst..dst + p.rect.w].copy_from_slice(&p.depth[row * p.rect.w..(row + 1) * p.rect.w]);
            ids[dst..dst + p.rect.w].copy_from_slice(&p.ids[row * p.rect.w..(row + 1) * p.rect.w]);
        }
    }
    (depth, ids)
}

/// Z-buffer visibility of screen-space triangles, one sample per pixel:
/// each triangle is three `(x, y, depth)` vertices in pixel units and
/// depth is interpolated linearly. Returns the index of the visible
/// triangle per pixel, row-major.
pub fn visibility(tris: &[[[f64; 3]; 3]], width: usize, height: usize) -> Vec<Option<usize>> {
    let setup: Vec<RasterTri> = tris
        .iter()
        .enumerate()
        .filter_map(|(i, t)| {
            RasterTri::new(
                [[t[0][0], t[0][1]], [t[1][0], t[1][1]], [t[2][0], t[2][1]]],
                [1.0; 3],
                [t[0][2], t[1][2], t[2][2]],
                0.0,
                i as u32,
            )
        })
        .collect();
    let (_, ids) = raster_full(&setup, width, height, 16);
    ids.into_iter()
        .map(|i| (i != u32::MAX).then(|| setup[i as usize].payload as usize))
        .collect()
}
