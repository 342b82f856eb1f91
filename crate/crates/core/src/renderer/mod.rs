//! Deterministic software renderer.
//!
//! Each pass transforms and clips the layer meshes, bins the resulting
//! fixed-point triangles into screen tiles and rasterizes the tiles in
//! parallel at `msaa × msaa` samples per pixel. Visible samples are shaded
//! after rasterization (texture, Lambert term with shadow-map visibility,
//! ambient) and box-filtered to pixels. Tile outputs are merged in tile
//! order, so results do not depend on the number of threads.
//!
//! Draped surfaces (roads, damaged footprints) are pulled towards the
//! camera by a small view-depth offset so they win the depth test against
//! the terrain they lie on. They do not cast shadows.

mod camera;
mod image;
mod raster;
mod shadow;

use std::collections::BTreeMap;

use nalgebra::{Matrix4, Vector4};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use camera::{camera_matrices, eye_direction, CameraMatrices};
pub use image::{ChangeMask, GrayImage, Image, ImageError};
pub use raster::visibility;
pub use shadow::{render_shadow_map, ShadowMap};

use crate::change_engine::{assign_layers, sun_direction, AcquisitionCondition, ChangeError, ChangeSet, SunState};
use crate::geometry::{procedural_texture, MaterialId, MaterialSpec, Mesh, SceneModel};
use crate::map_ingest::Bounds2;
use raster::{bin, raster_tile, tiles, RasterTri, Rect};

/// Suns at or below this direction z-component are rejected.
pub const MIN_SUN_ELEVATION: f64 = 0.01;
/// View-depth offset of road ribbons, meters.
pub const ROAD_DEPTH_OFFSET: f64 = 0.1;
/// View-depth offset of damaged footprints, meters.
pub const DAMAGE_DEPTH_OFFSET: f64 = 0.3;
/// Weight of the damage pattern against the terrain beneath it.
pub const DAMAGE_PATTERN_WEIGHT: f64 = 0.65;

const TILE_PIXELS: usize = 32;
/// Clip-space guard band, in multiples of the viewport half-extent.
const GUARD: f64 = 2.0;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum RenderError {
    #[error("invalid render configuration: {0}")]
    InvalidConfig(String),
    #[error("Sun too low for lighting (direction z = {z:.4})")]
    DegenerateLighting { z: f64 },
    #[error("mesh references unknown material {0}")]
    MissingMaterial(MaterialId),
    #[error(transparent)]
    Layers(#[from] ChangeError),
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RenderConfig {
    pub width: usize,
    pub height: usize,
    /// Supersamples per pixel axis.
    pub msaa: usize,
    pub shadow_map_size: usize,
    /// Shadow-map taps per lookup: 1 (hard) or 9 (3×3 soft).
    pub soft_shadow_kernel: usize,
    pub background: [f64; 3],
    /// Slack when comparing annotation depth with scene depth, meters.
    pub mask_depth_bias: f64,
}

impl Default for RenderConfig {
    fn default() -> Self {
        Self {
            width: 1024,
            height: 1024,
            msaa: 3,
            shadow_map_size: 4096,
            soft_shadow_kernel: 9,
            background: [0.0; 3],
            mask_depth_bias: 0.05,
        }
    }
}

impl RenderConfig {
    pub fn validate(&self) -> Result<(), RenderError> {
        let bad = |m: String| Err(RenderError::InvalidConfig(m));
        if self.width < 16 || self.height < 16 {
            return bad(format!("image {}x{} is smaller than 16x16", self.width, self.height));
        }
        if !(1..=4).contains(&self.msaa) {
            return bad(format!("msaa {} not in 1..=4", self.msaa));
        }
        if self.shadow_map_size < 256 {
            return bad(format!("shadow_map_size {} is below 256", self.shadow_map_size));
        }
        if self.soft_shadow_kernel != 1 && self.soft_shadow_kernel != 9 {
            return bad(format!("soft_shadow_kernel {} must be 1 or 9", self.soft_shadow_kernel));
        }
        if self.background.iter().any(|c| !(0.0..=1.0).contains(c)) {
            return bad("background components must lie in [0, 1]".into());
        }
        if (self.width * self.msaa).max(self.height * self.msaa) as f64 * 4.0 > raster::MAX_COORD {
            return bad("image too large".into());
        }
        Ok(())
    }
}

/// `floor(255·clamp(c, 0, 1) + 0.5)`.
pub fn quantize(c: f64) -> u8 {
    (c.clamp(0.0, 1.0) * 255.0 + 0.5).floor() as u8
}

#[derive(Clone, Copy, Debug)]
struct ClipVert {
    c: [f64; 4],
    world: [f64; 3],
    normal: [f64; 3],
    uv: [f64; 2],
}

fn lerp_vert(a: &ClipVert, b: &ClipVert, t: f64) -> ClipVert {
    let l = |x: f64, y: f64| x + t * (y - x);
    ClipVert {
        c: std::array::from_fn(|i| l(a.c[i], b.c[i])),
        world: std::array::from_fn(|i| l(a.world[i], b.world[i])),
        normal: std::array::from_fn(|i| l(a.normal[i], b.normal[i])),
        uv: std::array::from_fn(|i| l(a.uv[i], b.uv[i])),
    }
}

/// Signed distances to the near plane and the four guard planes.
fn plane_distances(c: &[f64; 4], near: f64) -> [f64; 5] {
    [
        c[3] - near,
        GUARD * c[3] - c[0],
        GUARD * c[3] + c[0],
        GUARD * c[3] - c[1],
        GUARD * c[3] + c[1],
    ]
}

fn clip_polygon(mut poly: Vec<ClipVert>, near: f64) -> Vec<ClipVert> {
    for plane in 0..5 {
        if poly.is_empty() {
            break;
        }
        let mut out = Vec::with_capacity(poly.len() + 2);
        for i in 0..poly.len() {
            let (a, b) = (&poly[i], &poly[(i + 1) % poly.len()]);
            let (da, db) = (plane_distances(&a.c, near)[plane], plane_distances(&b.c, near)[plane]);
            if da >= 0.0 {
                out.push(*a);
            }
            if (da >= 0.0) != (db >= 0.0) {
                out.push(lerp_vert(a, b, da / (da - db)));
            }
        }
        poly = out;
    }
    poly
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
enum SurfaceKind {
    Plain,
    Damage,
}

/// Attributes of one rasterized triangle, in the triangle's oriented
/// vertex order.
#[derive(Clone, Copy, Debug)]
struct Surface {
    world: [[f64; 3]; 3],
    normal: [[f64; 3]; 3],
    uv: [[f64; 2]; 3],
    material: u32,
    kind: SurfaceKind,
}

struct Prepared {
    tris: Vec<RasterTri>,
    surfaces: Vec<Surface>,
}

struct MaterialTable {
    specs: Vec<MaterialSpec>,
    index: BTreeMap<MaterialId, u32>,
}

impl MaterialTable {
    fn new(materials: &BTreeMap<MaterialId, MaterialSpec>) -> Self {
        Self {
            specs: materials.values().cloned().collect(),
            index: materials.keys().enumerate().map(|(i, k)| (*k, i as u32)).collect(),
        }
    }

    fn get(&self, id: MaterialId) -> Result<u32, RenderError> {
        self.index.get(&id).copied().ok_or(RenderError::MissingMaterial(id))
    }
}

fn depth_offset(material: MaterialId) -> f64 {
    match material {
        MaterialId::ROAD => ROAD_DEPTH_OFFSET,
        MaterialId::DAMAGE => DAMAGE_DEPTH_OFFSET,
        _ => 0.0,
    }
}

/// Transforms, clips and sets up every triangle of `meshes` for a
/// `sw`×`sh` sample grid.
fn prepare(
    meshes: &[&Mesh],
    vp: &Matrix4<f64>,
    near: f64,
    sw: usize,
    sh: usize,
    materials: Option<&MaterialTable>,
) -> Result<Prepared, RenderError> {
    let per_mesh: Vec<Vec<(RasterTri, Surface)>> = meshes
        .par_iter()
        .map(|m| {
            let material = match materials {
                Some(t) => t.get(m.material)?,
                None => 0,
            };
            let kind = if m.material == MaterialId::DAMAGE { SurfaceKind::Damage } else { SurfaceKind::Plain };
            let offset = depth_offset(m.material);
            let clip: Vec<[f64; 4]> = m
                .vertices
                .iter()
                .map(|v| {
                    let c = vp * Vector4::new(v.position[0], v.position[1], v.position[2], 1.0);
                    [c.x, c.y, c.z, c.w]
                })
                .collect();
            let mut out = Vec::new();
            for t in &m.triangles {
                let verts: [ClipVert; 3] = std::array::from_fn(|k| {
                    let v = &m.vertices[t[k] as usize];
                    ClipVert { c: clip[t[k] as usize], world: v.position, normal: v.normal, uv: v.uv }
                });
                let d: [[f64; 5]; 3] = std::array::from_fn(|k| plane_distances(&verts[k].c, near));
                if (0..5).any(|p| d.iter().all(|dk| dk[p] < 0.0)) {
                    continue;
                }
                let poly = if d.iter().all(|dk| dk.iter().all(|x| *x >= 0.0)) {
                    verts.to_vec()
                } else {
                    clip_polygon(verts.to_vec(), near)
                };
                for i in 1..poly.len().saturating_sub(1) {
                    let tri = [poly[0], poly[i], poly[i + 1]];
                    let pts = tri.map(|v| {
                        [(v.c[0] / v.c[3] + 1.0) * 0.5 * sw as f64, (1.0 - v.c[1] / v.c[3]) * 0.5 * sh as f64]
                    });
                    let Some(rt) = RasterTri::new(pts, tri.map(|v| 1.0 / v.c[3]), tri.map(|v| v.c[3]), offset, 0) else {
                        continue;
                    };
                    let o = rt.order;
                    out.push((
                        rt,
                        Surface {
                            world: o.map(|k| tri[k].world),
                            normal: o.map(|k| tri[k].normal),
                            uv: o.map(|k| tri[k].uv),
                            material,
                            kind,
                        },
                    ));
                }
            }
            Ok(out)
        })
        .collect::<Result<_, RenderError>>()?;
    let mut tris = Vec::new();
    let mut surfaces = Vec::new();
    for (mut rt, s) in per_mesh.into_iter().flatten() {
        rt.payload = tris.len() as u32;
        tris.push(rt);
        surfaces.push(s);
    }
    Ok(Prepared { tris, surfaces })
}

struct ShadeContext<'a> {
    materials: &'a MaterialTable,
    terrain: Option<u32>,
    terrain_extent: Bounds2,
    sun: [f64; 3],
    ambient: f64,
    shadow: &'a ShadowMap,
}

fn weighted3(w: &[f64; 3], v: &[[f64; 3]; 3]) -> [f64; 3] {
    std::array::from_fn(|i| w[0] * v[0][i] + w[1] * v[1][i] + w[2] * v[2][i])
}

impl ShadeContext<'_> {
    fn shade(&self, s: &Surface, w: &[f64; 3]) -> [f64; 3] {
        let p = weighted3(w, &s.world);
        let n = weighted3(w, &s.normal);
        let len = (n[0] * n[0] + n[1] * n[1] + n[2] * n[2]).sqrt();
        let n = if len > 0.0 { [n[0] / len, n[1] / len, n[2] / len] } else { [0.0, 0.0, 1.0] };
        let uv = [
            w[0] * s.uv[0][0] + w[1] * s.uv[1][0] + w[2] * s.uv[2][0],
            w[0] * s.uv[0][1] + w[1] * s.uv[1][1] + w[2] * s.uv[2][1],
        ];
        let mut albedo = procedural_texture(&self.materials.specs[s.material as usize], uv);
        if s.kind == SurfaceKind::Damage {
            if let Some(t) = self.terrain {
                let e = &self.terrain_extent;
                let tuv = [(p[0] - e.min.x) / e.width(), (p[1] - e.min.y) / e.height()];
                let ground = procedural_texture(&self.materials.specs[t as usize], tuv);
                albedo = std::array::from_fn(|i| {
                    DAMAGE_PATTERN_WEIGHT * albedo[i] + (1.0 - DAMAGE_PATTERN_WEIGHT) * ground[i]
                });
            }
        }
        let lambert = (n[0] * self.sun[0] + n[1] * self.sun[1] + n[2] * self.sun[2]).max(0.0);
        let vis = if lambert > 0.0 { self.shadow.visibility(p, n) } else { 0.0 };
        let k = self.ambient + (1.0 - self.ambient) * lambert * vis;
        albedo.map(|a| a * k)
    }
}

struct TileOut {
    rect: Rect,
    rgb: Vec<u8>,
    mask: Vec<bool>,
}

/// Shared pass driver: an image of `layers`, and optionally the change mask
/// of `annotation` against the same layers.
fn render_layers(
    scene: &SceneModel,
    layers: &[&Mesh],
    annotation: Option<&[&Mesh]>,
    cam: &CameraMatrices,
    sun: &SunState,
    cfg: &RenderConfig,
) -> Result<(Image, Option<ChangeMask>), RenderError> {
    cfg.validate()?;
    let s = sun_direction(sun);
    let casters: Vec<&Mesh> = layers
        .iter()
        .copied()
        .filter(|m| m.material != MaterialId::ROAD && m.material != MaterialId::DAMAGE)
        .collect();
    let shadow = render_shadow_map(&casters, &scene.bounds, s, cfg)?;
    let table = MaterialTable::new(&scene.materials);
    let n = cfg.msaa;
    let (sw, sh) = (cfg.width * n, cfg.height * n);
    let vp = cam.view_projection();
    let scene_tris = prepare(layers, &vp, cam.near, sw, sh, Some(&table))?;
    let ann_tris = annotation.map(|a| prepare(a, &vp, cam.near, sw, sh, None)).transpose()?;
    let ctx = ShadeContext {
        materials: &table,
        terrain: table.index.get(&MaterialId::TERRAIN).copied(),
        terrain_extent: scene.terrain_extent,
        sun: s,
        ambient: sun.ambient_fraction,
        shadow: &shadow,
    };

    let tile = TILE_PIXELS * n;
    let rects = tiles(sw, sh, tile);
    let bins = bin(&scene_tris.tris, sw, sh, tile);
    let ann_bins = ann_tris.as_ref().map(|a| bin(&a.tris, sw, sh, tile));
    let outs: Vec<TileOut> = rects
        .par_iter()
        .enumerate()
        .map(|(ti, rect)| {
            let td = raster_tile(&scene_tris.tris, &bins[ti], *rect);
            let colors: Vec<[f64; 3]> = (0..rect.w * rect.h)
                .map(|i| match td.ids[i] {
                    u32::MAX => cfg.background,
                    id => {
                        let (sx, sy) = ((rect.x0 + i % rect.w) as i64, (rect.y0 + i / rect.w) as i64);
                        let t = &scene_tris.tris[id as usize];
                        ctx.shade(&scene_tris.surfaces[id as usize], &t.weights(sx, sy))
                    }
                })
                .collect();
            let ad = match (&ann_tris, &ann_bins) {
                (Some(a), Some(b)) => Some(raster_tile(&a.tris, &b[ti], *rect)),
                _ => None,
            };
            let (pw, ph) = (rect.w / n, rect.h / n);
            let mut rgb = Vec::with_capacity(pw * ph * 3);
            let mut mask = Vec::with_capacity(pw * ph);
            let inv = 1.0 / (n * n) as f64;
            for py in 0..ph {
                for px in 0..pw {
                    let mut acc = [0.0; 3];
                    let mut hits = 0;
                    for j in 0..n {
                        for i in 0..n {
                            let k = (py * n + j) * rect.w + px * n + i;
                            for c in 0..3 {
                                acc[c] += colors[k][c];
                            }
                            if let Some(ad) = &ad {
                                if ad.ids[k] != u32::MAX && ad.depth[k] <= td.depth[k] + cfg.mask_depth_bias {
                                    hits += 1;
                                }
                            }
                        }
                    }
                    rgb.extend(acc.map(|c| quantize(c * inv)));
                    mask.push(2 * hits >= n * n && ad.is_some());
                }
            }
            TileOut { rect: Rect { x0: rect.x0 / n, y0: rect.y0 / n, w: pw, h: ph }, rgb, mask }
        })
        .collect();

    let mut img = Image::new(cfg.width, cfg.height);
    let mut mask = annotation.map(|_| ChangeMask::new(cfg.width, cfg.height));
    for t in outs {
        for y in 0..t.rect.h {
            let dst = 3 * ((t.rect.y0 + y) * cfg.width + t.rect.x0);
            img.pixels[dst..dst + 3 * t.rect.w].copy_from_slice(&t.rgb[3 * y * t.rect.w..3 * (y + 1) * t.rect.w]);
            if let Some(m) = mask.as_mut() {
                for x in 0..t.rect.w {
                    if t.mask[y * t.rect.w + x] {
                        m.set(t.rect.x0 + x, t.rect.y0 + y, true);
                    }
                }
            }
        }
    }
    Ok((img, mask))
}

/// Renders one pass over `layers` with the scene's materials.
pub fn render_pass(
    scene: &SceneModel,
    layers: &[&Mesh],
    cam: &CameraMatrices,
    sun: &SunState,
    cfg: &RenderConfig,
) -> Result<Image, RenderError> {
    Ok(render_layers(scene, layers, None, cam, sun, cfg)?.0)
}

/// Sets a pixel when at least half of its samples see annotation geometry
/// no farther than the nearest occluder plus `mask_depth_bias`.
pub fn render_mask(
    annotation: &[&Mesh],
    occluders: &[&Mesh],
    cam: &CameraMatrices,
    cfg: &RenderConfig,
) -> Result<ChangeMask, RenderError> {
    cfg.validate()?;
    let n = cfg.msaa;
    let (sw, sh) = (cfg.width * n, cfg.height * n);
    let vp = cam.view_projection();
    let ann = prepare(annotation, &vp, cam.near, sw, sh, None)?;
    let occ = prepare(occluders, &vp, cam.near, sw, sh, None)?;
    let tile = TILE_PIXELS * n;
    let rects = tiles(sw, sh, tile);
    let (ab, ob) = (bin(&ann.tris, sw, sh, tile), bin(&occ.tris, sw, sh, tile));
    let parts: Vec<(Rect, Vec<bool>)> = rects
        .par_iter()
        .enumerate()
        .map(|(ti, rect)| {
            let a = raster_tile(&ann.tris, &ab[ti], *rect);
            let o = raster_tile(&occ.tris, &ob[ti], *rect);
            let (pw, ph) = (rect.w / n, rect.h / n);
            let mut bits = Vec::with_capacity(pw * ph);
            for py in 0..ph {
                for px in 0..pw {
                    let mut hits = 0;
                    for j in 0..n {
                        for i in 0..n {
                            let k = (py * n + j) * rect.w + px * n + i;
                            if a.ids[k] != u32::MAX && a.depth[k] <= o.depth[k] + cfg.mask_depth_bias {
                                hits += 1;
                            }
                        }
                    }
                    bits.push(2 * hits >= n * n);
                }
            }
            (Rect { x0: rect.x0 / n, y0: rect.y0 / n, w: pw, h: ph }, bits)
        })
        .collect();
    let mut mask = ChangeMask::new(cfg.width, cfg.height);
    for (r, bits) in parts {
        for y in 0..r.h {
            for x in 0..r.w {
                if bits[y * r.w + x] {
                    mask.set(r.x0 + x, r.y0 + y, true);
                }
            }
        }
    }
    Ok(mask)
}

/// The before pass of `cs` under `cond`.
pub fn render_before(
    scene: &SceneModel,
    cs: &ChangeSet,
    cond: &AcquisitionCondition,
    cfg: &RenderConfig,
) -> Result<Image, RenderError> {
    let layers = assign_layers(scene, cs)?;
    let cam = camera_matrices(&cond.camera, cfg.width, cfg.height);
    render_pass(scene, &layers.before, &cam, &cond.sun, cfg)
}

/// The after pass of `cs` under `cond` and its change mask.
pub fn render_after(
    scene: &SceneModel,
    cs: &ChangeSet,
    cond: &AcquisitionCondition,
    cfg: &RenderConfig,
) -> Result<(Image, ChangeMask), RenderError> {
    let layers = assign_layers(scene, cs)?;
    let cam = camera_matrices(&cond.camera, cfg.width, cfg.height);
    let (after, mask) = render_layers(scene, &layers.after, Some(&layers.annotation), &cam, &cond.sun, cfg)?;
    Ok((after, mask.expect("annotation requested")))
}

/// Before, after and mask for one change set. The before pass uses
/// `before_cond`; the after pass and the mask use `after_cond`.
pub fn render_sample_pair(
    scene: &SceneModel,
    cs: &ChangeSet,
    before_cond: &AcquisitionCondition,
    after_cond: &AcquisitionCondition,
    cfg: &RenderConfig,
) -> Result<(Image, Image, ChangeMask), RenderError> {
    let before = render_before(scene, cs, before_cond, cfg)?;
    let (after, mask) = render_after(scene, cs, after_cond, cfg)?;
    Ok((before, after, mask))
}

/// Before, after and mask under a single acquisition condition.
pub fn render_sample(
    scene: &SceneModel,
    cs: &ChangeSet,
    cond: &AcquisitionCondition,
    cfg: &RenderConfig,
) -> Result<(Image, Image, ChangeMask), RenderError> {
    render_sample_pair(scene, cs, cond, cond, cfg)
}
