//! Seeded procedural textures (value noise plus per-kind patterns).

use super::mesh::{MaterialSpec, TextureKind};
use crate::rng::splitmix64;

fn lattice(seed: u64, ix: i64, iy: i64) -> f64 {
    let h = splitmix64(seed ^ splitmix64((ix as u64).wrapping_mul(0x9E37_79B9) ^ (iy as u64).rotate_left(32)));
    (h >> 11) as f64 / (1u64 << 53) as f64
}

fn smooth(t: f64) -> f64 {
    t * t * (3.0 - 2.0 * t)
}

/// Value noise in `[0, 1)`, bilinear over a hashed lattice with smoothstep
/// weights.
pub fn value_noise(seed: u64, x: f64, y: f64) -> f64 {
    let (fx, fy) = (x.floor(), y.floor());
    let (ix, iy) = (fx as i64, fy as i64);
    let (tx, ty) = (smooth(x - fx), smooth(y - fy));
    let a = lattice(seed, ix, iy);
    let b = lattice(seed, ix + 1, iy);
    let c = lattice(seed, ix, iy + 1);
    let d = lattice(seed, ix + 1, iy + 1);
    let south = a + (b - a) * tx;
    let north = c + (d - c) * tx;
    south + (north - south) * ty
}

/// Three octaves of value noise normalized to `[0, 1)`.
pub fn fbm(seed: u64, x: f64, y: f64) -> f64 {
    let mut sum = 0.0;
    let mut amp = 1.0;
    let mut freq = 1.0;
    let mut norm = 0.0;
    for octave in 0..3u64 {
        sum += amp * value_noise(seed.wrapping_add(octave), x * freq, y * freq);
        norm += amp;
        amp *= 0.5;
        freq *= 2.03;
    }
    sum / norm
}

fn wrap(t: f64) -> f64 {
    let w = t - t.floor();
    if w >= 1.0 {
        0.0
    } else {
        w
    }
}

/// Texture color of `spec` at `uv` (wrapped into `[0, 1)`).
pub fn procedural_texture(spec: &MaterialSpec, uv: [f64; 2]) -> [f64; 3] {
    let (u, v) = (wrap(uv[0]), wrap(uv[1]));
    let (x, y) = (u * spec.uv_scale[0], v * spec.uv_scale[1]);
    let amp = spec.noise_amplitude;
    let n = fbm(spec.noise_seed, x, y);
    let (modulation, pattern) = match spec.texture_kind {
        TextureKind::Terrain | TextureKind::FlatRoof | TextureKind::Road => (n, 1.0),
        TextureKind::GableRoof => {
            // Shingle courses every 1/8 of the noise cell along v.
            let course = wrap(y * 8.0);
            (n, if course < 0.15 { 0.82 } else { 1.0 })
        }
        TextureKind::Facade => {
            // Window bands: three floors and four bays per wall unit.
            let floor = wrap(v * 3.0);
            let bay = wrap(u * 4.0);
            let window = (0.35..0.75).contains(&floor) && (0.2..0.8).contains(&bay);
            (n, if window { 0.45 } else { 1.0 })
        }
        TextureKind::Damage => {
            // Hard-thresholded noise gives the blotchy ash/char mottle.
            let t = ((n - 0.42) / 0.16).clamp(0.0, 1.0);
            (smooth(t), 1.0)
        }
    };
    let factor = pattern * (1.0 + amp * (2.0 * modulation - 1.0));
    if amp == 0.0 && pattern == 1.0 {
        return spec.base_color;
    }
    [
        (spec.base_color[0] * factor).clamp(0.0, 1.0),
        (spec.base_color[1] * factor).clamp(0.0, 1.0),
        (spec.base_color[2] * factor).clamp(0.0, 1.0),
    ]
}
