use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::generate::{Manifest, AFTER_FILE, BEFORE_FILE, MASK_FILE};
use super::PipelineError;
use crate::renderer::{ChangeMask, Image, ImageError};

pub const PATCH_INDEX_FILE: &str = "patches.json";

/// Co-registered crops of one sample at offset `(x, y)`.
#[derive(Clone, Debug, PartialEq)]
pub struct Patch {
    pub x: usize,
    pub y: usize,
    pub before: Image,
    pub after: Image,
    pub mask: ChangeMask,
}

/// Window origins along an axis of length `dim`; the last window is
/// anchored to the far edge.
pub fn patch_offsets(dim: usize, size: usize, stride: usize) -> Result<Vec<usize>, PipelineError> {
    if size == 0 || stride == 0 {
        return Err(PipelineError::Config(format!("patch size {size} and stride {stride} must be positive")));
    }
    if size > dim {
        return Err(PipelineError::Config(format!("patch size {size} exceeds image dimension {dim}")));
    }
    let n = (dim - size).div_ceil(stride) + 1;
    Ok((0..n).map(|i| (i * stride).min(dim - size)).collect())
}

pub fn tile_patches(
    before: &Image,
    after: &Image,
    mask: &ChangeMask,
    size: usize,
    stride: usize,
) -> Result<Vec<Patch>, PipelineError> {
    let dims = [(after.width, after.height), (mask.width, mask.height)];
    if let Some(&(w, h)) = dims.iter().find(|d| **d != (before.width, before.height)) {
        return Err(PipelineError::Input(format!(
            "sample rasters disagree: {}x{} vs {w}x{h}",
            before.width, before.height
        )));
    }
    let xs = patch_offsets(before.width, size, stride)?;
    let ys = patch_offsets(before.height, size, stride)?;
    let mut out = Vec::with_capacity(xs.len() * ys.len());
    for &y in &ys {
        for &x in &xs {
            out.push(Patch {
                x,
                y,
                before: before.crop(x, y, size, size),
                after: after.crop(x, y, size, size),
                mask: mask.crop(x, y, size, size),
            });
        }
    }
    Ok(out)
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct PatchIndexEntry {
    /// Patch directory relative to the tiling output root.
    pub path: String,
    /// Sample directory relative to the manifest.
    pub source: String,
    pub source_meta_sha256: String,
    pub x: usize,
    pub y: usize,
    pub size: usize,
    pub mask_pixels: usize,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct TilingReport {
    pub size: usize,
    pub stride: usize,
    pub patches: Vec<PatchIndexEntry>,
}

/// Tiles every sample of a manifest into `out_dir/<sample>/y<y>_x<x>/` and
/// writes `patches.json`.
pub fn tile_dataset(manifest_path: &Path, out_dir: &Path, size: usize, stride: usize) -> Result<TilingReport, PipelineError> {
    let manifest = Manifest::load(manifest_path)?;
    let root = manifest_path.parent().unwrap_or(Path::new("."));
    let read = |e: ImageError| PipelineError::Input(e.to_string());
    let out_err = |e: ImageError| PipelineError::Output(e.to_string());
    let mut report = TilingReport { size, stride, patches: Vec::new() };
    for entry in &manifest.samples {
        let dir = root.join(&entry.path);
        let before = Image::read_png(&dir.join(BEFORE_FILE)).map_err(read)?;
        let after = Image::read_png(&dir.join(AFTER_FILE)).map_err(read)?;
        let mask = ChangeMask::read_png(&dir.join(MASK_FILE)).map_err(read)?;
        let m = &entry.meta;
        let name = format!("scene_{}_change_{}_cond_{}", m.scene_id, m.change_id, m.condition_index);
        for p in tile_patches(&before, &after, &mask, size, stride)? {
            let rel = format!("{name}/y{}_x{}", p.y, p.x);
            let pdir = out_dir.join(&rel);
            fs::create_dir_all(&pdir).map_err(|e| PipelineError::io(&pdir, e))?;
            p.before.write_png(&pdir.join(BEFORE_FILE)).map_err(out_err)?;
            p.after.write_png(&pdir.join(AFTER_FILE)).map_err(out_err)?;
            p.mask.write_png(&pdir.join(MASK_FILE)).map_err(out_err)?;
            report.patches.push(PatchIndexEntry {
                path: rel,
                source: entry.path.clone(),
                source_meta_sha256: entry.meta_sha256.clone(),
                x: p.x,
                y: p.y,
                size,
                mask_pixels: p.mask.count(),
            });
        }
    }
    let index = out_dir.join(PATCH_INDEX_FILE);
    fs::create_dir_all(out_dir).map_err(|e| PipelineError::io(out_dir, e))?;
    let mut bytes = serde_json::to_vec_pretty(&report).expect("index serializes");
    bytes.push(b'\n');
    fs::write(&index, bytes).map_err(|e| PipelineError::io(&index, e))?;
    Ok(report)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn offsets_anchor_last_window() {
        let o = patch_offsets(3072, 352, 352).unwrap();
        assert_eq!(o.len(), 9);
        assert_eq!(*o.last().unwrap(), 2720);
        assert_eq!(patch_offsets(100, 100, 7).unwrap(), vec![0]);
        assert_eq!(patch_offsets(10, 4, 3).unwrap(), vec![0, 3, 6]);
        assert_eq!(patch_offsets(11, 4, 3).unwrap(), vec![0, 3, 6, 7]);
        assert!(patch_offsets(10, 11, 1).is_err());
        assert!(patch_offsets(10, 4, 0).is_err());
    }
}
