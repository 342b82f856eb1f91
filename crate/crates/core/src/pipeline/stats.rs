use std::collections::BTreeSet;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::generate::{Manifest, AFTER_FILE, BEFORE_FILE, MASK_FILE};
use super::PipelineError;
use crate::renderer::{ChangeMask, Image};

/// Fixed-width histogram over `[lo, lo + width·counts.len())`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Histogram {
    pub lo: f64,
    pub width: f64,
    pub counts: Vec<usize>,
}

impl Histogram {
    pub fn new(lo: f64, hi: f64, width: f64) -> Self {
        let n = ((hi - lo) / width).ceil().max(1.0) as usize;
        Self { lo, width, counts: vec![0; n] }
    }

    /// Values outside the range are clamped into the edge bins.
    pub fn add(&mut self, v: f64) {
        let i = ((v - self.lo) / self.width).floor().max(0.0) as usize;
        let last = self.counts.len() - 1;
        self.counts[i.min(last)] += 1;
    }

    pub fn total(&self) -> usize {
        self.counts.iter().sum()
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SampleStats {
    pub path: String,
    pub scene_id: usize,
    pub change_id: usize,
    pub condition_index: usize,
    /// `None` when a raster could not be read.
    pub change_pixel_fraction: Option<f64>,
    pub damaged_fraction: f64,
    /// Mask pixels outside the 1-pixel dilation of `diff(before, after)`.
    pub containment_violations: Option<usize>,
    pub containment_ok: bool,
    pub missing: Vec<String>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DatasetStats {
    pub samples: Vec<SampleStats>,
    /// One entry per `(scene, change)` set.
    pub damaged_fractions: Vec<f64>,
    pub alpha_histogram: Histogram,
    pub declination_histogram: Histogram,
    pub mean_change_pixel_fraction: f64,
    pub containment_failures: usize,
    pub missing_files: usize,
}

/// QA report over a manifest. Unreadable sample files are listed, not fatal.
pub fn dataset_stats(manifest_path: &Path) -> Result<DatasetStats, PipelineError> {
    let manifest = Manifest::load(manifest_path)?;
    let root = manifest_path.parent().unwrap_or(Path::new("."));
    let mut alpha = Histogram::new(0.0, 25.0, 1.0);
    let mut decl = Histogram::new(0.0, 180.0, 10.0);
    let mut sets = BTreeSet::new();
    let mut damaged_fractions = Vec::new();
    let mut samples = Vec::with_capacity(manifest.samples.len());
    for entry in &manifest.samples {
        let m = &entry.meta;
        alpha.add(m.camera.inclination_alpha);
        decl.add(m.sun.declination);
        if sets.insert((m.scene_id, m.change_id)) {
            damaged_fractions.push(m.damaged_fraction());
        }
        let dir = root.join(&entry.path);
        let mut missing = Vec::new();
        let before = Image::read_png(&dir.join(BEFORE_FILE)).map_err(|_| missing.push(BEFORE_FILE.to_string())).ok();
        let after = Image::read_png(&dir.join(AFTER_FILE)).map_err(|_| missing.push(AFTER_FILE.to_string())).ok();
        let mask = ChangeMask::read_png(&dir.join(MASK_FILE)).map_err(|_| missing.push(MASK_FILE.to_string())).ok();
        let change_pixel_fraction = mask.as_ref().map(|k| k.count() as f64 / (k.width * k.height).max(1) as f64);
        let containment_violations = match (&before, &after, &mask) {
            (Some(b), Some(a), Some(k)) => ChangeMask::diff(b, a)
                .and_then(|d| k.difference_count(&d.dilate()))
                .map_err(|e| missing.push(format!("dimension mismatch: {e}")))
                .ok(),
            _ => None,
        };
        samples.push(SampleStats {
            path: entry.path.clone(),
            scene_id: m.scene_id,
            change_id: m.change_id,
            condition_index: m.condition_index,
            change_pixel_fraction,
            damaged_fraction: m.damaged_fraction(),
            containment_violations,
            containment_ok: containment_violations == Some(0),
            missing,
        });
    }
    let fractions: Vec<f64> = samples.iter().filter_map(|s| s.change_pixel_fraction).collect();
    Ok(DatasetStats {
        mean_change_pixel_fraction: if fractions.is_empty() {
            0.0
        } else {
            fractions.iter().sum::<f64>() / fractions.len() as f64
        },
        containment_failures: samples.iter().filter(|s| !s.containment_ok).count(),
        missing_files: samples.iter().map(|s| s.missing.len()).sum(),
        samples,
        damaged_fractions,
        alpha_histogram: alpha,
        declination_histogram: decl,
    })
}
