//! Pixel-level change-detection scores.
//!
//! Both-empty pairs score 1.0 on every metric. Other zero denominators give 0.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use thiserror::Error;
use walkdir::WalkDir;

use crate::renderer::{ChangeMask, GrayImage, ImageError};

pub type BinaryMask = ChangeMask;

#[derive(Debug, Error)]
pub enum MetricsError {
    #[error("dimension mismatch: {0}x{1} vs {2}x{3}")]
    Dimensions(usize, usize, usize, usize),
    #[error("threshold {0} outside [0, 1]")]
    Threshold(f64),
    #[error("confidence value {value} at index {index} outside [0, 1]")]
    Confidence { index: usize, value: f64 },
    #[error("{0}")]
    Image(#[from] ImageError),
    #[error("{}: {message}", path.display())]
    Files { path: PathBuf, message: String },
    #[error("{0}")]
    Csv(#[from] csv::Error),
}

/// Row-major per-pixel change confidence in `[0, 1]`.
#[derive(Clone, Debug, PartialEq)]
pub struct ConfidenceMap {
    width: usize,
    height: usize,
    values: Vec<f64>,
}

impl ConfidenceMap {
    pub fn new(width: usize, height: usize, values: Vec<f64>) -> Result<Self, MetricsError> {
        if values.len() != width * height {
            return Err(MetricsError::Dimensions(width, height, values.len(), 1));
        }
        if let Some((index, &value)) = values.iter().enumerate().find(|(_, v)| !(0.0..=1.0).contains(*v)) {
            return Err(MetricsError::Confidence { index, value });
        }
        Ok(Self { width, height, values })
    }

    /// 8-bit gray levels mapped to `level / 255`.
    pub fn from_gray(img: &GrayImage) -> Self {
        Self {
            width: img.width,
            height: img.height,
            values: img.values.iter().map(|&v| v as f64 / 255.0).collect(),
        }
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }
}

/// Sets a bit where the confidence is at least `threshold`.
pub fn binarize(c: &ConfidenceMap, threshold: f64) -> Result<BinaryMask, MetricsError> {
    if !(0.0..=1.0).contains(&threshold) {
        return Err(MetricsError::Threshold(threshold));
    }
    Ok(ChangeMask::from_fn(c.width, c.height, |x, y| c.values[y * c.width + x] >= threshold))
}

/// Confusion counts of `pred` against `gt`.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Confusion {
    pub tp: u64,
    pub fp: u64,
    pub fn_: u64,
}

impl Confusion {
    pub fn of(pred: &BinaryMask, gt: &BinaryMask) -> Result<Self, MetricsError> {
        if (pred.width, pred.height) != (gt.width, gt.height) {
            return Err(MetricsError::Dimensions(pred.width, pred.height, gt.width, gt.height));
        }
        let mut c = Confusion::default();
        for (p, g) in pred.words().iter().zip(gt.words()) {
            c.tp += (p & g).count_ones() as u64;
            c.fp += (p & !g).count_ones() as u64;
            c.fn_ += (!p & g).count_ones() as u64;
        }
        Ok(c)
    }

    pub fn add(&mut self, other: &Confusion) {
        self.tp += other.tp;
        self.fp += other.fp;
        self.fn_ += other.fn_;
    }

    fn both_empty(&self) -> bool {
        self.tp + self.fp + self.fn_ == 0
    }

    pub fn iou(&self) -> f64 {
        if self.both_empty() {
            return 1.0;
        }
        self.tp as f64 / (self.tp + self.fp + self.fn_) as f64
    }

    pub fn scores(&self) -> Scores {
        if self.both_empty() {
            return Scores { precision: 1.0, recall: 1.0, f1: 1.0 };
        }
        let ratio = |n: u64, d: u64| if d == 0 { 0.0 } else { n as f64 / d as f64 };
        let precision = ratio(self.tp, self.tp + self.fp);
        let recall = ratio(self.tp, self.tp + self.fn_);
        let f1 = if precision + recall == 0.0 { 0.0 } else { 2.0 * precision * recall / (precision + recall) };
        Scores { precision, recall, f1 }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Scores {
    pub precision: f64,
    pub recall: f64,
    /// Harmonic mean of precision and recall.
    pub f1: f64,
}

pub fn iou(a: &BinaryMask, b: &BinaryMask) -> Result<f64, MetricsError> {
    Ok(Confusion::of(a, b)?.iou())
}

pub fn precision_recall_f1(pred: &BinaryMask, gt: &BinaryMask) -> Result<(f64, f64, f64), MetricsError> {
    let s = Confusion::of(pred, gt)?.scores();
    Ok((s.precision, s.recall, s.f1))
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EvalRow {
    /// Path relative to the ground-truth directory.
    pub name: String,
    #[serde(flatten)]
    pub counts: Confusion,
    pub iou: f64,
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
}

impl EvalRow {
    fn new(name: String, counts: Confusion) -> Self {
        let s = counts.scores();
        Self { name, counts, iou: counts.iou(), precision: s.precision, recall: s.recall, f1: s.f1 }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub threshold: f64,
    pub rows: Vec<EvalRow>,
    /// Scores of the summed confusion counts.
    pub micro: EvalRow,
    /// Unweighted means of the per-sample scores.
    pub macro_: EvalRow,
}

impl EvalReport {
    pub fn from_rows(threshold: f64, rows: Vec<EvalRow>) -> Self {
        let mut total = Confusion::default();
        for r in &rows {
            total.add(&r.counts);
        }
        let n = rows.len().max(1) as f64;
        let mean = |f: fn(&EvalRow) -> f64| rows.iter().map(f).sum::<f64>() / n;
        let macro_ = EvalRow {
            name: "macro".into(),
            counts: total,
            iou: mean(|r| r.iou),
            precision: mean(|r| r.precision),
            recall: mean(|r| r.recall),
            f1: mean(|r| r.f1),
        };
        Self { threshold, micro: EvalRow::new("micro".into(), total), macro_, rows }
    }

    /// Per-sample rows followed by the `micro` and `macro` aggregates.
    pub fn to_csv(&self) -> Result<String, MetricsError> {
        let mut w = csv::Writer::from_writer(Vec::new());
        w.write_record(["name", "tp", "fp", "fn", "iou", "precision", "recall", "f1"])?;
        for r in self.rows.iter().chain([&self.micro, &self.macro_]) {
            w.write_record([
                r.name.clone(),
                r.counts.tp.to_string(),
                r.counts.fp.to_string(),
                r.counts.fn_.to_string(),
                format!("{:.6}", r.iou),
                format!("{:.6}", r.precision),
                format!("{:.6}", r.recall),
                format!("{:.6}", r.f1),
            ])?;
        }
        let bytes = w.into_inner().map_err(|e| MetricsError::Csv(e.into_error().into()))?;
        Ok(String::from_utf8(bytes).expect("csv output is utf-8"))
    }
}

fn png_files(dir: &Path) -> Result<Vec<String>, MetricsError> {
    let mut out = Vec::new();
    for e in WalkDir::new(dir).sort_by_file_name() {
        let e = e.map_err(|err| MetricsError::Files { path: dir.to_path_buf(), message: err.to_string() })?;
        let p = e.path();
        if e.file_type().is_file() && p.extension().is_some_and(|x| x.eq_ignore_ascii_case("png")) {
            let rel = p.strip_prefix(dir).expect("walk stays under root");
            out.push(rel.components().map(|c| c.as_os_str().to_string_lossy()).collect::<Vec<_>>().join("/"));
        }
    }
    Ok(out)
}

/// Scores every ground-truth PNG under `gt_dir` against the confidence PNG
/// at the same relative path under `pred_dir`.
pub fn evaluate_dirs(pred_dir: &Path, gt_dir: &Path, threshold: f64) -> Result<EvalReport, MetricsError> {
    if !(0.0..=1.0).contains(&threshold) {
        return Err(MetricsError::Threshold(threshold));
    }
    let names = png_files(gt_dir)?;
    if names.is_empty() {
        return Err(MetricsError::Files { path: gt_dir.to_path_buf(), message: "no PNG masks found".into() });
    }
    let mut rows = Vec::with_capacity(names.len());
    for name in names {
        let pred_path = pred_dir.join(&name);
        if !pred_path.is_file() {
            return Err(MetricsError::Files { path: pred_path, message: "prediction missing".into() });
        }
        let gt = ChangeMask::read_png(&gt_dir.join(&name))?;
        let pred = binarize(&ConfidenceMap::from_gray(&GrayImage::read_png(&pred_path)?), threshold)?;
        rows.push(EvalRow::new(name, Confusion::of(&pred, &gt)?));
    }
    Ok(EvalReport::from_rows(threshold, rows))
}
