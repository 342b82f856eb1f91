use std::collections::BTreeMap;
use std::fmt;

use serde::Serialize;

use super::types::*;
use crate::planar::ring_is_simple;

/// Rings smaller than this are reported as degenerate.
pub const MIN_RING_AREA: f64 = 1.0;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Layer {
    Building,
    Road,
    Landcover,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum FindingKind {
    SelfIntersection,
    Degenerate,
    OutOfBounds,
    DuplicateId,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Finding {
    pub layer: Layer,
    pub id: FeatureId,
    pub kind: FindingKind,
    pub detail: String,
}

impl fmt::Display for Finding {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{:?} {}: {:?} ({})", self.layer, self.id, self.kind, self.detail)
    }
}

#[derive(Clone, Debug, Default, PartialEq, Serialize)]
pub struct ValidationReport {
    pub findings: Vec<Finding>,
}

impl ValidationReport {
    pub fn is_empty(&self) -> bool {
        self.findings.is_empty()
    }

    pub fn count(&self, kind: FindingKind) -> usize {
        self.findings.iter().filter(|f| f.kind == kind).count()
    }

    /// Whether the feature has a finding that makes it unusable for geometry
    /// generation (duplicates and out-of-bounds are tolerated).
    pub fn is_unbuildable(&self, layer: Layer, id: FeatureId) -> bool {
        self.findings.iter().any(|f| {
            f.layer == layer
                && f.id == id
                && matches!(f.kind, FindingKind::SelfIntersection | FindingKind::Degenerate)
        })
    }
}

fn check_ring(
    report: &mut ValidationReport,
    layer: Layer,
    id: FeatureId,
    ring: &[LocalPoint],
    bounds: &Bounds2,
) {
    let mut distinct: Vec<LocalPoint> = Vec::new();
    for p in ring {
        if !distinct.contains(p) {
            distinct.push(*p);
        }
    }
    let area = signed_area(ring).abs();
    if distinct.len() < 3 {
        report.findings.push(Finding {
            layer,
            id,
            kind: FindingKind::Degenerate,
            detail: format!("{} distinct vertices", distinct.len()),
        });
    } else if !ring_is_simple(ring) {
        report.findings.push(Finding {
            layer,
            id,
            kind: FindingKind::SelfIntersection,
            detail: "ring edges cross or touch".into(),
        });
    } else if area < MIN_RING_AREA {
        report.findings.push(Finding {
            layer,
            id,
            kind: FindingKind::Degenerate,
            detail: format!("area {area:.3} m² below {MIN_RING_AREA} m²"),
        });
    }
    if ring.iter().any(|p| !bounds.contains(*p)) {
        report.findings.push(Finding {
            layer,
            id,
            kind: FindingKind::OutOfBounds,
            detail: "vertex outside document bounds".into(),
        });
    }
}

fn duplicates<'a>(report: &mut ValidationReport, layer: Layer, ids: impl Iterator<Item = &'a FeatureId>) {
    let mut counts: BTreeMap<FeatureId, usize> = BTreeMap::new();
    for id in ids {
        *counts.entry(*id).or_default() += 1;
    }
    for (id, n) in counts {
        if n > 1 {
            report.findings.push(Finding {
                layer,
                id,
                kind: FindingKind::DuplicateId,
                detail: format!("{n} features share this id"),
            });
        }
    }
}

/// Lists geometric and identity problems without modifying `doc`.
pub fn validate_map(doc: &MapDocument) -> ValidationReport {
    let mut report = ValidationReport::default();
    for b in &doc.buildings {
        check_ring(&mut report, Layer::Building, b.id, &b.ring, &doc.bounds);
        if !(b.height.is_finite() && b.height > 0.0) {
            report.findings.push(Finding {
                layer: Layer::Building,
                id: b.id,
                kind: FindingKind::Degenerate,
                detail: format!("non-positive height {}", b.height),
            });
        }
    }
    for l in &doc.landcover {
        check_ring(&mut report, Layer::Landcover, l.id, &l.ring, &doc.bounds);
    }
    for r in &doc.roads {
        let repeated = r.points.windows(2).any(|w| w[0] == w[1]);
        if r.points.len() < 2 || repeated {
            report.findings.push(Finding {
                layer: Layer::Road,
                id: r.id,
                kind: FindingKind::Degenerate,
                detail: format!("{} points, repeated consecutive point: {repeated}", r.points.len()),
            });
        }
        if r.points.iter().any(|p| !doc.bounds.contains(*p)) {
            report.findings.push(Finding {
                layer: Layer::Road,
                id: r.id,
                kind: FindingKind::OutOfBounds,
                detail: "point outside document bounds".into(),
            });
        }
    }
    duplicates(&mut report, Layer::Building, doc.buildings.iter().map(|b| &b.id));
    duplicates(&mut report, Layer::Road, doc.roads.iter().map(|r| &r.id));
    duplicates(&mut report, Layer::Landcover, doc.landcover.iter().map(|l| &l.id));
    report
}

/// Copy of `doc` without the features that cannot be turned into geometry.
pub fn drop_unbuildable(doc: &MapDocument, report: &ValidationReport) -> MapDocument {
    let mut out = doc.clone();
    out.buildings.retain(|b| !report.is_unbuildable(Layer::Building, b.id));
    out.roads.retain(|r| !report.is_unbuildable(Layer::Road, r.id));
    out.landcover.retain(|l| !report.is_unbuildable(Layer::Landcover, l.id));
    // Keep the first feature of each duplicated id.
    let mut seen = std::collections::HashSet::new();
    out.buildings.retain(|b| seen.insert(b.id));
    out
}
