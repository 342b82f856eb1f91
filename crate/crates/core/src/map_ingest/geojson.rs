//! GeoJSON FeatureCollection reader and writer.
//!
//! * `Polygon` features carry `properties.kind` = `"building"` or
//!   `"landcover"`. Buildings read `building` (subtag, default `"yes"`) and
//!   `height`; landcover reads `landcover` (default `"unknown"`). Only the
//!   outer ring is used.
//! * `LineString` features are roads with subtag `highway` (default `"road"`).
//! * Feature `id` (integer or integer string) becomes the [`FeatureId`];
//!   features without one are numbered by their index.
//! * The optional top-level members `origin: [lon, lat]` and
//!   `bbox: [minlon, minlat, maxlon, maxlat]` fix the local frame and extend
//!   the document bounds. Without `origin` the mean coordinate is used.

use serde_json::{json, Map, Value};

use super::error::IngestError;
use super::osm::{mean_point, parse_height};
use super::projection::{local_to_geo, project_to_local};
use super::types::*;
use super::IngestOptions;

enum RawGeometry {
    Polygon(Vec<GeoPoint>),
    Line(Vec<GeoPoint>),
}

struct RawFeature {
    index: usize,
    id: i64,
    geometry: RawGeometry,
    properties: Map<String, Value>,
}

pub fn parse_geojson(bytes: &[u8], opts: &IngestOptions) -> Result<MapDocument, IngestError> {
    let root: Value = serde_json::from_slice(bytes).map_err(|e| IngestError::Json {
        line: e.line(),
        column: e.column(),
        message: e.to_string(),
    })?;
    let invalid = |index: usize, reason: &str| IngestError::InvalidFeature {
        index,
        reason: reason.to_string(),
    };

    if root.get("type").and_then(Value::as_str) != Some("FeatureCollection") {
        return Err(IngestError::Json {
            line: 1,
            column: 1,
            message: "top-level object is not a FeatureCollection".into(),
        });
    }
    let features = root
        .get("features")
        .and_then(Value::as_array)
        .ok_or_else(|| IngestError::Json {
            line: 1,
            column: 1,
            message: "FeatureCollection has no `features` array".into(),
        })?;

    let mut raw = Vec::with_capacity(features.len());
    for (index, f) in features.iter().enumerate() {
        let geometry = f.get("geometry").ok_or_else(|| invalid(index, "missing geometry"))?;
        let kind = geometry
            .get("type")
            .and_then(Value::as_str)
            .ok_or_else(|| invalid(index, "geometry without type"))?;
        let coords = geometry.get("coordinates");
        let geometry = match kind {
            "Polygon" => {
                let outer = coords
                    .and_then(Value::as_array)
                    .and_then(|rings| rings.first())
                    .ok_or_else(|| invalid(index, "polygon without rings"))?;
                RawGeometry::Polygon(positions(outer, index)?)
            }
            "LineString" => RawGeometry::Line(positions(
                coords.ok_or_else(|| invalid(index, "line without coordinates"))?,
                index,
            )?),
            other => {
                return Err(IngestError::UnsupportedGeometry {
                    index,
                    kind: other.to_string(),
                })
            }
        };
        let id = match f.get("id") {
            Some(Value::Number(n)) => n.as_i64().ok_or_else(|| invalid(index, "non-integer id"))?,
            Some(Value::String(s)) => s.parse().map_err(|_| invalid(index, "non-integer id"))?,
            _ => index as i64,
        };
        let properties = f
            .get("properties")
            .and_then(Value::as_object)
            .cloned()
            .unwrap_or_default();
        raw.push(RawFeature { index, id, geometry, properties });
    }

    let origin = match root.get("origin").and_then(Value::as_array) {
        Some(o) if o.len() == 2 => {
            let p = GeoPoint::new(
                o[0].as_f64().unwrap_or(f64::NAN),
                o[1].as_f64().unwrap_or(f64::NAN),
            );
            if !p.is_valid() {
                return Err(IngestError::InvalidCoordinate {
                    lon: p.lon,
                    lat: p.lat,
                    context: "origin".into(),
                });
            }
            p
        }
        _ => mean_point(raw.iter().flat_map(|f| match &f.geometry {
            RawGeometry::Polygon(p) | RawGeometry::Line(p) => p.iter().copied(),
        })),
    };

    let mut doc = MapDocument {
        buildings: Vec::new(),
        roads: Vec::new(),
        landcover: Vec::new(),
        bounds: Bounds2::empty(),
        origin,
    };

    for f in raw {
        let prop_str = |key: &str| f.properties.get(key).and_then(Value::as_str);
        match f.geometry {
            RawGeometry::Polygon(pts) => {
                let local: Vec<LocalPoint> = pts.iter().map(|g| project_to_local(*g, origin)).collect();
                let ring = normalize_ring(&local);
                if ring.len() < 3 {
                    return Err(invalid(f.index, "ring has fewer than 3 distinct vertices"));
                }
                match prop_str("kind") {
                    Some("building") => {
                        let subtag = prop_str("building").unwrap_or("yes").to_string();
                        let klass = BuildingClass::from_subtag(&subtag);
                        let height = match f.properties.get("height") {
                            Some(Value::Number(n)) => n.as_f64().filter(|h| *h > 0.0),
                            Some(Value::String(s)) => parse_height(s),
                            _ => None,
                        }
                        .unwrap_or_else(|| opts.default_height(klass));
                        doc.buildings.push(BuildingFootprint {
                            id: FeatureId(f.id),
                            ring,
                            height,
                            klass,
                            subtag,
                        });
                    }
                    Some("landcover") => doc.landcover.push(LandcoverPolygon {
                        id: FeatureId(f.id),
                        ring,
                        kind: prop_str("landcover").unwrap_or("unknown").to_string(),
                    }),
                    _ => {
                        return Err(invalid(
                            f.index,
                            "polygon property `kind` must be \"building\" or \"landcover\"",
                        ))
                    }
                }
            }
            RawGeometry::Line(pts) => {
                let mut points: Vec<LocalPoint> = Vec::with_capacity(pts.len());
                for p in pts.iter().map(|g| project_to_local(*g, origin)) {
                    if points.last() != Some(&p) {
                        points.push(p);
                    }
                }
                if points.len() < 2 {
                    return Err(invalid(f.index, "line has fewer than 2 distinct points"));
                }
                doc.roads.push(RoadPolyline {
                    id: FeatureId(f.id),
                    points,
                    subtag: prop_str("highway").unwrap_or("road").to_string(),
                });
            }
        }
    }

    if doc.buildings.is_empty() && doc.roads.is_empty() {
        return Err(IngestError::EmptyMap);
    }

    let mut bounds = doc.geometry_bounds();
    if let Some(b) = root.get("bbox").and_then(Value::as_array) {
        let v: Vec<f64> = b.iter().filter_map(Value::as_f64).collect();
        if v.len() == 4 {
            let mut declared = Bounds2::empty();
            declared.include(project_to_local(GeoPoint::new(v[0], v[1]), origin));
            declared.include(project_to_local(GeoPoint::new(v[2], v[3]), origin));
            bounds = bounds.union(&declared);
        }
    }
    doc.bounds = bounds;
    Ok(doc)
}

fn positions(value: &Value, index: usize) -> Result<Vec<GeoPoint>, IngestError> {
    let bad = || IngestError::InvalidFeature {
        index,
        reason: "coordinates must be [lon, lat] pairs".into(),
    };
    let arr = value.as_array().ok_or_else(bad)?;
    let mut out = Vec::with_capacity(arr.len());
    for pos in arr {
        let pos = pos.as_array().ok_or_else(bad)?;
        if pos.len() < 2 {
            return Err(bad());
        }
        let p = GeoPoint::new(pos[0].as_f64().ok_or_else(bad)?, pos[1].as_f64().ok_or_else(bad)?);
        if !p.is_valid() {
            return Err(IngestError::InvalidCoordinate {
                lon: p.lon,
                lat: p.lat,
                context: format!("feature {index}"),
            });
        }
        out.push(p);
    }
    Ok(out)
}

fn geo_pair(p: LocalPoint, origin: GeoPoint) -> Value {
    let g = local_to_geo(p, origin);
    json!([g.lon, g.lat])
}

fn closed_ring(ring: &[LocalPoint], origin: GeoPoint) -> Value {
    let mut coords: Vec<Value> = ring.iter().map(|p| geo_pair(*p, origin)).collect();
    if let Some(first) = ring.first() {
        coords.push(geo_pair(*first, origin));
    }
    Value::Array(coords)
}

/// Writes `doc` in the format read by [`parse_geojson`].
pub fn to_geojson(doc: &MapDocument) -> String {
    let o = doc.origin;
    let mut features = Vec::new();
    for b in &doc.buildings {
        features.push(json!({
            "type": "Feature",
            "id": b.id.0,
            "geometry": { "type": "Polygon", "coordinates": [closed_ring(&b.ring, o)] },
            "properties": { "kind": "building", "building": b.subtag, "height": b.height },
        }));
    }
    for l in &doc.landcover {
        features.push(json!({
            "type": "Feature",
            "id": l.id.0,
            "geometry": { "type": "Polygon", "coordinates": [closed_ring(&l.ring, o)] },
            "properties": { "kind": "landcover", "landcover": l.kind },
        }));
    }
    for r in &doc.roads {
        let coords: Vec<Value> = r.points.iter().map(|p| geo_pair(*p, o)).collect();
        features.push(json!({
            "type": "Feature",
            "id": r.id.0,
            "geometry": { "type": "LineString", "coordinates": coords },
            "properties": { "highway": r.subtag },
        }));
    }
    let mut root = json!({
        "type": "FeatureCollection",
        "origin": [o.lon, o.lat],
        "features": features,
    });
    if !doc.bounds.is_empty() {
        let lo = local_to_geo(doc.bounds.min, o);
        let hi = local_to_geo(doc.bounds.max, o);
        root["bbox"] = json!([lo.lon, lo.lat, hi.lon, hi.lat]);
    }
    serde_json::to_string_pretty(&root).expect("GeoJSON values always serialize")
}
