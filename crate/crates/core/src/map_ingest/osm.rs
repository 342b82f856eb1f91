//! OSM XML subset reader.
//!
//! Only `<bounds>`, `<node>`, `<way>`, `<nd>` and `<tag>` elements are
//! interpreted; relations and everything else are skipped.
//!
//! | tag                          | result                                  |
//! |------------------------------|-----------------------------------------|
//! | `building=<v>` on closed way | [`BuildingFootprint`], subtag `v`        |
//! | `highway=<v>`                | [`RoadPolyline`], subtag `v`             |
//! | `landuse=<v>` on closed way  | [`LandcoverPolygon`], kind `v`           |
//! | `leisure=park\|garden\|pitch\|playground` | landcover, kind = value     |
//! | `natural=wood\|scrub\|grassland\|heath\|wetland\|water\|sand\|beach` | landcover |
//!
//! `building` wins over `highway`, which wins over landcover. A `height`
//! tag such as `6`, `6.5`, `6 m` or `6m` sets the building height; without
//! it (or when it does not parse to a positive number) the per-class
//! default from [`IngestOptions`] applies.

use std::collections::HashMap;

use quick_xml::events::{BytesStart, Event};
use quick_xml::Reader;

use super::error::{line_column, IngestError};
use super::projection::project_to_local;
use super::types::*;
use super::IngestOptions;

#[derive(Default)]
struct RawWay {
    id: i64,
    refs: Vec<i64>,
    tags: Vec<(String, String)>,
}

impl RawWay {
    fn tag(&self, key: &str) -> Option<&str> {
        self.tags.iter().find(|(k, _)| k == key).map(|(_, v)| v.as_str())
    }
}

const LEISURE_LANDCOVER: &[&str] = &["park", "garden", "pitch", "playground"];
const NATURAL_LANDCOVER: &[&str] = &[
    "wood", "scrub", "grassland", "heath", "wetland", "water", "sand", "beach",
];

pub fn parse_osm_xml(bytes: &[u8], opts: &IngestOptions) -> Result<MapDocument, IngestError> {
    let mut reader = Reader::from_reader(bytes);
    reader.config_mut().check_end_names = true;

    let mut nodes: HashMap<i64, GeoPoint> = HashMap::new();
    let mut node_order: Vec<i64> = Vec::new();
    let mut ways: Vec<RawWay> = Vec::new();
    let mut current: Option<RawWay> = None;
    let mut declared: Option<(GeoPoint, GeoPoint)> = None;
    let mut saw_root = false;

    let xml_err = |reader: &Reader<&[u8]>, message: String| {
        let (line, column) = line_column(bytes, reader.error_position() as usize);
        IngestError::Xml { line, column, message }
    };

    loop {
        let event = reader.read_event().map_err(|e| xml_err(&reader, e.to_string()))?;
        match event {
            Event::Start(ref e) | Event::Empty(ref e) => {
                saw_root = true;
                let self_closing = matches!(event, Event::Empty(_));
                match e.name().as_ref() {
                    b"bounds" => {
                        let attrs = attributes(&reader, e, bytes)?;
                        let get = |k: &str| attrs.get(k).and_then(|v| v.parse::<f64>().ok());
                        if let (Some(a), Some(b), Some(c), Some(d)) =
                            (get("minlon"), get("minlat"), get("maxlon"), get("maxlat"))
                        {
                            declared = Some((GeoPoint::new(a, b), GeoPoint::new(c, d)));
                        }
                    }
                    b"node" => {
                        let attrs = attributes(&reader, e, bytes)?;
                        let id = int_attr(&attrs, "id", &reader, bytes)?;
                        let lon = float_attr(&attrs, "lon", &reader, bytes)?;
                        let lat = float_attr(&attrs, "lat", &reader, bytes)?;
                        let p = GeoPoint::new(lon, lat);
                        if !p.is_valid() {
                            return Err(IngestError::InvalidCoordinate {
                                lon,
                                lat,
                                context: format!("node {id}"),
                            });
                        }
                        if nodes.insert(id, p).is_none() {
                            node_order.push(id);
                        }
                    }
                    b"way" => {
                        let attrs = attributes(&reader, e, bytes)?;
                        let id = int_attr(&attrs, "id", &reader, bytes)?;
                        let way = RawWay { id, ..Default::default() };
                        if self_closing {
                            ways.push(way);
                        } else {
                            current = Some(way);
                        }
                    }
                    b"nd" => {
                        if let Some(way) = current.as_mut() {
                            let attrs = attributes(&reader, e, bytes)?;
                            way.refs.push(int_attr(&attrs, "ref", &reader, bytes)?);
                        }
                    }
                    b"tag" => {
                        if let Some(way) = current.as_mut() {
                            let attrs = attributes(&reader, e, bytes)?;
                            if let (Some(k), Some(v)) = (attrs.get("k"), attrs.get("v")) {
                                way.tags.push((k.clone(), v.clone()));
                            }
                        }
                    }
                    _ => {}
                }
            }
            Event::End(e) => {
                if e.name().as_ref() == b"way" {
                    if let Some(way) = current.take() {
                        ways.push(way);
                    }
                }
            }
            Event::Eof => break,
            _ => {}
        }
    }
    if !saw_root {
        return Err(IngestError::Xml {
            line: 1,
            column: 1,
            message: "document has no root element".into(),
        });
    }

    let origin = match declared {
        Some((lo, hi)) => GeoPoint::new(0.5 * (lo.lon + hi.lon), 0.5 * (lo.lat + hi.lat)),
        None => mean_point(node_order.iter().map(|id| nodes[id])),
    };

    let mut doc = MapDocument {
        buildings: Vec::new(),
        roads: Vec::new(),
        landcover: Vec::new(),
        bounds: Bounds2::empty(),
        origin,
    };

    for way in &ways {
        let mut pts = Vec::with_capacity(way.refs.len());
        for r in &way.refs {
            let g = nodes
                .get(r)
                .ok_or(IngestError::MissingNode { way: way.id, node: *r })?;
            pts.push(project_to_local(*g, origin));
        }
        let closed = way.refs.len() >= 4 && way.refs.first() == way.refs.last();

        if let Some(subtag) = way.tag("building") {
            if !closed {
                log::warn!("way {}: building way is not closed, skipped", way.id);
                continue;
            }
            let ring = normalize_ring(&pts);
            if ring.len() < 3 {
                log::warn!("way {}: building ring has fewer than 3 distinct vertices, skipped", way.id);
                continue;
            }
            let klass = BuildingClass::from_subtag(subtag);
            let height = way
                .tag("height")
                .and_then(parse_height)
                .unwrap_or_else(|| opts.default_height(klass));
            doc.buildings.push(BuildingFootprint {
                id: FeatureId(way.id),
                ring,
                height,
                klass,
                subtag: subtag.to_string(),
            });
        } else if let Some(subtag) = way.tag("highway") {
            let mut points: Vec<LocalPoint> = Vec::with_capacity(pts.len());
            for p in pts {
                if points.last() != Some(&p) {
                    points.push(p);
                }
            }
            if points.len() < 2 {
                log::warn!("way {}: highway has fewer than 2 distinct points, skipped", way.id);
                continue;
            }
            doc.roads.push(RoadPolyline {
                id: FeatureId(way.id),
                points,
                subtag: subtag.to_string(),
            });
        } else if let Some(kind) = landcover_kind(way) {
            if !closed {
                continue;
            }
            let ring = normalize_ring(&pts);
            if ring.len() < 3 {
                continue;
            }
            doc.landcover.push(LandcoverPolygon {
                id: FeatureId(way.id),
                ring,
                kind: kind.to_string(),
            });
        }
    }

    if doc.buildings.is_empty() && doc.roads.is_empty() {
        return Err(IngestError::EmptyMap);
    }

    let mut bounds = doc.geometry_bounds();
    if let Some((lo, hi)) = declared {
        let mut b = Bounds2::empty();
        b.include(project_to_local(lo, origin));
        b.include(project_to_local(hi, origin));
        bounds = bounds.union(&b);
    }
    doc.bounds = bounds;
    Ok(doc)
}

fn landcover_kind(way: &RawWay) -> Option<&str> {
    if let Some(v) = way.tag("landuse") {
        return Some(v);
    }
    if let Some(v) = way.tag("leisure") {
        if LEISURE_LANDCOVER.contains(&v) {
            return Some(v);
        }
    }
    if let Some(v) = way.tag("natural") {
        if NATURAL_LANDCOVER.contains(&v) {
            return Some(v);
        }
    }
    None
}

/// Parses `6`, `6.5`, `6 m`, `6m`; non-positive values are rejected.
pub(crate) fn parse_height(raw: &str) -> Option<f64> {
    let s = raw.trim();
    let s = s.strip_suffix('m').unwrap_or(s).trim_end();
    let h: f64 = s.parse().ok()?;
    (h.is_finite() && h > 0.0).then_some(h)
}

pub(crate) fn mean_point(points: impl Iterator<Item = GeoPoint>) -> GeoPoint {
    let (mut lon, mut lat, mut n) = (0.0, 0.0, 0usize);
    for p in points {
        lon += p.lon;
        lat += p.lat;
        n += 1;
    }
    if n == 0 {
        GeoPoint::new(0.0, 0.0)
    } else {
        GeoPoint::new(lon / n as f64, lat / n as f64)
    }
}

fn attributes(
    reader: &Reader<&[u8]>,
    e: &BytesStart<'_>,
    bytes: &[u8],
) -> Result<HashMap<String, String>, IngestError> {
    let mut out = HashMap::new();
    for attr in e.attributes() {
        let attr = attr.map_err(|err| {
            let (line, column) = line_column(bytes, reader.buffer_position() as usize);
            IngestError::Xml { line, column, message: err.to_string() }
        })?;
        let key = String::from_utf8_lossy(attr.key.as_ref()).into_owned();
        let value = attr
            .unescape_value()
            .map_err(|err| {
                let (line, column) = line_column(bytes, reader.buffer_position() as usize);
                IngestError::Xml { line, column, message: err.to_string() }
            })?
            .into_owned();
        out.insert(key, value);
    }
    Ok(out)
}

fn missing_attr(reader: &Reader<&[u8]>, bytes: &[u8], key: &str) -> IngestError {
    let (line, column) = line_column(bytes, reader.buffer_position() as usize);
    IngestError::Xml {
        line,
        column,
        message: format!("missing or invalid attribute `{key}`"),
    }
}

fn int_attr(
    attrs: &HashMap<String, String>,
    key: &str,
    reader: &Reader<&[u8]>,
    bytes: &[u8],
) -> Result<i64, IngestError> {
    attrs
        .get(key)
        .and_then(|v| v.parse().ok())
        .ok_or_else(|| missing_attr(reader, bytes, key))
}

fn float_attr(
    attrs: &HashMap<String, String>,
    key: &str,
    reader: &Reader<&[u8]>,
    bytes: &[u8],
) -> Result<f64, IngestError> {
    attrs
        .get(key)
        .and_then(|v| v.parse().ok())
        .ok_or_else(|| missing_attr(reader, bytes, key))
}
