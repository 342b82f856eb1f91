//! Vector map and elevation ingestion.
//!
//! Accepted inputs are an OSM XML subset ([`parse_osm_xml`], tag table in
//! [`osm`]), GeoJSON feature collections ([`parse_geojson`]) and ESRI ASCII
//! elevation grids ([`parse_elevation_grid`]). Everything is projected into a
//! local metric frame with [`project_to_local`]; rings come out
//! counter-clockwise without the closing vertex.

mod error;
pub mod elevation;
pub mod geojson;
pub mod osm;
pub mod projection;
pub mod types;
pub mod validate;

use std::path::Path;

use serde::{Deserialize, Serialize};

pub use elevation::{parse_elevation_grid, serialize_elevation_grid};
pub use error::IngestError;
pub use geojson::{parse_geojson, to_geojson};
pub use osm::parse_osm_xml;
pub use projection::{local_to_geo, project_to_local, EARTH_RADIUS};
pub use types::*;
pub use validate::{drop_unbuildable, validate_map, Finding, FindingKind, Layer, ValidationReport};

/// Defaults applied while parsing.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct IngestOptions {
    /// Height of residential buildings without a `height` tag, meters.
    pub residential_height: f64,
    /// Height of industrial buildings without a `height` tag, meters.
    pub industrial_height: f64,
}

impl Default for IngestOptions {
    fn default() -> Self {
        Self {
            residential_height: 6.0,
            industrial_height: 9.0,
        }
    }
}

impl IngestOptions {
    pub fn default_height(&self, klass: BuildingClass) -> f64 {
        match klass {
            BuildingClass::Residential => self.residential_height,
            BuildingClass::Industrial => self.industrial_height,
        }
    }
}

/// Reads a map file, choosing the parser from the extension
/// (`.geojson`/`.json` for GeoJSON, anything else as OSM XML).
pub fn load_map(path: &Path, opts: &IngestOptions) -> Result<MapDocument, IngestError> {
    let bytes = std::fs::read(path)?;
    match path.extension().and_then(|e| e.to_str()).map(str::to_ascii_lowercase).as_deref() {
        Some("geojson") | Some("json") => parse_geojson(&bytes, opts),
        _ => parse_osm_xml(&bytes, opts),
    }
}

pub fn load_elevation(path: &Path) -> Result<ElevationGrid, IngestError> {
    parse_elevation_grid(&std::fs::read(path)?)
}
