//! Procedural synthesis of territory-specific change-detection datasets.
//!
//! The crate turns vector map data plus an elevation raster into a textured
//! 3D scene, removes a random subset of buildings (replacing them with
//! damaged footprints), and renders co-registered before/after image pairs
//! with pixel-exact change masks under varied camera and Sun conditions.
//!
//! Module map:
//!
//! * [`map_ingest`] parses OSM XML, GeoJSON and ESRI ASCII grids.
//! * [`geometry`] builds terrain, extruded buildings, roofs, damaged
//!   footprints and procedural textures into a [`geometry::SceneModel`].
//! * [`change_engine`] samples change sets and acquisition conditions and
//!   assigns meshes to render layers.
//! * [`renderer`] is a deterministic tiled software rasterizer with shadow
//!   mapping and supersampling.
//! * [`pipeline`] drives dataset generation, patch tiling and QA stats.
//! * [`metrics`] scores predicted masks against ground truth.

pub mod change_engine;
pub mod fixtures;
pub mod geometry;
pub mod map_ingest;
pub mod metrics;
pub mod pipeline;
pub mod renderer;
pub mod planar;
pub mod rng;

pub use change_engine::{AcquisitionCondition, CameraPose, ChangeSet, SunState};
pub use geometry::{Mesh, SceneModel};
pub use map_ingest::{ElevationGrid, GeoPoint, LocalPoint, MapDocument};
pub use metrics::BinaryMask;
pub use pipeline::{GenerationConfig, Manifest};
pub use renderer::{ChangeMask, Image, RenderConfig};

/// Version string recorded in every sample's metadata.
pub const GENERATOR_VERSION: &str = concat!("synthcd/", env!("CARGO_PKG_VERSION"));
