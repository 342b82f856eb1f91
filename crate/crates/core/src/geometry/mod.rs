//! Procedural scene geometry: terrain, buildings, roofs, damaged footprints,
//! roads and textures.
//!
//! The damaged-footprint texture is a stand-in: a dark ash/char mottle
//! blended with the terrain underneath at shading time.

pub mod building;
pub mod damage;
mod error;
pub mod mesh;
pub mod scene;
pub mod terrain;
pub mod texture;
pub mod triangulate;

pub use building::{build_roof, extrude_building, oriented_box, OrientedBox, Roof, RoofKind, RoofParams};
pub use damage::{build_damaged_footprint, scaled_ring};
pub use error::GeometryError;
pub use mesh::{Aabb3, LayerTag, MaterialId, MaterialSpec, Mesh, TextureKind, Vertex, MIN_TRIANGLE_AREA};
pub use scene::{assemble_scene, build_road, BuildingMeshes, SceneConfig, SceneModel, ROOF_PALETTE};
pub use terrain::{build_terrain, sample_elevation};
pub use texture::procedural_texture;
pub use triangulate::triangulate_polygon;
