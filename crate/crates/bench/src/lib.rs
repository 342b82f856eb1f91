//! Shared setup for the benchmarks.

use synthcd_core::change_engine::{altitude_for, CameraPose, SunState};
use synthcd_core::fixtures::grid_city;
use synthcd_core::geometry::{assemble_scene, SceneConfig, SceneModel};

/// A fixture city of `n` buildings.
pub fn city_scene(n: usize, seed: u64) -> SceneModel {
    let (doc, grid) = grid_city(n, seed);
    assemble_scene(&doc, &grid, &SceneConfig::default(), seed).expect("fixture city assembles")
}

/// Inclined camera framing the whole scene.
pub fn framing_pose(scene: &SceneModel) -> CameraPose {
    let b = scene.terrain_extent;
    let extent = b.width().max(b.height());
    CameraPose { inclination_alpha: 8.0, azimuth: 30.0, fov: 30.0, look_at: scene.focus, altitude: altitude_for(extent, 30.0) }
}

pub fn afternoon_sun() -> SunState {
    SunState { declination: 55.0, azimuth_plane: 210.0, ambient_fraction: 0.35 }
}
