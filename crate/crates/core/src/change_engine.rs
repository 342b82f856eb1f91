//! Target change sets, acquisition conditions and render layers.
//!
//! Every sampler is a pure function of its explicit seed. Conditions draw
//! from one stream per condition index, and each stream always consumes the
//! same number of values, so toggling optional jitter never shifts the
//! draws of other fields.

use std::collections::BTreeSet;

use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::geometry::{Mesh, SceneModel};
use crate::map_ingest::FeatureId;
use crate::rng::{derive_seed, stream, uniform};

/// Hard cap on camera inclination from the zenith, degrees.
pub const MAX_INCLINATION: f64 = 25.0;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ChangeError {
    #[error("scene has no buildings to change")]
    EmptyScene,
    #[error("invalid change fraction range [{lo}, {hi}]: need 0 < lo <= hi < 1")]
    InvalidFractionRange { lo: f64, hi: f64 },
    #[error("invalid inclination range [{lo}, {hi}]: need 0 <= lo <= hi <= {MAX_INCLINATION}")]
    InclinationCap { lo: f64, hi: f64 },
    #[error("invalid declination range [{lo}, {hi}]: need 0 <= lo <= hi <= 180")]
    InvalidDeclinationRange { lo: f64, hi: f64 },
    #[error("condition count must be at least 1")]
    NoConditions,
    #[error("invalid field of view {0} degrees")]
    InvalidFov(f64),
    #[error("change set references building {0}, which is not in the scene")]
    UnknownBuilding(FeatureId),
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ChangeSet {
    pub damaged_ids: BTreeSet<FeatureId>,
    pub fraction_requested: f64,
    pub seed: u64,
}

impl ChangeSet {
    pub fn empty(seed: u64) -> Self {
        Self { damaged_ids: BTreeSet::new(), fraction_requested: 0.0, seed }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SunState {
    /// Position along the Sun's arc, degrees; 90 is overhead.
    pub declination: f64,
    /// Orientation of the arc plane, degrees counter-clockwise from +x.
    pub azimuth_plane: f64,
    pub ambient_fraction: f64,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct CameraPose {
    /// Angle between the view axis and the zenith, degrees.
    pub inclination_alpha: f64,
    /// Direction of the camera offset, degrees counter-clockwise from +x.
    pub azimuth: f64,
    /// Vertical field of view, degrees.
    pub fov: f64,
    pub look_at: [f64; 3],
    /// Distance from `look_at` to the eye, meters.
    pub altitude: f64,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct AcquisitionCondition {
    pub camera: CameraPose,
    pub sun: SunState,
    pub index: usize,
}

/// What the camera must cover: a ground square of side `ground_extent`
/// (meters, along the image's vertical axis) centered on `center`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ViewFrame {
    pub center: [f64; 3],
    pub ground_extent: f64,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ConditionOptions {
    pub fov: f64,
    /// Half-width of the uniform field-of-view jitter, degrees (0 = off).
    pub fov_jitter: f64,
    /// Half-width of the uniform jitter added to the four base azimuths.
    pub azimuth_jitter: f64,
    pub ambient_fraction: f64,
}

impl Default for ConditionOptions {
    fn default() -> Self {
        Self { fov: 30.0, fov_jitter: 0.0, azimuth_jitter: 15.0, ambient_fraction: 0.35 }
    }
}

/// Picks `floor(f·N + 0.5)` buildings, `f ~ U[lo, hi]`, by a seeded shuffle
/// of the id-sorted building list.
pub fn sample_change_set(scene: &SceneModel, range: (f64, f64), seed: u64) -> Result<ChangeSet, ChangeError> {
    let (lo, hi) = range;
    if !(lo > 0.0 && lo <= hi && hi < 1.0) {
        return Err(ChangeError::InvalidFractionRange { lo, hi });
    }
    let mut ids = scene.building_ids();
    if ids.is_empty() {
        return Err(ChangeError::EmptyScene);
    }
    let mut rng = stream(seed);
    let fraction = uniform(&mut rng, lo, hi);
    ids.shuffle(&mut rng);
    let count = (fraction * ids.len() as f64 + 0.5).floor() as usize;
    Ok(ChangeSet {
        damaged_ids: ids.into_iter().take(count).collect(),
        fraction_requested: fraction,
        seed,
    })
}

/// Altitude at which a camera with vertical field of view `fov` sees a
/// ground extent of `extent` meters.
pub fn altitude_for(extent: f64, fov: f64) -> f64 {
    0.5 * extent / (0.5 * fov.to_radians()).tan()
}

/// Condition 0 is a zenith view; condition `k ≥ 1` is inclined by
/// `α ~ U[alpha_range]` towards azimuth `90°·((k−1) mod 4)` plus jitter.
/// Every condition draws its own declination and arc plane.
pub fn sample_conditions(
    m: usize,
    alpha_range: (f64, f64),
    decl_range: (f64, f64),
    frame: &ViewFrame,
    opts: &ConditionOptions,
    seed: u64,
) -> Result<Vec<AcquisitionCondition>, ChangeError> {
    validate_condition_params(m, alpha_range, decl_range, opts)?;
    Ok((0..m)
        .map(|k| {
            let mut rng = stream(derive_seed(seed, k as u64));
            let alpha = uniform(&mut rng, alpha_range.0, alpha_range.1);
            let jitter = uniform(&mut rng, -opts.azimuth_jitter, opts.azimuth_jitter);
            let fov_delta = uniform(&mut rng, -opts.fov_jitter, opts.fov_jitter);
            let declination = uniform(&mut rng, decl_range.0, decl_range.1);
            let plane = uniform(&mut rng, 0.0, 360.0) % 360.0;
            let (alpha, azimuth) = if k == 0 {
                (0.0, 0.0)
            } else {
                (alpha, (90.0 * ((k - 1) % 4) as f64 + jitter).rem_euclid(360.0))
            };
            let fov = opts.fov + fov_delta;
            AcquisitionCondition {
                camera: CameraPose {
                    inclination_alpha: alpha,
                    azimuth,
                    fov,
                    look_at: frame.center,
                    altitude: altitude_for(frame.ground_extent, fov),
                },
                sun: SunState { declination, azimuth_plane: plane, ambient_fraction: opts.ambient_fraction },
                index: k,
            }
        })
        .collect())
}

pub fn validate_condition_params(
    m: usize,
    alpha_range: (f64, f64),
    decl_range: (f64, f64),
    opts: &ConditionOptions,
) -> Result<(), ChangeError> {
    if m == 0 {
        return Err(ChangeError::NoConditions);
    }
    let (lo, hi) = alpha_range;
    if !(lo >= 0.0 && lo <= hi && hi <= MAX_INCLINATION) {
        return Err(ChangeError::InclinationCap { lo, hi });
    }
    let (lo, hi) = decl_range;
    if !(lo >= 0.0 && lo <= hi && hi <= 180.0) {
        return Err(ChangeError::InvalidDeclinationRange { lo, hi });
    }
    let j = opts.fov_jitter.abs();
    if !(opts.fov - j > 0.0 && opts.fov + j < 180.0) {
        return Err(ChangeError::InvalidFov(opts.fov));
    }
    Ok(())
}

/// Unit vector from the scene towards the Sun.
pub fn sun_direction(sun: &SunState) -> [f64; 3] {
    let (st, ct) = sun.declination.to_radians().sin_cos();
    let (sp, cp) = sun.azimuth_plane.to_radians().sin_cos();
    [ct * cp, ct * sp, st]
}

/// Meshes per render pass. `before` holds every intact building, `after`
/// swaps changed buildings for their damaged footprints, `annotation` holds
/// those footprints alone.
#[derive(Clone, Debug)]
pub struct LayeredScene<'a> {
    pub before: Vec<&'a Mesh>,
    pub after: Vec<&'a Mesh>,
    pub annotation: Vec<&'a Mesh>,
    /// Buildings rendered intact in the after pass.
    pub intact_ids: Vec<FeatureId>,
    /// Buildings replaced by damaged footprints in the after pass.
    pub damaged_ids: Vec<FeatureId>,
}

pub fn assign_layers<'a>(scene: &'a SceneModel, cs: &ChangeSet) -> Result<LayeredScene<'a>, ChangeError> {
    if let Some(id) = cs.damaged_ids.iter().find(|id| !scene.buildings.contains_key(id)) {
        return Err(ChangeError::UnknownBuilding(*id));
    }
    let mut base: Vec<&Mesh> = vec![&scene.terrain];
    base.extend(scene.roads.iter());
    let mut before = base.clone();
    let mut after = base;
    let mut annotation = Vec::new();
    let (mut intact_ids, mut damaged_ids) = (Vec::new(), Vec::new());
    for (id, b) in &scene.buildings {
        before.push(&b.body);
        before.push(&b.roof);
        if cs.damaged_ids.contains(id) {
            let patch = &scene.damaged[id];
            after.push(patch);
            annotation.push(patch);
            damaged_ids.push(*id);
        } else {
            after.push(&b.body);
            after.push(&b.roof);
            intact_ids.push(*id);
        }
    }
    Ok(LayeredScene { before, after, annotation, intact_ids, damaged_ids })
}
