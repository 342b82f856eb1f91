use std::fs;
use std::path::{Path, PathBuf};

use log::{info, warn};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use super::config::{GenerationConfig, ShadowMode};
use super::PipelineError;
use crate::change_engine::{
    altitude_for, sample_change_set, sample_conditions, AcquisitionCondition, CameraPose, ChangeSet, SunState,
    ViewFrame,
};
use crate::geometry::{assemble_scene, SceneModel};
use crate::map_ingest::{
    drop_unbuildable, load_elevation, load_map, validate_map, ElevationGrid, FeatureId, MapDocument,
};
use crate::renderer::{render_after, render_before, ChangeMask, Image, ImageError};
use crate::rng::{derive_seed, stream, uniform};
use crate::GENERATOR_VERSION;

pub const MANIFEST_FILE: &str = "manifest.json";
pub const DATASET_DIR: &str = "dataset";
pub const COMPLETE_MARKER: &str = ".complete";
pub const BEFORE_FILE: &str = "before.png";
pub const AFTER_FILE: &str = "after.png";
pub const MASK_FILE: &str = "mask.png";
pub const META_FILE: &str = "meta.json";

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct RenderSettings {
    pub msaa: usize,
    pub shadows: ShadowMode,
    pub shadow_map_size: usize,
}

/// Everything needed to reproduce one sample.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SampleMetadata {
    pub scene_id: usize,
    pub change_id: usize,
    pub change_seed: u64,
    pub condition_index: usize,
    /// Camera and Sun of the after image and the mask.
    pub camera: CameraPose,
    pub sun: SunState,
    /// Camera and Sun of the before image.
    pub before_camera: CameraPose,
    pub before_sun: SunState,
    pub damaged_ids: Vec<FeatureId>,
    pub fraction_requested: f64,
    pub building_count: usize,
    /// Meters per pixel at the look-at point.
    pub gsd: f64,
    pub width: usize,
    pub height: usize,
    pub render: RenderSettings,
    pub generator_version: String,
}

impl SampleMetadata {
    /// Canonical file bytes: pretty JSON plus a trailing newline.
    pub fn to_bytes(&self) -> Vec<u8> {
        let mut v = serde_json::to_vec_pretty(self).expect("metadata serializes");
        v.push(b'\n');
        v
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<Self, serde_json::Error> {
        serde_json::from_slice(bytes)
    }

    pub fn damaged_fraction(&self) -> f64 {
        if self.building_count == 0 {
            0.0
        } else {
            self.damaged_ids.len() as f64 / self.building_count as f64
        }
    }
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    Sha256::digest(bytes).iter().map(|b| format!("{b:02x}")).collect()
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ManifestEntry {
    /// Sample directory relative to the manifest, `/`-separated.
    pub path: String,
    pub meta_sha256: String,
    pub meta: SampleMetadata,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct SampleError {
    pub scene_id: usize,
    pub change_id: usize,
    pub condition_index: usize,
    pub message: String,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Manifest {
    pub generator_version: String,
    pub master_seed: u64,
    pub samples: Vec<ManifestEntry>,
    pub errors: Vec<SampleError>,
}

impl Manifest {
    pub fn load(path: &Path) -> Result<Manifest, PipelineError> {
        let bytes = fs::read(path).map_err(|e| PipelineError::Input(format!("{}: {e}", path.display())))?;
        serde_json::from_slice(&bytes).map_err(|e| PipelineError::Json(path.display().to_string(), e.to_string()))
    }

    pub fn to_bytes(&self) -> Vec<u8> {
        let mut v = serde_json::to_vec_pretty(self).expect("manifest serializes");
        v.push(b'\n');
        v
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct GenerationOutcome {
    pub manifest: Manifest,
    pub manifest_path: PathBuf,
    pub rendered: usize,
    pub skipped: usize,
}

/// Loads the configured inputs, dropping unbuildable buildings with a
/// warning per finding.
pub fn load_inputs(cfg: &GenerationConfig) -> Result<(MapDocument, ElevationGrid), PipelineError> {
    let doc = load_map(&cfg.input.map, &cfg.ingest).map_err(|e| PipelineError::Input(format!("{}: {e}", cfg.input.map.display())))?;
    let report = validate_map(&doc);
    for f in &report.findings {
        warn!("map: {f}");
    }
    let doc = drop_unbuildable(&doc, &report);
    let grid = if cfg.input.elevation.as_os_str().is_empty() {
        ElevationGrid::flat(&doc.bounds, cfg.input.flat_cell_size, 0.0)
    } else {
        load_elevation(&cfg.input.elevation)
            .map_err(|e| PipelineError::Input(format!("{}: {e}", cfg.input.elevation.display())))?
    };
    Ok((doc, grid))
}

/// Runs the full generation described by `cfg`.
pub fn generate_dataset(cfg: &GenerationConfig) -> Result<GenerationOutcome, PipelineError> {
    cfg.validate()?;
    let (doc, grid) = load_inputs(cfg)?;
    generate_from_inputs(&doc, &grid, cfg)
}

pub fn sample_dir(scene: usize, change: usize, cond: usize) -> String {
    format!("{DATASET_DIR}/scene_{scene}/change_{change}/cond_{cond}")
}

/// Seed of scene `s`; geometry uses child 0, change set `c` child `c + 1`.
pub fn scene_seed(master: u64, scene: usize) -> u64 {
    derive_seed(master, scene as u64)
}

pub fn change_seed(master: u64, scene: usize, change: usize) -> u64 {
    derive_seed(scene_seed(master, scene), change as u64 + 1)
}

/// The zenith reference condition for before images of a change set.
fn reference_condition(cfg: &GenerationConfig, frame: &ViewFrame, change_seed: u64) -> AcquisitionCondition {
    let mut rng = stream(derive_seed(change_seed, 2));
    let fov = cfg.conditions.fov;
    AcquisitionCondition {
        camera: CameraPose {
            inclination_alpha: 0.0,
            azimuth: 0.0,
            fov,
            look_at: frame.center,
            altitude: altitude_for(frame.ground_extent, fov),
        },
        sun: SunState {
            declination: cfg.conditions.before_declination,
            azimuth_plane: uniform(&mut rng, 0.0, 360.0) % 360.0,
            ambient_fraction: cfg.conditions.ambient_fraction,
        },
        index: 0,
    }
}

struct Planned {
    path: String,
    meta: SampleMetadata,
    bytes: Vec<u8>,
    digest: String,
    before: AcquisitionCondition,
    after: AcquisitionCondition,
}

fn is_complete(dir: &Path, p: &Planned) -> bool {
    let marker = fs::read_to_string(dir.join(COMPLETE_MARKER)).unwrap_or_default();
    marker.trim() == p.digest
        && fs::read(dir.join(META_FILE)).is_ok_and(|b| b == p.bytes)
        && [BEFORE_FILE, AFTER_FILE, MASK_FILE].iter().all(|f| dir.join(f).is_file())
}

fn write_sample(root: &Path, p: &Planned, before: &Image, after: &Image, mask: &ChangeMask) -> Result<(), PipelineError> {
    let dest = root.join(&p.path);
    let parent = dest.parent().expect("sample dirs are nested");
    let tmp = parent.join(format!(".{}.partial", dest.file_name().unwrap().to_string_lossy()));
    if tmp.exists() {
        fs::remove_dir_all(&tmp).map_err(|e| PipelineError::io(&tmp, e))?;
    }
    fs::create_dir_all(&tmp).map_err(|e| PipelineError::io(&tmp, e))?;
    let img = |e: ImageError| PipelineError::Output(e.to_string());
    before.write_png(&tmp.join(BEFORE_FILE)).map_err(img)?;
    after.write_png(&tmp.join(AFTER_FILE)).map_err(img)?;
    mask.write_png(&tmp.join(MASK_FILE)).map_err(img)?;
    let write = |name: &str, bytes: &[u8]| fs::write(tmp.join(name), bytes).map_err(|e| PipelineError::io(&tmp.join(name), e));
    write(META_FILE, &p.bytes)?;
    write(COMPLETE_MARKER, format!("{}\n", p.digest).as_bytes())?;
    if dest.exists() {
        fs::remove_dir_all(&dest).map_err(|e| PipelineError::io(&dest, e))?;
    }
    fs::rename(&tmp, &dest).map_err(|e| PipelineError::io(&dest, e))
}

enum SampleResult {
    Rendered(ManifestEntry),
    Skipped(ManifestEntry),
    Failed(SampleError),
}

fn entry(p: &Planned) -> ManifestEntry {
    ManifestEntry { path: p.path.clone(), meta_sha256: p.digest.clone(), meta: p.meta.clone() }
}

#[allow(clippy::too_many_arguments)]
fn run_change_set(
    cfg: &GenerationConfig,
    scene: &SceneModel,
    s: usize,
    c: usize,
    frame: &ViewFrame,
    gsd: f64,
    root: &Path,
) -> Result<Vec<SampleResult>, PipelineError> {
    let seed = change_seed(cfg.run.master_seed, s, c);
    let cs = if cfg.changes.debug_empty {
        ChangeSet::empty(seed)
    } else {
        let [lo, hi] = cfg.changes.fraction;
        sample_change_set(scene, (lo, hi), derive_seed(seed, 0)).map_err(|e| PipelineError::Generation(e.to_string()))?
    };
    let cc = &cfg.conditions;
    let conds = sample_conditions(
        cc.m,
        (cc.alpha_range[0], cc.alpha_range[1]),
        (cc.declination_range[0], cc.declination_range[1]),
        frame,
        &cc.options(),
        derive_seed(seed, 1),
    )
    .map_err(|e| PipelineError::Config(e.to_string()))?;
    let reference = reference_condition(cfg, frame, seed);
    let rcfg = cfg.render_config();

    let planned: Vec<Planned> = conds
        .iter()
        .map(|after| {
            let before = if cc.fixed_before { *after } else { reference };
            let meta = SampleMetadata {
                scene_id: s,
                change_id: c,
                change_seed: seed,
                condition_index: after.index,
                camera: after.camera,
                sun: after.sun,
                before_camera: before.camera,
                before_sun: before.sun,
                damaged_ids: cs.damaged_ids.iter().copied().collect(),
                fraction_requested: cs.fraction_requested,
                building_count: scene.buildings.len(),
                gsd,
                width: rcfg.width,
                height: rcfg.height,
                render: RenderSettings {
                    msaa: rcfg.msaa,
                    shadows: cfg.render.shadows,
                    shadow_map_size: rcfg.shadow_map_size,
                },
                generator_version: GENERATOR_VERSION.to_string(),
            };
            let bytes = meta.to_bytes();
            let digest = sha256_hex(&bytes);
            Planned { path: sample_dir(s, c, after.index), meta, bytes, digest, before, after: *after }
        })
        .collect();

    // The reference before image is shared by every condition.
    let mut shared_before: Option<Image> = None;
    let mut out = Vec::with_capacity(planned.len());
    for p in &planned {
        if is_complete(&root.join(&p.path), p) {
            out.push(SampleResult::Skipped(entry(p)));
            continue;
        }
        let fail = |message: String| {
            SampleResult::Failed(SampleError { scene_id: s, change_id: c, condition_index: p.after.index, message })
        };
        let before = match (&shared_before, cc.fixed_before) {
            (Some(img), false) => Ok(img.clone()),
            _ => render_before(scene, &cs, &p.before, &rcfg),
        };
        let rendered = before.and_then(|b| {
            if !cc.fixed_before {
                shared_before = Some(b.clone());
            }
            let (after, mask) = render_after(scene, &cs, &p.after, &rcfg)?;
            Ok((b, after, mask))
        });
        match rendered {
            Ok((before, after, mask)) => {
                write_sample(root, p, &before, &after, &mask)?;
                info!("rendered {}", p.path);
                out.push(SampleResult::Rendered(entry(p)));
            }
            Err(e) => out.push(fail(e.to_string())),
        }
    }
    Ok(out)
}

/// Generation from already loaded inputs.
pub fn generate_from_inputs(
    doc: &MapDocument,
    grid: &ElevationGrid,
    cfg: &GenerationConfig,
) -> Result<GenerationOutcome, PipelineError> {
    cfg.validate()?;
    let (ext_w, ext_h) = cfg.ground_extent();
    let (map_w, map_h) = (doc.bounds.width(), doc.bounds.height());
    if (ext_w - map_w).abs() > 0.1 * map_w || (ext_h - map_h).abs() > 0.1 * map_h {
        warn!(
            "image covers {ext_w:.1} x {ext_h:.1} m at {} m/px but the map spans {map_w:.1} x {map_h:.1} m",
            cfg.image.target_gsd
        );
    }
    let root = cfg.output.dir.clone();
    fs::create_dir_all(root.join(DATASET_DIR)).map_err(|e| PipelineError::io(&root, e))?;
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(cfg.run.workers)
        .build()
        .map_err(|e| PipelineError::Generation(e.to_string()))?;

    let mut results = Vec::new();
    pool.install(|| -> Result<(), PipelineError> {
        for s in 0..cfg.run.scenes {
            let scene = assemble_scene(doc, grid, &cfg.scene, derive_seed(scene_seed(cfg.run.master_seed, s), 0))
                .map_err(|e| PipelineError::Generation(e.to_string()))?;
            let frame = ViewFrame { center: scene.focus, ground_extent: ext_h };
            let per_change: Vec<Vec<SampleResult>> = (0..cfg.run.changes_per_scene)
                .into_par_iter()
                .map(|c| run_change_set(cfg, &scene, s, c, &frame, cfg.image.target_gsd, &root))
                .collect::<Result<_, _>>()?;
            results.extend(per_change.into_iter().flatten());
        }
        Ok(())
    })?;

    let (mut rendered, mut skipped) = (0, 0);
    let mut manifest = Manifest {
        generator_version: GENERATOR_VERSION.to_string(),
        master_seed: cfg.run.master_seed,
        samples: Vec::new(),
        errors: Vec::new(),
    };
    for r in results {
        match r {
            SampleResult::Rendered(e) => {
                rendered += 1;
                manifest.samples.push(e);
            }
            SampleResult::Skipped(e) => {
                skipped += 1;
                manifest.samples.push(e);
            }
            SampleResult::Failed(e) => manifest.errors.push(e),
        }
    }
    let manifest_path = root.join(MANIFEST_FILE);
    let tmp = root.join(format!(".{MANIFEST_FILE}.partial"));
    fs::write(&tmp, manifest.to_bytes()).map_err(|e| PipelineError::io(&tmp, e))?;
    fs::rename(&tmp, &manifest_path).map_err(|e| PipelineError::io(&manifest_path, e))?;
    info!("{rendered} samples rendered, {skipped} already complete, {} failed", manifest.errors.len());
    Ok(GenerationOutcome { manifest, manifest_path, rendered, skipped })
}
