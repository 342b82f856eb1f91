//! Generation config: a TOML tree with defaults for every key.
//!
//! Effective config = defaults, then the config file, then `key.path=value`
//! overrides. Override keys must already exist in the tree; values are
//! parsed as TOML literals and fall back to plain strings.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::PipelineError;
use crate::change_engine::{validate_condition_params, ConditionOptions};
use crate::geometry::SceneConfig;
use crate::map_ingest::IngestOptions;
use crate::renderer::RenderConfig;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct InputConfig {
    /// OSM XML or GeoJSON map.
    pub map: PathBuf,
    /// ESRI ASCII grid; empty means flat terrain at height 0.
    pub elevation: PathBuf,
    /// Cell size of the flat terrain used without an elevation grid.
    pub flat_cell_size: f64,
}

impl Default for InputConfig {
    fn default() -> Self {
        Self { map: PathBuf::new(), elevation: PathBuf::new(), flat_cell_size: 10.0 }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct OutputConfig {
    pub dir: PathBuf,
}

impl Default for OutputConfig {
    fn default() -> Self {
        Self { dir: PathBuf::from("synthcd-out") }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ImageConfig {
    pub width: usize,
    pub height: usize,
    /// Ground sample distance, meters per pixel.
    pub target_gsd: f64,
}

impl Default for ImageConfig {
    fn default() -> Self {
        Self { width: 3072, height: 3072, target_gsd: 0.6 }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ChangesConfig {
    /// Range of the fraction of buildings damaged per change set.
    pub fraction: [f64; 2],
    /// Debugging: every change set is empty.
    pub debug_empty: bool,
}

impl Default for ChangesConfig {
    fn default() -> Self {
        Self { fraction: [0.3, 0.5], debug_empty: false }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ConditionsConfig {
    /// Acquisition conditions per change set.
    pub m: usize,
    pub alpha_range: [f64; 2],
    pub declination_range: [f64; 2],
    pub fov: f64,
    pub fov_jitter: f64,
    pub azimuth_jitter: f64,
    pub ambient_fraction: f64,
    /// Sun declination of the zenith reference view used for before images.
    pub before_declination: f64,
    /// Debugging: render before images under the after condition.
    pub fixed_before: bool,
}

impl Default for ConditionsConfig {
    fn default() -> Self {
        let o = ConditionOptions::default();
        Self {
            m: 5,
            alpha_range: [5.0, 10.0],
            declination_range: [30.0, 140.0],
            fov: o.fov,
            fov_jitter: o.fov_jitter,
            azimuth_jitter: o.azimuth_jitter,
            ambient_fraction: o.ambient_fraction,
            before_declination: 85.0,
            fixed_before: false,
        }
    }
}

impl ConditionsConfig {
    pub fn options(&self) -> ConditionOptions {
        ConditionOptions {
            fov: self.fov,
            fov_jitter: self.fov_jitter,
            azimuth_jitter: self.azimuth_jitter,
            ambient_fraction: self.ambient_fraction,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ShadowMode {
    Hard,
    Soft,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RenderSection {
    pub msaa: usize,
    pub shadows: ShadowMode,
    pub shadow_map_size: usize,
    pub background: [f64; 3],
    pub mask_depth_bias: f64,
}

impl Default for RenderSection {
    fn default() -> Self {
        let r = RenderConfig::default();
        Self {
            msaa: r.msaa,
            shadows: ShadowMode::Soft,
            shadow_map_size: r.shadow_map_size,
            background: r.background,
            mask_depth_bias: r.mask_depth_bias,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RunConfig {
    pub master_seed: u64,
    /// Worker threads; 0 uses every core.
    pub workers: usize,
    /// Procedural variants (roof colors, textures) of the territory.
    pub scenes: usize,
    pub changes_per_scene: usize,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self { master_seed: 0, workers: 0, scenes: 1, changes_per_scene: 1 }
    }
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct GenerationConfig {
    pub input: InputConfig,
    pub ingest: IngestOptions,
    pub output: OutputConfig,
    pub image: ImageConfig,
    pub changes: ChangesConfig,
    pub conditions: ConditionsConfig,
    pub render: RenderSection,
    pub scene: SceneConfig,
    pub run: RunConfig,
}

impl GenerationConfig {
    pub fn render_config(&self) -> RenderConfig {
        RenderConfig {
            width: self.image.width,
            height: self.image.height,
            msaa: self.render.msaa,
            shadow_map_size: self.render.shadow_map_size,
            soft_shadow_kernel: match self.render.shadows {
                ShadowMode::Hard => 1,
                ShadowMode::Soft => 9,
            },
            background: self.render.background,
            mask_depth_bias: self.render.mask_depth_bias,
        }
    }

    /// Ground extent covered by the image, meters (width, height).
    pub fn ground_extent(&self) -> (f64, f64) {
        (self.image.width as f64 * self.image.target_gsd, self.image.height as f64 * self.image.target_gsd)
    }

    pub fn validate(&self) -> Result<(), PipelineError> {
        let bad = |m: String| Err(PipelineError::Config(m));
        if !(self.image.target_gsd > 0.0 && self.image.target_gsd.is_finite()) {
            return bad(format!("image.target_gsd must be positive, got {}", self.image.target_gsd));
        }
        let [lo, hi] = self.changes.fraction;
        if !self.changes.debug_empty && !(lo > 0.0 && lo <= hi && hi < 1.0) {
            return bad(format!("changes.fraction [{lo}, {hi}] needs 0 < lo <= hi < 1"));
        }
        let c = &self.conditions;
        validate_condition_params(
            c.m,
            (c.alpha_range[0], c.alpha_range[1]),
            (c.declination_range[0], c.declination_range[1]),
            &c.options(),
        )
        .map_err(|e| PipelineError::Config(format!("conditions: {e}")))?;
        if !(0.0..=1.0).contains(&c.ambient_fraction) {
            return bad(format!("conditions.ambient_fraction {} not in [0, 1]", c.ambient_fraction));
        }
        if !(c.before_declination > 0.0 && c.before_declination < 180.0) {
            return bad(format!("conditions.before_declination {} not in (0, 180)", c.before_declination));
        }
        if self.run.scenes == 0 || self.run.changes_per_scene == 0 {
            return bad("run.scenes and run.changes_per_scene must be at least 1".into());
        }
        if self.scene.damage_scale < 1.0 {
            return bad(format!("scene.damage_scale {} is below 1", self.scene.damage_scale));
        }
        self.render_config().validate().map_err(|e| PipelineError::Config(e.to_string()))?;
        if !(self.input.flat_cell_size > 0.0) {
            return bad(format!("input.flat_cell_size must be positive, got {}", self.input.flat_cell_size));
        }
        if self.input.map.as_os_str().is_empty() {
            return bad("input.map is not set".into());
        }
        Ok(())
    }

    /// Effective config from TOML text plus overrides. Relative input and
    /// output paths are resolved against `base_dir`.
    pub fn from_toml(text: &str, overrides: &[(String, String)], base_dir: Option<&Path>) -> Result<Self, PipelineError> {
        let file: toml::Table = text.parse().map_err(|e: toml::de::Error| PipelineError::Config(e.to_string()))?;
        let mut tree = toml::Table::try_from(GenerationConfig::default()).expect("defaults serialize");
        merge(&mut tree, file, "")?;
        for (key, value) in overrides {
            set_key(&mut tree, key, value)?;
        }
        let mut cfg: GenerationConfig =
            toml::Value::Table(tree).try_into().map_err(|e: toml::de::Error| PipelineError::Config(e.to_string()))?;
        if let Some(base) = base_dir {
            for p in [&mut cfg.input.map, &mut cfg.input.elevation, &mut cfg.output.dir] {
                if !p.as_os_str().is_empty() && p.is_relative() {
                    *p = base.join(&*p);
                }
            }
        }
        Ok(cfg)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("config serializes")
    }
}

fn merge(dst: &mut toml::Table, src: toml::Table, prefix: &str) -> Result<(), PipelineError> {
    for (k, v) in src {
        let path = if prefix.is_empty() { k.clone() } else { format!("{prefix}.{k}") };
        match (dst.get_mut(&k), v) {
            (Some(toml::Value::Table(d)), toml::Value::Table(s)) => merge(d, s, &path)?,
            (Some(_), toml::Value::Table(_)) => {
                return Err(PipelineError::Config(format!("{path}: expected a value, found a table")))
            }
            (Some(slot), v) => *slot = v,
            (None, _) => return Err(PipelineError::Config(format!("unknown config key `{path}`"))),
        }
    }
    Ok(())
}

fn parse_value(raw: &str) -> toml::Value {
    let doc = format!("v = {raw}");
    match doc.parse::<toml::Table>() {
        Ok(mut t) => t.remove("v").expect("key present"),
        Err(_) => toml::Value::String(raw.to_string()),
    }
}

/// Sets an existing dotted key.
pub fn set_key(tree: &mut toml::Table, key: &str, raw: &str) -> Result<(), PipelineError> {
    let unknown = || PipelineError::Config(format!("unknown config key `{key}`"));
    let parts: Vec<&str> = key.split('.').collect();
    let (last, path) = parts.split_last().ok_or_else(unknown)?;
    let mut node = tree;
    for p in path {
        node = match node.get_mut(*p) {
            Some(toml::Value::Table(t)) => t,
            _ => return Err(unknown()),
        };
    }
    match node.get_mut(*last) {
        Some(toml::Value::Table(_)) => Err(PipelineError::Config(format!("`{key}` is a section, not a value"))),
        Some(slot) => {
            let mut v = parse_value(raw);
            // Integers are accepted where floats are expected.
            if let (toml::Value::Float(_), toml::Value::Integer(i)) = (&*slot, &v) {
                v = toml::Value::Float(*i as f64);
            }
            *slot = v;
            Ok(())
        }
        None => Err(unknown()),
    }
}
