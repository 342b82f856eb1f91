//! Dataset generation, patch tiling and QA statistics.

mod config;
mod generate;
mod stats;
mod tiling;

use std::path::{Path, PathBuf};

use thiserror::Error;

pub use config::{
    set_key, ChangesConfig, ConditionsConfig, GenerationConfig, ImageConfig, InputConfig, OutputConfig,
    RenderSection, RunConfig, ShadowMode,
};
pub use generate::{
    change_seed, generate_dataset, generate_from_inputs, load_inputs, sample_dir, scene_seed, sha256_hex,
    GenerationOutcome, Manifest, ManifestEntry, RenderSettings, SampleError, SampleMetadata, AFTER_FILE,
    BEFORE_FILE, COMPLETE_MARKER, DATASET_DIR, MANIFEST_FILE, MASK_FILE, META_FILE,
};
pub use stats::{dataset_stats, DatasetStats, Histogram, SampleStats};
pub use tiling::{patch_offsets, tile_dataset, tile_patches, Patch, PatchIndexEntry, TilingReport, PATCH_INDEX_FILE};

#[derive(Debug, Error)]
pub enum PipelineError {
    #[error("config: {0}")]
    Config(String),
    #[error("input: {0}")]
    Input(String),
    #[error("generation: {0}")]
    Generation(String),
    #[error("output: {0}")]
    Output(String),
    #[error("{}: {source}", path.display())]
    Io { path: PathBuf, source: std::io::Error },
    #[error("{0}: invalid JSON: {1}")]
    Json(String, String),
}

impl PipelineError {
    pub(crate) fn io(path: &Path, source: std::io::Error) -> Self {
        PipelineError::Io { path: path.to_path_buf(), source }
    }
}
