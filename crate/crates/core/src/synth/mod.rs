//! Deterministic synthetic data: glyph atlas, augmented character corpora,
//! rendered plates and cluttered scenes with ground truth.

mod atlas;
mod chars;
mod plate;
pub mod render;
mod scene;

use std::path::PathBuf;

use thiserror::Error;

use crate::acr::Violation;
use crate::raster::PnmError;

pub use atlas::{format_atlas, load_atlas, parse_atlas, save_atlas, AtlasError, GlyphAtlas};
pub use chars::{
    class_counts, gen_char_dataset, read_char_dataset, render_char, sample_rng, to_training_samples,
    write_char_dataset, AugmentParams, CharSample, ClassProfile, MANIFEST,
};
pub use plate::{compose_plate, PlateStyle, PlateTruth, TruthChar};
pub use scene::{
    compose_scene, gen_scene_dataset, load_scene, random_reading, read_scene_truths, write_scene_dataset, Clutter,
    SceneParams, SceneSample, SceneTruth,
};

#[derive(Debug, Error)]
pub enum SynthError {
    #[error(transparent)]
    Atlas(#[from] AtlasError),
    #[error("reading violates the plate grammar: {0:?}")]
    Grammar(Vec<Violation>),
    #[error("plate of {plate:?} px does not fit a {scene:?} scene")]
    PlateTooLarge { plate: (usize, usize), scene: (usize, usize) },
    #[error("{0}")]
    Params(String),
    #[error("manifest line {line}: {msg}")]
    Manifest { line: usize, msg: String },
    #[error("no truth file for {0}")]
    MissingTruth(PathBuf),
    #[error("truth file {path}: {msg}")]
    Truth { path: PathBuf, msg: String },
    #[error(transparent)]
    Image(#[from] PnmError),
    #[error("i/o")]
    Io(#[from] std::io::Error),
}
