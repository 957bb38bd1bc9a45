//! The character classifier: label map, architecture presets, training,
//! prediction and plate-reading assembly.

mod labels;
mod model;
mod reading;
mod train;

use thiserror::Error;

use crate::nn::NnError;
use crate::segmenter::Band;

pub use labels::{LabelMap, Symbol, CLASS_COUNT, DIGIT_COUNT, LETTER_COUNT};
pub use model::{build_model, preset_layers, ModelConfig, Preset};
pub use reading::{assemble_reading, validate_parts, validate_reading, CharReading, PlateReading, Violation};
pub use train::{
    accuracy, glyph_tensor, predict, stratified_split, train, train_split, write_metrics, EpochMetrics, Prediction,
    Sample, TrainConfig, TrainOutcome,
};

#[derive(Debug, Error)]
pub enum AcrError {
    #[error("unknown model preset {0:?} (expected paper-replica or desk)")]
    UnknownPreset(String),
    #[error("class {0} has no training samples")]
    EmptyClass(usize),
    #[error("label {0} is outside the 26-class alphabet")]
    LabelOutOfRange(usize),
    #[error("loss became non-finite in epoch {epoch}")]
    NonFiniteLoss { epoch: usize },
    #[error("no {0:?} characters found on the plate")]
    IncompleteReading(Band),
    #[error("{0}")]
    Config(String),
    #[error(transparent)]
    Nn(#[from] NnError),
}
