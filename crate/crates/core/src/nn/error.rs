use std::io;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum NnError {
    #[error("shape mismatch: {0}")]
    ShapeMismatch(String),
    #[error("invalid layer chain: {0}")]
    BadSpec(String),
    #[error("label {label} out of range for {classes} classes")]
    LabelOutOfRange { label: usize, classes: usize },
    #[error("non-finite value in {0}")]
    NonFinite(String),
    #[error("weight file i/o")]
    Io(#[from] io::Error),
    #[error("not an ACRW weight file (bad magic)")]
    BadMagic,
    #[error("unsupported ACRW version {0}")]
    UnsupportedVersion(u32),
    #[error("weight file truncated")]
    Truncated,
    #[error("tensor name is not valid UTF-8")]
    InvalidName,
    #[error("missing tensor {0:?}")]
    MissingTensor(String),
}
