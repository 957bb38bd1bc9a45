use std::fmt;
use std::str::FromStr;

use super::{AcrError, CLASS_COUNT};
use crate::nn::{LayerSpec, Network};
use crate::segmenter::GLYPH_SIZE;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Preset {
    PaperReplica,
    Desk,
}

impl Preset {
    pub fn name(self) -> &'static str {
        match self {
            Preset::PaperReplica => "paper-replica",
            Preset::Desk => "desk",
        }
    }
}

impl fmt::Display for Preset {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Preset {
    type Err = AcrError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "paper-replica" => Ok(Preset::PaperReplica),
            "desk" => Ok(Preset::Desk),
            other => Err(AcrError::UnknownPreset(other.to_string())),
        }
    }
}

/// A named classifier architecture over 32×32×1 glyphs with 26 outputs.
#[derive(Clone, Debug, PartialEq)]
pub struct ModelConfig {
    pub preset: Preset,
    pub dropout: f64,
    pub network: Network,
}

impl ModelConfig {
    pub fn param_count(&self) -> usize {
        self.network.param_count()
    }
}

pub fn preset_layers(preset: Preset) -> Vec<LayerSpec> {
    use LayerSpec::*;
    let conv3 = |filters| Conv { filters, kernel: 3 };
    let pool = MaxPool { window: 2, stride: 2 };
    match preset {
        Preset::PaperReplica => vec![
            conv3(128),
            Relu,
            pool,
            conv3(256),
            Relu,
            pool,
            Dropout { rate: 0.5 },
            Flatten,
            Dense { units: 1200 },
            Relu,
            Dense { units: 128 },
            Relu,
            Dense { units: CLASS_COUNT },
            Softmax,
        ],
        Preset::Desk => vec![
            conv3(16),
            Relu,
            pool,
            conv3(32),
            Relu,
            pool,
            Dropout { rate: 0.25 },
            Flatten,
            Dense { units: 128 },
            Relu,
            Dense { units: CLASS_COUNT },
            Softmax,
        ],
    }
}

pub fn build_model(preset: Preset) -> ModelConfig {
    let layers = preset_layers(preset);
    let dropout = layers
        .iter()
        .find_map(|l| match l {
            LayerSpec::Dropout { rate } => Some(*rate),
            _ => None,
        })
        .unwrap_or(0.0);
    let network = Network::new(vec![GLYPH_SIZE, GLYPH_SIZE, 1], layers).expect("preset chains are valid");
    ModelConfig { preset, dropout, network }
}
