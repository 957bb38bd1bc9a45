//! Full recognition: locate, crop, split, segment, classify, assemble.

use serde::Serialize;
use thiserror::Error;

use crate::acr::{assemble_reading, predict, validate_reading, AcrError, ModelConfig, PlateReading, Violation};
use crate::geometry::BBox;
use crate::locator::{crop, run_stages, LocatorConfig, LocatorError, PlateCandidate};
use crate::nn::{NetworkWeights, NnError};
use crate::raster::{GrayImage, PnmImage};
use crate::segmenter::{normalize_glyph, segment_chars, split_bands, CharBox, SegmentError};

#[derive(Debug, Error)]
pub enum PipelineError {
    #[error(transparent)]
    Locator(#[from] LocatorError),
    #[error(transparent)]
    Segment(#[from] SegmentError),
    #[error(transparent)]
    Acr(#[from] AcrError),
    #[error(transparent)]
    Nn(#[from] NnError),
}

/// A located plate with its reading.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct PlateDetection {
    #[serde(flatten)]
    pub reading: PlateReading,
    pub score: f64,
    pub violations: Vec<Violation>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Recognition {
    /// Every candidate the locator kept, best first.
    pub candidates: Vec<PlateCandidate>,
    /// Candidates that produced a complete reading, in candidate order.
    pub plates: Vec<PlateDetection>,
}

pub struct Recognizer {
    pub model: ModelConfig,
    pub weights: NetworkWeights,
    pub locator: LocatorConfig,
}

impl Recognizer {
    pub fn new(model: ModelConfig, weights: NetworkWeights, locator: LocatorConfig) -> Result<Self, PipelineError> {
        model.network.check_weights(&weights)?;
        locator.validate()?;
        Ok(Self { model, weights, locator })
    }

    /// Character boxes of a plate crop, in crop coordinates.
    pub fn segment_plate(plate: &GrayImage) -> Result<Vec<CharBox>, PipelineError> {
        let bands = split_bands(plate)?;
        let mut boxes = segment_chars(&bands.body);
        for b in &mut boxes {
            b.bbox.y += bands.cut;
        }
        Ok(boxes)
    }

    /// Reads one plate crop. `origin` is the crop's box in the scene; the
    /// reading's boxes are reported in scene coordinates.
    pub fn read_plate(&self, plate: &GrayImage, origin: BBox) -> Result<PlateReading, PipelineError> {
        let bands = split_bands(plate)?;
        let boxes = segment_chars(&bands.body);
        let mut probs = Vec::with_capacity(boxes.len());
        for b in &boxes {
            let glyph = normalize_glyph(&bands.body, &b.bbox)?;
            probs.push(predict(&glyph, &self.weights, &self.model)?.probs);
        }
        let scene_boxes: Vec<CharBox> = boxes
            .iter()
            .map(|b| {
                let bbox = BBox { x: b.bbox.x + origin.x, y: b.bbox.y + bands.cut + origin.y, ..b.bbox };
                CharBox { bbox, ..*b }
            })
            .collect();
        Ok(assemble_reading(&scene_boxes, &probs, origin)?)
    }

    pub fn recognize_gray(&self, gray: &GrayImage) -> Result<Recognition, PipelineError> {
        let candidates = run_stages(gray, &self.locator)?.candidates;
        let mut plates = Vec::new();
        for c in &candidates {
            let plate = crop(gray, &c.bbox)?;
            match self.read_plate(&plate, c.bbox) {
                Ok(reading) => {
                    let violations = validate_reading(&reading);
                    plates.push(PlateDetection { reading, score: c.score, violations });
                }
                Err(PipelineError::Acr(AcrError::IncompleteReading(_)))
                | Err(PipelineError::Segment(SegmentError::PlateTooSmall(_))) => {}
                Err(e) => return Err(e),
            }
        }
        Ok(Recognition { candidates, plates })
    }

    pub fn recognize(&self, img: &PnmImage) -> Result<Recognition, PipelineError> {
        let gray = match img {
            PnmImage::Gray(g) => g.clone(),
            PnmImage::Rgb(c) => crate::raster::to_gray(c),
        };
        self.recognize_gray(&gray)
    }
}
