//! Egyptian licence-plate recognition: morphological plate localization,
//! character segmentation and a from-scratch convolutional classifier for
//! the 26-symbol plate alphabet, plus a synthetic data generator and an
//! evaluation harness.

pub mod acr;
pub mod evalkit;
pub mod filters;
pub mod geometry;
pub mod locator;
pub mod morphology;
pub mod nn;
pub mod pipeline;
pub mod raster;
pub mod segmenter;
pub mod synth;

pub use geometry::BBox;
pub use raster::{BinaryImage, GrayImage, PnmImage, RgbImage};
