//! Plate localization: grayscale, Sobel edges, Otsu mask, dilation, median
//! smoothing, hole filling, erosion, line elimination and a metric size gate.

use serde::Serialize;
use thiserror::Error;

use crate::filters::{median_filter, otsu_threshold, sobel, GradientMap};
use crate::geometry::BBox;
use crate::morphology::{
    connected_components, dilate, erode, fill_holes, open, Connectivity, MorphologyError, Region,
    StructuringElement,
};
use crate::raster::{to_gray, BinaryImage, GrayImage, PnmImage};

#[derive(Debug, Error, PartialEq)]
pub enum LocatorError {
    #[error("invalid locator config: {0}")]
    Config(String),
    #[error("box {bbox:?} exceeds image bounds {width}x{height}")]
    OutOfBounds { bbox: BBox, width: usize, height: usize },
    #[error(transparent)]
    Morphology(#[from] MorphologyError),
}

/// Plate localization parameters.
#[derive(Clone, Debug, PartialEq)]
pub struct LocatorConfig {
    /// Sensor resolution at the plate's distance.
    pub pixels_per_cm: f64,
    pub plate_w_cm: f64,
    pub plate_h_cm: f64,
    /// Accept widths and heights within `[tol, 1/tol]` of the expected size.
    pub size_tolerance: f64,
    pub aspect_ratio: f64,
    pub aspect_tolerance: f64,
    /// Minimum run length treated as a line.
    pub line_se_length: usize,
    /// Runs thinner than this across their length count as lines; odd.
    pub line_max_thickness: usize,
    pub max_candidates: usize,
    /// Edge-merging dilation element `(width, height)`.
    pub dilate_se: (usize, usize),
    /// Post-fill erosion element `(width, height)`.
    pub erode_se: (usize, usize),
    pub median_window: usize,
}

impl Default for LocatorConfig {
    /// Tuned for the synthetic scenes: a 340 px wide plate at unit scale.
    fn default() -> Self {
        Self {
            pixels_per_cm: 340.0 / 32.0,
            plate_w_cm: 32.0,
            plate_h_cm: 17.0,
            size_tolerance: 0.5,
            aspect_ratio: 32.0 / 17.0,
            aspect_tolerance: 0.4,
            line_se_length: 25,
            line_max_thickness: 9,
            max_candidates: 5,
            dilate_se: (9, 3),
            erode_se: (3, 3),
            median_window: 5,
        }
    }
}

impl LocatorConfig {
    /// Camera geometry of the original field data (1152 px/cm).
    pub fn field_camera() -> Self {
        Self { pixels_per_cm: 1152.0, ..Self::default() }
    }

    pub fn validate(&self) -> Result<(), LocatorError> {
        let bad = |msg: &str| Err(LocatorError::Config(msg.to_string()));
        let positive = [self.pixels_per_cm, self.plate_w_cm, self.plate_h_cm, self.aspect_ratio];
        if positive.iter().any(|v| !(v.is_finite() && *v > 0.0)) {
            return bad("pixels_per_cm, plate dimensions and aspect_ratio must be positive");
        }
        if !(self.size_tolerance > 0.0 && self.size_tolerance < 1.0) {
            return bad("size_tolerance must lie in (0, 1)");
        }
        if !(self.aspect_tolerance.is_finite() && self.aspect_tolerance > 0.0) {
            return bad("aspect_tolerance must be positive");
        }
        if self.line_se_length == 0 || self.max_candidates == 0 {
            return bad("line_se_length and max_candidates must be positive");
        }
        if self.median_window < 3 || self.median_window % 2 == 0 {
            return bad("median_window must be odd and at least 3");
        }
        self.line_elements()?;
        StructuringElement::rect(self.dilate_se.0, self.dilate_se.1)?;
        StructuringElement::rect(self.erode_se.0, self.erode_se.1)?;
        Ok(())
    }

    fn line_elements(&self) -> Result<[StructuringElement; 4], MorphologyError> {
        // Even lengths round up so the element stays centred.
        let long = self.line_se_length | 1;
        Ok([
            StructuringElement::horizontal_line(long)?,
            StructuringElement::vertical_line(long)?,
            StructuringElement::horizontal_line(self.line_max_thickness)?,
            StructuringElement::vertical_line(self.line_max_thickness)?,
        ])
    }
}

/// A ranked plate region.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct PlateCandidate {
    pub bbox: BBox,
    pub score: f64,
    pub fill_ratio: f64,
    pub aspect_error: f64,
    pub area: usize,
}

/// Expected plate `(width, height)` in pixels, rounded to the nearest pixel.
pub fn expected_plate_pixels(cfg: &LocatorConfig) -> (f64, f64) {
    ((cfg.pixels_per_cm * cfg.plate_w_cm).round(), (cfg.pixels_per_cm * cfg.plate_h_cm).round())
}

/// The size and aspect gate applied to a single box.
pub fn passes_size_gate(bbox: &BBox, cfg: &LocatorConfig) -> bool {
    let (wp, hp) = expected_plate_pixels(cfg);
    let tol = cfg.size_tolerance;
    let (w, h) = (bbox.w as f64, bbox.h as f64);
    w >= tol * wp
        && w <= wp / tol
        && h >= tol * hp
        && h <= hp / tol
        && (w / h - cfg.aspect_ratio).abs() <= cfg.aspect_tolerance
}

pub fn filter_by_size(regions: Vec<Region>, cfg: &LocatorConfig) -> Vec<Region> {
    regions.into_iter().filter(|r| passes_size_gate(&r.bbox, cfg)).collect()
}

/// Removes long thin horizontal and vertical runs.
///
/// A pixel is on a horizontal line when it survives opening with a
/// `line_se_length` horizontal element but not opening with a
/// `line_max_thickness` vertical one (and symmetrically for vertical lines).
/// Thick blobs survive both openings and are left intact.
pub fn eliminate_lines(img: &BinaryImage, cfg: &LocatorConfig) -> Result<BinaryImage, LocatorError> {
    let [long_h, long_v, thick_h, thick_v] = cfg.line_elements()?;
    let horizontal = open(img, &long_h).minus(&open(img, &thick_v));
    let vertical = open(img, &long_v).minus(&open(img, &thick_h));
    Ok(img.minus(&horizontal).minus(&vertical))
}

/// Every intermediate raster of one localization run.
#[derive(Clone, Debug)]
pub struct LocatorStages {
    pub gray: GrayImage,
    pub gradient: GradientMap,
    pub edges: BinaryImage,
    pub dilated: BinaryImage,
    pub smoothed: BinaryImage,
    pub filled: BinaryImage,
    pub eroded: BinaryImage,
    pub lines_removed: BinaryImage,
    /// Foreground of the regions that passed the size gate.
    pub kept: BinaryImage,
    pub candidates: Vec<PlateCandidate>,
}

impl LocatorStages {
    /// Stage rasters in dump order with their file stems.
    pub fn dumps(&self) -> Vec<(&'static str, GrayImage)> {
        vec![
            ("stage_01_gray", self.gray.clone()),
            ("stage_02_edges", self.edges.to_gray()),
            ("stage_03_dilated", self.dilated.to_gray()),
            ("stage_04_median", self.smoothed.to_gray()),
            ("stage_05_filled", self.filled.to_gray()),
            ("stage_06_eroded", self.eroded.to_gray()),
            ("stage_07_lines_removed", self.lines_removed.to_gray()),
            ("stage_08_candidates", self.kept.to_gray()),
        ]
    }
}

fn score(region: &Region, cfg: &LocatorConfig) -> PlateCandidate {
    let aspect = region.bbox.w as f64 / region.bbox.h as f64;
    let aspect_error = (aspect - cfg.aspect_ratio).abs();
    let fill_ratio = region.fill_ratio();
    let score = (1.0 - (aspect_error / cfg.aspect_tolerance).min(1.0)) * fill_ratio;
    PlateCandidate { bbox: region.bbox, score, fill_ratio, aspect_error, area: region.area }
}

pub fn run_stages(gray: &GrayImage, cfg: &LocatorConfig) -> Result<LocatorStages, LocatorError> {
    cfg.validate()?;
    let (w, h) = (gray.width(), gray.height());
    if w < 3 || h < 3 {
        // Too small to hold an edge response, let alone a plate.
        let empty = BinaryImage::empty(w, h);
        return Ok(LocatorStages {
            gray: gray.clone(),
            gradient: GradientMap::new(w, h, vec![0.0; w * h]).expect("valid map"),
            edges: empty.clone(),
            dilated: empty.clone(),
            smoothed: empty.clone(),
            filled: empty.clone(),
            eroded: empty.clone(),
            lines_removed: empty.clone(),
            kept: empty,
            candidates: Vec::new(),
        });
    }
    let gradient = sobel(gray).expect("size checked");
    let edges = otsu_threshold(&gradient);
    let dilated = dilate(&edges, &StructuringElement::rect(cfg.dilate_se.0, cfg.dilate_se.1)?);
    let smoothed_gray = median_filter(&dilated.to_gray(), cfg.median_window).expect("window validated");
    let smoothed = BinaryImage::new(w, h, smoothed_gray.pixels().iter().map(|&v| v >= 128).collect())
        .expect("dimensions preserved");
    let filled = fill_holes(&smoothed);
    let eroded = erode(&filled, &StructuringElement::rect(cfg.erode_se.0, cfg.erode_se.1)?);
    let lines_removed = eliminate_lines(&eroded, cfg)?;
    let regions = filter_by_size(connected_components(&lines_removed, Connectivity::Eight), cfg);

    let mut kept = BinaryImage::empty(w, h);
    for r in &regions {
        for &(x, y) in &r.pixels {
            kept.set(x, y, true);
        }
    }
    // Regions arrive in raster order, so a stable sort keeps it as the last tie-break.
    let mut candidates: Vec<PlateCandidate> = regions.iter().map(|r| score(r, cfg)).collect();
    candidates.sort_by(|a, b| b.score.total_cmp(&a.score).then(b.area.cmp(&a.area)));
    candidates.truncate(cfg.max_candidates);

    Ok(LocatorStages { gray: gray.clone(), gradient, edges, dilated, smoothed, filled, eroded, lines_removed, kept, candidates })
}

/// Ranked plate candidates, best first; empty when nothing plate-like is found.
pub fn locate_plates(img: &PnmImage, cfg: &LocatorConfig) -> Result<Vec<PlateCandidate>, LocatorError> {
    let gray = match img {
        PnmImage::Gray(g) => g.clone(),
        PnmImage::Rgb(rgb) => to_gray(rgb),
    };
    Ok(run_stages(&gray, cfg)?.candidates)
}

/// Exact pixel copy of `bbox`.
pub fn crop(img: &GrayImage, bbox: &BBox) -> Result<GrayImage, LocatorError> {
    if !bbox.fits_within(img.width(), img.height()) {
        return Err(LocatorError::OutOfBounds { bbox: *bbox, width: img.width(), height: img.height() });
    }
    Ok(GrayImage::from_fn(bbox.w, bbox.h, |x, y| img.get(bbox.x + x, bbox.y + y)))
}
