//! Plate crop → header/body split → per-character boxes → 32×32 glyphs.
//!
//! Layout convention shared with the synthetic plate renderer: digits sit
//! left of the divider and letters right of it. Digits are ordered
//! left-to-right (most significant first); letters right-to-left, in Arabic
//! reading order.

use serde::Serialize;
use thiserror::Error;

use crate::filters::{binarize_dark, histogram, otsu_level};
use crate::geometry::BBox;
use crate::morphology::{connected_components, Connectivity};
use crate::raster::GrayImage;

pub const GLYPH_SIZE: usize = 32;

/// Smallest crop `split_bands` accepts.
pub const MIN_PLATE_HEIGHT: usize = 20;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum SegmentError {
    #[error("plate is {0} px tall; at least {MIN_PLATE_HEIGHT} px needed")]
    PlateTooSmall(usize),
    #[error("character box {bbox:?} exceeds body bounds {width}x{height}")]
    OutOfBounds { bbox: BBox, width: usize, height: usize },
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Band {
    Digit,
    Letter,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub struct CharBox {
    pub bbox: BBox,
    pub band: Band,
    /// Position in the serialized reading: digits first, then letters.
    pub order_index: usize,
}

/// Normalized 32×32 glyph, ink near 1 and background near 0.
#[derive(Clone, Debug, PartialEq)]
pub struct GlyphImage(Vec<f64>);

impl GlyphImage {
    pub fn new(values: Vec<f64>) -> Option<Self> {
        (values.len() == GLYPH_SIZE * GLYPH_SIZE && values.iter().all(|v| (0.0..=1.0).contains(v)))
            .then_some(Self(values))
    }

    pub fn zeros() -> Self {
        Self(vec![0.0; GLYPH_SIZE * GLYPH_SIZE])
    }

    pub fn values(&self) -> &[f64] {
        &self.0
    }

    pub fn get(&self, x: usize, y: usize) -> f64 {
        self.0[y * GLYPH_SIZE + x]
    }

    pub fn to_gray(&self) -> GrayImage {
        GrayImage::from_fn(GLYPH_SIZE, GLYPH_SIZE, |x, y| (self.get(x, y) * 255.0).round() as u8)
    }
}

/// Result of splitting a plate crop into its header strip and character body.
#[derive(Clone, Debug)]
pub struct Bands {
    pub header: GrayImage,
    pub body: GrayImage,
    /// First body row in plate coordinates.
    pub cut: usize,
}

/// Cuts at the row with the fewest ink pixels in `[0.2H, 0.45H]`, taking the
/// topmost row on ties.
pub fn split_bands(plate: &GrayImage) -> Result<Bands, SegmentError> {
    let (w, h) = (plate.width(), plate.height());
    if h < MIN_PLATE_HEIGHT {
        return Err(SegmentError::PlateTooSmall(h));
    }
    let mask = binarize_dark(plate);
    let lo = (0.2 * h as f64).ceil() as usize;
    let hi = (0.45 * h as f64).floor() as usize;
    let cut = (lo..=hi)
        .min_by_key(|&y| (0..w).filter(|&x| mask.get(x, y)).count())
        .expect("non-empty search range");
    let header = GrayImage::from_fn(w, cut, |x, y| plate.get(x, y));
    let body = GrayImage::from_fn(w, h - cut, |x, y| plate.get(x, y + cut));
    Ok(Bands { header, body, cut })
}

/// Component-area floor and ceiling as fractions of the body area.
const MIN_AREA_FRACTION: f64 = 0.0015;
const MAX_AREA_FRACTION: f64 = 0.40;
/// Components wider or taller than these shares of the body are frame,
/// divider or border residue.
const MAX_WIDTH_FRACTION: f64 = 0.5;
const MAX_HEIGHT_FRACTION: f64 = 0.9;
/// Components overlapping horizontally by more than this share of the
/// narrower one belong to the same character (dots, hamza).
const MERGE_OVERLAP: f64 = 0.1;

struct Group {
    bbox: BBox,
    area: usize,
}

fn overlap_x(a: &BBox, b: &BBox) -> usize {
    a.right().min(b.right()).saturating_sub(a.x.max(b.x))
}

pub fn segment_chars(body: &GrayImage) -> Vec<CharBox> {
    let (w, h) = (body.width(), body.height());
    let body_area = (w * h) as f64;
    let mask = binarize_dark(body);
    let mut groups: Vec<Group> = connected_components(&mask, Connectivity::Eight)
        .into_iter()
        .filter(|r| {
            let b = &r.bbox;
            let borders = [b.x == 0, b.y == 0, b.right() == w, b.bottom() == h];
            borders.iter().filter(|&&t| t).count() < 2
                && (r.area as f64) <= MAX_AREA_FRACTION * body_area
                && (b.w as f64) <= MAX_WIDTH_FRACTION * w as f64
                && (b.h as f64) <= MAX_HEIGHT_FRACTION * h as f64
        })
        .map(|r| Group { bbox: r.bbox, area: r.area })
        .collect();

    // Merge horizontally overlapping components until no pair qualifies.
    loop {
        groups.sort_by_key(|g| (g.bbox.x, g.bbox.y));
        let mut merged = false;
        'scan: for i in 0..groups.len() {
            for j in i + 1..groups.len() {
                let (a, b) = (&groups[i].bbox, &groups[j].bbox);
                if b.x >= a.right() {
                    break;
                }
                let narrower = a.w.min(b.w) as f64;
                if overlap_x(a, b) as f64 > MERGE_OVERLAP * narrower {
                    let g = groups.remove(j);
                    groups[i].bbox = groups[i].bbox.union(&g.bbox);
                    groups[i].area += g.area;
                    merged = true;
                    break 'scan;
                }
            }
        }
        if !merged {
            break;
        }
    }
    groups.retain(|g| g.area as f64 >= MIN_AREA_FRACTION * body_area);
    if groups.is_empty() {
        return Vec::new();
    }

    // Divider: the widest horizontal gap between consecutive characters.
    let split = groups
        .windows(2)
        .enumerate()
        .map(|(i, pair)| (i + 1, pair[1].bbox.x.saturating_sub(pair[0].bbox.right())))
        .fold(None, |best: Option<(usize, usize)>, (i, gap)| match best {
            Some((_, g)) if g >= gap => best,
            _ => Some((i, gap)),
        })
        .map_or(groups.len(), |(i, _)| i);

    let mut boxes: Vec<CharBox> = groups[..split]
        .iter()
        .enumerate()
        .map(|(i, g)| CharBox { bbox: g.bbox, band: Band::Digit, order_index: i })
        .collect();
    boxes.extend(groups[split..].iter().rev().enumerate().map(|(i, g)| CharBox {
        bbox: g.bbox,
        band: Band::Letter,
        order_index: split + i,
    }));
    boxes
}

/// Ink polarity and levels of an image, from its Otsu split. The larger
/// class is taken as background.
#[derive(Clone, Copy, Debug)]
struct InkModel {
    background: f64,
    ink: f64,
}

impl InkModel {
    fn estimate(img: &GrayImage) -> Option<Self> {
        let hist = histogram(img.pixels().iter().copied());
        let t = otsu_level(&hist)? as usize;
        let class = |range: std::ops::Range<usize>| {
            let n: u64 = hist[range.clone()].iter().sum();
            let s: f64 = range.map(|i| i as f64 * hist[i] as f64).sum();
            (n, s / n as f64)
        };
        let (n_lo, mean_lo) = class(0..t + 1);
        let (n_hi, mean_hi) = class(t + 1..256);
        Some(if n_hi >= n_lo {
            InkModel { background: mean_hi, ink: mean_lo }
        } else {
            InkModel { background: mean_lo, ink: mean_hi }
        })
    }

    fn level(&self, v: u8) -> f64 {
        ((self.background - v as f64) / (self.background - self.ink)).clamp(0.0, 1.0)
    }
}

/// Crops `bbox`, pads to a square with background, resizes bilinearly to
/// 32×32 and maps ink to 1. Ink and background levels come from the whole
/// `body`, so an all-background crop normalizes to zeros.
pub fn normalize_glyph(body: &GrayImage, bbox: &BBox) -> Result<GlyphImage, SegmentError> {
    if !bbox.fits_within(body.width(), body.height()) {
        return Err(SegmentError::OutOfBounds { bbox: *bbox, width: body.width(), height: body.height() });
    }
    let Some(model) = InkModel::estimate(body) else {
        return Ok(GlyphImage::zeros());
    };
    let side = bbox.w.max(bbox.h);
    let (ox, oy) = ((side - bbox.w) / 2, (side - bbox.h) / 2);
    let mut square = vec![0.0f64; side * side];
    for y in 0..bbox.h {
        for x in 0..bbox.w {
            square[(y + oy) * side + x + ox] = model.level(body.get(bbox.x + x, bbox.y + y));
        }
    }
    Ok(GlyphImage(resize_bilinear(&square, side, GLYPH_SIZE)))
}

/// Corner-aligned bilinear resize of a square `src_side`² buffer.
pub fn resize_bilinear(src: &[f64], src_side: usize, dst_side: usize) -> Vec<f64> {
    let scale = if dst_side > 1 { (src_side - 1) as f64 / (dst_side - 1) as f64 } else { 0.0 };
    let at = |x: usize, y: usize| src[y * src_side + x];
    let mut out = Vec::with_capacity(dst_side * dst_side);
    for dy in 0..dst_side {
        let sy = dy as f64 * scale;
        let y0 = (sy.floor() as usize).min(src_side - 1);
        let y1 = (y0 + 1).min(src_side - 1);
        let fy = sy - y0 as f64;
        for dx in 0..dst_side {
            let sx = dx as f64 * scale;
            let x0 = (sx.floor() as usize).min(src_side - 1);
            let x1 = (x0 + 1).min(src_side - 1);
            let fx = sx - x0 as f64;
            let top = at(x0, y0) * (1.0 - fx) + at(x1, y0) * fx;
            let bottom = at(x0, y1) * (1.0 - fx) + at(x1, y1) * fx;
            out.push((top * (1.0 - fy) + bottom * fy).clamp(0.0, 1.0));
        }
    }
    out
}

/// Tight box around the ink of an isolated-character image, ignoring
/// components of fewer than `min_area` pixels (salt-and-pepper specks).
pub fn ink_bbox(img: &GrayImage, min_area: usize) -> Option<BBox> {
    let mask = binarize_dark(img);
    connected_components(&mask, Connectivity::Eight)
        .into_iter()
        .filter(|r| r.area >= min_area)
        .map(|r| r.bbox)
        .reduce(|a, b| a.union(&b))
}

/// Normalizes a single-character image (as produced by the character
/// dataset generator) the same way plate characters are normalized.
pub fn glyph_from_sample(img: &GrayImage) -> GlyphImage {
    match ink_bbox(img, 4) {
        Some(b) => normalize_glyph(img, &b).expect("ink box lies inside the image"),
        None => GlyphImage::zeros(),
    }
}
