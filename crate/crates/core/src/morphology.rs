//! Binary morphology, hole filling and connected-component labeling.
//!
//! Dilation and erosion follow the Minkowski pairing: dilation translates the
//! reflected element, erosion the element itself. Pixels outside the image
//! are background for both operators, so erosion shrinks masks at the border.

use std::collections::VecDeque;

use thiserror::Error;

use crate::geometry::BBox;
use crate::raster::BinaryImage;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum MorphologyError {
    #[error("structuring element dimensions must be odd, got {0}x{1}")]
    EvenDimensions(usize, usize),
    #[error("structuring element mask has {actual} bits, expected {expected}")]
    BadMask { expected: usize, actual: usize },
    #[error("structuring element origin must be set")]
    OriginUnset,
}

/// Odd-sized boolean mask centred on its origin.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct StructuringElement {
    width: usize,
    height: usize,
    bits: Vec<bool>,
    full: bool,
}

impl StructuringElement {
    pub fn new(width: usize, height: usize, bits: Vec<bool>) -> Result<Self, MorphologyError> {
        if width % 2 == 0 || height % 2 == 0 {
            return Err(MorphologyError::EvenDimensions(width, height));
        }
        if bits.len() != width * height {
            return Err(MorphologyError::BadMask { expected: width * height, actual: bits.len() });
        }
        if !bits[(height / 2) * width + width / 2] {
            return Err(MorphologyError::OriginUnset);
        }
        let full = bits.iter().all(|&b| b);
        Ok(Self { width, height, bits, full })
    }

    /// Full `width`×`height` rectangle.
    pub fn rect(width: usize, height: usize) -> Result<Self, MorphologyError> {
        Self::new(width, height, vec![true; width * height])
    }

    pub fn square(side: usize) -> Result<Self, MorphologyError> {
        Self::rect(side, side)
    }

    /// Horizontal line one pixel tall.
    pub fn horizontal_line(length: usize) -> Result<Self, MorphologyError> {
        Self::rect(length, 1)
    }

    /// Vertical line one pixel wide.
    pub fn vertical_line(length: usize) -> Result<Self, MorphologyError> {
        Self::rect(1, length)
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn get(&self, x: usize, y: usize) -> bool {
        self.bits[y * self.width + x]
    }

    pub fn is_full_rect(&self) -> bool {
        self.full
    }

    /// Point reflection through the origin.
    pub fn reflect(&self) -> Self {
        let mut bits = self.bits.clone();
        bits.reverse();
        Self { bits, ..self.clone() }
    }

    /// Set offsets `(dx, dy)` relative to the origin.
    pub fn offsets(&self) -> Vec<(isize, isize)> {
        let (rx, ry) = ((self.width / 2) as isize, (self.height / 2) as isize);
        let mut out = Vec::new();
        for y in 0..self.height {
            for x in 0..self.width {
                if self.get(x, y) {
                    out.push((x as isize - rx, y as isize - ry));
                }
            }
        }
        out
    }
}

/// One-dimensional pass over rows with a centred `[x - r, x + r]` window:
/// any foreground for dilation, a fully in-bounds foreground span for erosion.
fn row_pass(img: &BinaryImage, r: usize, erode: bool) -> BinaryImage {
    let (w, h) = (img.width(), img.height());
    let mut out = BinaryImage::empty(w, h);
    let mut prefix = vec![0usize; w + 1];
    for y in 0..h {
        for x in 0..w {
            prefix[x + 1] = prefix[x] + img.get(x, y) as usize;
        }
        for x in 0..w {
            let lo = x.saturating_sub(r);
            let hi = (x + r + 1).min(w);
            let count = prefix[hi] - prefix[lo];
            let hit = if erode {
                // Out-of-bounds samples are background, so a clipped window fails.
                x >= r && x + r < w && count == 2 * r + 1
            } else {
                count > 0
            };
            out.set(x, y, hit);
        }
    }
    out
}

fn transpose(img: &BinaryImage) -> BinaryImage {
    BinaryImage::from_fn(img.height(), img.width(), |x, y| img.get(y, x))
}

fn rect_pass(img: &BinaryImage, se: &StructuringElement, erode: bool) -> BinaryImage {
    let horizontal = row_pass(img, se.width() / 2, erode);
    if se.height() == 1 {
        return horizontal;
    }
    transpose(&row_pass(&transpose(&horizontal), se.height() / 2, erode))
}

pub fn dilate(img: &BinaryImage, se: &StructuringElement) -> BinaryImage {
    if se.is_full_rect() {
        return rect_pass(img, se, false);
    }
    let (w, h) = (img.width() as isize, img.height() as isize);
    let offsets = se.offsets();
    let mut out = BinaryImage::empty(img.width(), img.height());
    for y in 0..h {
        for x in 0..w {
            if !img.get(x as usize, y as usize) {
                continue;
            }
            for &(dx, dy) in &offsets {
                let (px, py) = (x + dx, y + dy);
                if px >= 0 && py >= 0 && px < w && py < h {
                    out.set(px as usize, py as usize, true);
                }
            }
        }
    }
    out
}

pub fn erode(img: &BinaryImage, se: &StructuringElement) -> BinaryImage {
    if se.is_full_rect() {
        return rect_pass(img, se, true);
    }
    let offsets = se.offsets();
    BinaryImage::from_fn(img.width(), img.height(), |x, y| {
        offsets.iter().all(|&(dx, dy)| img.get_or_background(x as isize + dx, y as isize + dy))
    })
}

/// Erosion followed by dilation.
pub fn open(img: &BinaryImage, se: &StructuringElement) -> BinaryImage {
    dilate(&erode(img, se), se)
}

/// Dilation followed by erosion.
pub fn close(img: &BinaryImage, se: &StructuringElement) -> BinaryImage {
    erode(&dilate(img, se), se)
}

const N4: [(isize, isize); 4] = [(1, 0), (-1, 0), (0, 1), (0, -1)];
const N8: [(isize, isize); 8] = [(1, 0), (-1, 0), (0, 1), (0, -1), (1, 1), (1, -1), (-1, 1), (-1, -1)];

/// Background not 4-connected to the image border becomes foreground.
pub fn fill_holes(img: &BinaryImage) -> BinaryImage {
    let (w, h) = (img.width(), img.height());
    let mut outside = vec![false; w * h];
    let mut queue = VecDeque::new();
    let seed = |x: usize, y: usize, outside: &mut Vec<bool>, queue: &mut VecDeque<(usize, usize)>| {
        let i = y * w + x;
        if !img.get(x, y) && !outside[i] {
            outside[i] = true;
            queue.push_back((x, y));
        }
    };
    for x in 0..w {
        seed(x, 0, &mut outside, &mut queue);
        seed(x, h - 1, &mut outside, &mut queue);
    }
    for y in 0..h {
        seed(0, y, &mut outside, &mut queue);
        seed(w - 1, y, &mut outside, &mut queue);
    }
    while let Some((x, y)) = queue.pop_front() {
        for (dx, dy) in N4 {
            let (nx, ny) = (x as isize + dx, y as isize + dy);
            if nx < 0 || ny < 0 || nx >= w as isize || ny >= h as isize {
                continue;
            }
            seed(nx as usize, ny as usize, &mut outside, &mut queue);
        }
    }
    BinaryImage::from_fn(w, h, |x, y| !outside[y * w + x])
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Connectivity {
    Four,
    Eight,
}

impl Connectivity {
    fn neighbours(self) -> &'static [(isize, isize)] {
        match self {
            Connectivity::Four => &N4,
            Connectivity::Eight => &N8,
        }
    }
}

/// A labeled connected component.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Region {
    /// 1-based, assigned in raster order of each component's first pixel.
    pub label: u32,
    pub bbox: BBox,
    pub area: usize,
    /// Member pixels `(x, y)` in discovery order.
    pub pixels: Vec<(usize, usize)>,
}

impl Region {
    /// Area over bounding-box area.
    pub fn fill_ratio(&self) -> f64 {
        self.area as f64 / self.bbox.area() as f64
    }
}

pub fn connected_components(img: &BinaryImage, connectivity: Connectivity) -> Vec<Region> {
    let (w, h) = (img.width(), img.height());
    let mut labels = vec![0u32; w * h];
    let mut regions = Vec::new();
    let mut queue = VecDeque::new();
    for sy in 0..h {
        for sx in 0..w {
            if !img.get(sx, sy) || labels[sy * w + sx] != 0 {
                continue;
            }
            let label = regions.len() as u32 + 1;
            labels[sy * w + sx] = label;
            queue.push_back((sx, sy));
            let mut pixels = Vec::new();
            let (mut x0, mut y0, mut x1, mut y1) = (sx, sy, sx, sy);
            while let Some((x, y)) = queue.pop_front() {
                pixels.push((x, y));
                x0 = x0.min(x);
                x1 = x1.max(x);
                y0 = y0.min(y);
                y1 = y1.max(y);
                for &(dx, dy) in connectivity.neighbours() {
                    let (nx, ny) = (x as isize + dx, y as isize + dy);
                    if nx < 0 || ny < 0 || nx >= w as isize || ny >= h as isize {
                        continue;
                    }
                    let i = ny as usize * w + nx as usize;
                    if img.bits()[i] && labels[i] == 0 {
                        labels[i] = label;
                        queue.push_back((nx as usize, ny as usize));
                    }
                }
            }
            regions.push(Region {
                label,
                bbox: BBox::new(x0, y0, x1 - x0 + 1, y1 - y0 + 1),
                area: pixels.len(),
                pixels,
            });
        }
    }
    regions
}
