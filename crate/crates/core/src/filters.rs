//! Sobel gradients, median smoothing and Otsu binarization.

use thiserror::Error;

use crate::raster::{BinaryImage, GrayImage};

#[derive(Debug, Error, PartialEq, Eq)]
pub enum FilterError {
    #[error("image is {width}x{height}; the Sobel operator needs at least 3x3")]
    TooSmall { width: usize, height: usize },
    #[error("median window must be odd and at least 3, got {0}")]
    BadWindow(usize),
}

/// Per-pixel gradient magnitude, kept at full real-valued range.
#[derive(Clone, Debug, PartialEq)]
pub struct GradientMap {
    width: usize,
    height: usize,
    magnitudes: Vec<f64>,
}

impl GradientMap {
    /// Builds a map from raw magnitudes; negative or non-finite values are rejected.
    pub fn new(width: usize, height: usize, magnitudes: Vec<f64>) -> Option<Self> {
        let ok = width > 0
            && height > 0
            && magnitudes.len() == width * height
            && magnitudes.iter().all(|m| m.is_finite() && *m >= 0.0);
        ok.then_some(Self { width, height, magnitudes })
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn magnitudes(&self) -> &[f64] {
        &self.magnitudes
    }

    pub fn get(&self, x: usize, y: usize) -> f64 {
        self.magnitudes[y * self.width + x]
    }

    pub fn max(&self) -> f64 {
        self.magnitudes.iter().copied().fold(0.0, f64::max)
    }

    /// Linear rescale to 8 bits (max magnitude → 255) for visual dumps.
    pub fn to_gray(&self) -> GrayImage {
        let max = self.max();
        GrayImage::from_fn(self.width, self.height, |x, y| {
            if max > 0.0 {
                (self.get(x, y) / max * 255.0).round() as u8
            } else {
                0
            }
        })
    }

    /// Histogram bin of each magnitude: `floor(m / max * 255)`, all zero for a zero map.
    pub fn quantize(&self) -> Vec<u8> {
        let max = self.max();
        self.magnitudes
            .iter()
            .map(|&m| if max > 0.0 { ((m / max) * 255.0).floor().min(255.0) as u8 } else { 0 })
            .collect()
    }
}

const SOBEL_X: [[i32; 3]; 3] = [[-1, 0, 1], [-2, 0, 2], [-1, 0, 1]];
const SOBEL_Y: [[i32; 3]; 3] = [[-1, -2, -1], [0, 0, 0], [1, 2, 1]];

pub fn sobel(img: &GrayImage) -> Result<GradientMap, FilterError> {
    let (w, h) = (img.width(), img.height());
    if w < 3 || h < 3 {
        return Err(FilterError::TooSmall { width: w, height: h });
    }
    let mut magnitudes = Vec::with_capacity(w * h);
    for y in 0..h as isize {
        for x in 0..w as isize {
            let (mut gx, mut gy) = (0i32, 0i32);
            for (ky, (rx, ry)) in SOBEL_X.iter().zip(&SOBEL_Y).enumerate() {
                for kx in 0..3 {
                    let v = img.get_clamped(x + kx as isize - 1, y + ky as isize - 1) as i32;
                    gx += rx[kx] * v;
                    gy += ry[kx] * v;
                }
            }
            magnitudes.push(((gx * gx + gy * gy) as f64).sqrt());
        }
    }
    Ok(GradientMap { width: w, height: h, magnitudes })
}

/// Median over a `window`×`window` neighbourhood with edge replication.
pub fn median_filter(img: &GrayImage, window: usize) -> Result<GrayImage, FilterError> {
    if window < 3 || window % 2 == 0 {
        return Err(FilterError::BadWindow(window));
    }
    let r = (window / 2) as isize;
    let mid = window * window / 2;
    let mut buf = Vec::with_capacity(window * window);
    Ok(GrayImage::from_fn(img.width(), img.height(), |x, y| {
        buf.clear();
        for dy in -r..=r {
            for dx in -r..=r {
                buf.push(img.get_clamped(x as isize + dx, y as isize + dy));
            }
        }
        *buf.select_nth_unstable(mid).1
    }))
}

/// Otsu's threshold over a 256-bin histogram.
///
/// Returns the bin `t` maximizing between-class variance where the classes are
/// `[0, t]` and `(t, 255]`; the lowest such `t` wins ties. `None` when no split
/// separates anything (empty or single-valued histogram).
pub fn otsu_level(hist: &[u64; 256]) -> Option<u8> {
    let total: u64 = hist.iter().sum();
    if total == 0 {
        return None;
    }
    let total_f = total as f64;
    let sum_all: f64 = hist.iter().enumerate().map(|(i, &c)| i as f64 * c as f64).sum();
    let (mut w0, mut sum0) = (0u64, 0.0f64);
    let mut best: Option<(u8, f64)> = None;
    for t in 0..255usize {
        w0 += hist[t];
        sum0 += t as f64 * hist[t] as f64;
        let w1 = total - w0;
        if w0 == 0 || w1 == 0 {
            continue;
        }
        let mu0 = sum0 / w0 as f64;
        let mu1 = (sum_all - sum0) / w1 as f64;
        let var = (w0 as f64 / total_f) * (w1 as f64 / total_f) * (mu0 - mu1) * (mu0 - mu1);
        if best.is_none_or(|(_, b)| var > b) {
            best = Some((t as u8, var));
        }
    }
    best.filter(|&(_, v)| v > 0.0).map(|(t, _)| t)
}

pub fn histogram(values: impl IntoIterator<Item = u8>) -> [u64; 256] {
    let mut hist = [0u64; 256];
    for v in values {
        hist[v as usize] += 1;
    }
    hist
}

/// Binarizes a gradient map: foreground where the quantized magnitude exceeds
/// the Otsu bin. A constant map yields all background.
pub fn otsu_threshold(g: &GradientMap) -> BinaryImage {
    let bins = g.quantize();
    let bits = match otsu_level(&histogram(bins.iter().copied())) {
        Some(t) => bins.iter().map(|&b| b > t).collect(),
        None => vec![false; bins.len()],
    };
    BinaryImage::new(g.width, g.height, bits).expect("dimensions preserved")
}

/// Otsu split of a gray image with dark pixels as foreground (`value <= t`).
/// A single-valued image yields all background.
pub fn binarize_dark(img: &GrayImage) -> BinaryImage {
    let bits = match otsu_level(&histogram(img.pixels().iter().copied())) {
        Some(t) => img.pixels().iter().map(|&v| v <= t).collect(),
        None => vec![false; img.pixels().len()],
    };
    BinaryImage::new(img.width(), img.height(), bits).expect("dimensions preserved")
}
