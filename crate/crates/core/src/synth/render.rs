//! Ink-coverage canvases and affine template stamping.

use rand::Rng;
use rand_distr::{Distribution, Normal};

use crate::geometry::BBox;
use crate::raster::{BinaryImage, GrayImage};

/// Where a template lands: its centre maps to `(cx, cy)`, scaled then
/// rotated counter-clockwise by `rotation` radians.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Placement {
    pub cx: f64,
    pub cy: f64,
    pub scale_x: f64,
    pub scale_y: f64,
    pub rotation: f64,
}

impl Placement {
    pub fn centered(cx: f64, cy: f64, scale: f64) -> Self {
        Self { cx, cy, scale_x: scale, scale_y: scale, rotation: 0.0 }
    }

    /// Destination point to template coordinates.
    fn inverse(&self, tw: usize, th: usize, x: f64, y: f64) -> (f64, f64) {
        let (dx, dy) = (x - self.cx, y - self.cy);
        let (s, c) = self.rotation.sin_cos();
        let (rx, ry) = (c * dx + s * dy, -s * dx + c * dy);
        (rx / self.scale_x + tw as f64 / 2.0, ry / self.scale_y + th as f64 / 2.0)
    }

    fn forward(&self, tw: usize, th: usize, u: f64, v: f64) -> (f64, f64) {
        let (px, py) = ((u - tw as f64 / 2.0) * self.scale_x, (v - th as f64 / 2.0) * self.scale_y);
        let (s, c) = self.rotation.sin_cos();
        (c * px - s * py + self.cx, s * px + c * py + self.cy)
    }
}

/// Bilinear sample of a binary image at continuous coordinates (pixel
/// centres at half-integers); outside is 0.
pub fn sample_binary(img: &BinaryImage, u: f64, v: f64) -> f64 {
    let (fx, fy) = (u - 0.5, v - 0.5);
    let (x0, y0) = (fx.floor(), fy.floor());
    let (ax, ay) = (fx - x0, fy - y0);
    let at = |x: f64, y: f64| -> f64 { if img.get_or_background(x as isize, y as isize) { 1.0 } else { 0.0 } };
    let top = at(x0, y0) * (1.0 - ax) + at(x0 + 1.0, y0) * ax;
    let bottom = at(x0, y0 + 1.0) * (1.0 - ax) + at(x0 + 1.0, y0 + 1.0) * ax;
    top * (1.0 - ay) + bottom * ay
}

/// Bilinear sample of a gray image; `None` outside its extent.
pub fn sample_gray(img: &GrayImage, u: f64, v: f64) -> Option<f64> {
    if u < 0.0 || v < 0.0 || u > img.width() as f64 || v > img.height() as f64 {
        return None;
    }
    let (fx, fy) = (u - 0.5, v - 0.5);
    let (x0, y0) = (fx.floor(), fy.floor());
    let (ax, ay) = (fx - x0, fy - y0);
    let at = |x: f64, y: f64| img.get_clamped(x as isize, y as isize) as f64;
    let top = at(x0, y0) * (1.0 - ax) + at(x0 + 1.0, y0) * ax;
    let bottom = at(x0, y0 + 1.0) * (1.0 - ax) + at(x0 + 1.0, y0 + 1.0) * ax;
    Some(top * (1.0 - ay) + bottom * ay)
}

/// Axis-aligned bounds of a `w`×`h` rectangle after `map`.
pub fn mapped_bounds(w: f64, h: f64, map: impl Fn(f64, f64) -> (f64, f64)) -> (f64, f64, f64, f64) {
    let pts = [map(0.0, 0.0), map(w, 0.0), map(0.0, h), map(w, h)];
    let min_x = pts.iter().map(|p| p.0).fold(f64::INFINITY, f64::min);
    let max_x = pts.iter().map(|p| p.0).fold(f64::NEG_INFINITY, f64::max);
    let min_y = pts.iter().map(|p| p.1).fold(f64::INFINITY, f64::min);
    let max_y = pts.iter().map(|p| p.1).fold(f64::NEG_INFINITY, f64::max);
    (min_x, min_y, max_x, max_y)
}

/// Ink coverage in `[0, 1]` per pixel.
#[derive(Clone, Debug)]
pub struct Canvas {
    width: usize,
    height: usize,
    cov: Vec<f64>,
}

impl Canvas {
    pub fn new(width: usize, height: usize) -> Self {
        Self { width, height, cov: vec![0.0; width * height] }
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn get(&self, x: usize, y: usize) -> f64 {
        self.cov[y * self.width + x]
    }

    pub fn fill_rect(&mut self, x0: usize, y0: usize, x1: usize, y1: usize) {
        for y in y0..y1.min(self.height) {
            for x in x0..x1.min(self.width) {
                self.cov[y * self.width + x] = 1.0;
            }
        }
    }

    /// Draws `tpl` at `p`, keeping the maximum coverage. Returns the box of
    /// pixels this stamp covers by at least one half, if any.
    pub fn stamp(&mut self, tpl: &BinaryImage, p: &Placement) -> Option<BBox> {
        let (tw, th) = (tpl.width(), tpl.height());
        let (x0, y0, x1, y1) = mapped_bounds(tw as f64, th as f64, |u, v| p.forward(tw, th, u, v));
        let xs = (x0.floor().max(0.0) as usize)..(x1.ceil().max(0.0) as usize).min(self.width);
        let ys = (y0.floor().max(0.0) as usize)..(y1.ceil().max(0.0) as usize).min(self.height);
        let mut ink: Option<BBox> = None;
        for y in ys {
            for x in xs.clone() {
                let (u, v) = p.inverse(tw, th, x as f64 + 0.5, y as f64 + 0.5);
                let c = sample_binary(tpl, u, v);
                if c <= 0.0 {
                    continue;
                }
                let cell = &mut self.cov[y * self.width + x];
                *cell = cell.max(c);
                if c >= 0.5 {
                    let px = BBox::new(x, y, 1, 1);
                    ink = Some(ink.map_or(px, |b| b.union(&px)));
                }
            }
        }
        ink
    }

    /// Blends `ink` over `background` by coverage.
    pub fn render(&self, background: f64, ink: f64) -> Vec<f64> {
        self.cov.iter().map(|&c| background + (ink - background) * c).collect()
    }
}

pub fn add_gaussian_noise(values: &mut [f64], sigma: f64, rng: &mut impl Rng) {
    if sigma <= 0.0 {
        return;
    }
    let normal = Normal::new(0.0, sigma).expect("positive sigma");
    for v in values {
        *v += normal.sample(rng);
    }
}

/// Sets a `rate` share of pixels to black or white at random.
pub fn add_salt_pepper(values: &mut [f64], rate: f64, rng: &mut impl Rng) {
    if rate <= 0.0 {
        return;
    }
    for v in values {
        if rng.random::<f64>() < rate {
            *v = if rng.random::<bool>() { 255.0 } else { 0.0 };
        }
    }
}

pub fn quantize(values: &[f64]) -> Vec<u8> {
    values.iter().map(|v| v.round().clamp(0.0, 255.0) as u8).collect()
}
