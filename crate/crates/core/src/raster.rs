//! Raster types, luma conversion and binary PNM (P5/P6) I/O.

use std::fs;
use std::io::{self, Write};
use std::path::Path;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum RasterError {
    #[error("image dimensions must be at least 1x1, got {width}x{height}")]
    EmptyImage { width: usize, height: usize },
    #[error("pixel buffer holds {actual} values, expected {expected}")]
    BufferSize { expected: usize, actual: usize },
}

#[derive(Debug, Error)]
pub enum PnmError {
    #[error("i/o error")]
    Io(#[from] io::Error),
    #[error("unsupported magic number {0:?} (only P5 and P6 are supported)")]
    UnsupportedMagic(String),
    #[error("malformed header: {0}")]
    MalformedHeader(&'static str),
    #[error("unsupported maxval {0} (only 255 is supported)")]
    UnsupportedMaxval(u32),
    #[error("truncated payload: expected {expected} bytes, found {actual}")]
    Truncated { expected: usize, actual: usize },
    #[error(transparent)]
    Raster(#[from] RasterError),
}

fn check_dims(width: usize, height: usize, channels: usize, len: usize) -> Result<(), RasterError> {
    if width == 0 || height == 0 {
        return Err(RasterError::EmptyImage { width, height });
    }
    let expected = width * height * channels;
    if expected != len {
        return Err(RasterError::BufferSize { expected, actual: len });
    }
    Ok(())
}

/// Row-major 8-bit RGB image.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct RgbImage {
    width: usize,
    height: usize,
    pixels: Vec<u8>,
}

impl RgbImage {
    pub fn new(width: usize, height: usize, pixels: Vec<u8>) -> Result<Self, RasterError> {
        check_dims(width, height, 3, pixels.len())?;
        Ok(Self { width, height, pixels })
    }

    pub fn filled(width: usize, height: usize, rgb: [u8; 3]) -> Self {
        assert!(width > 0 && height > 0, "image must be non-empty");
        let pixels = rgb.iter().copied().cycle().take(width * height * 3).collect();
        Self { width, height, pixels }
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn pixels(&self) -> &[u8] {
        &self.pixels
    }

    pub fn get(&self, x: usize, y: usize) -> [u8; 3] {
        let i = (y * self.width + x) * 3;
        [self.pixels[i], self.pixels[i + 1], self.pixels[i + 2]]
    }

    pub fn put(&mut self, x: usize, y: usize, rgb: [u8; 3]) {
        let i = (y * self.width + x) * 3;
        self.pixels[i..i + 3].copy_from_slice(&rgb);
    }
}

/// Row-major 8-bit grayscale image.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct GrayImage {
    width: usize,
    height: usize,
    pixels: Vec<u8>,
}

impl GrayImage {
    pub fn new(width: usize, height: usize, pixels: Vec<u8>) -> Result<Self, RasterError> {
        check_dims(width, height, 1, pixels.len())?;
        Ok(Self { width, height, pixels })
    }

    pub fn filled(width: usize, height: usize, value: u8) -> Self {
        assert!(width > 0 && height > 0, "image must be non-empty");
        Self { width, height, pixels: vec![value; width * height] }
    }

    pub fn from_fn(width: usize, height: usize, mut f: impl FnMut(usize, usize) -> u8) -> Self {
        assert!(width > 0 && height > 0, "image must be non-empty");
        let mut pixels = Vec::with_capacity(width * height);
        for y in 0..height {
            for x in 0..width {
                pixels.push(f(x, y));
            }
        }
        Self { width, height, pixels }
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn pixels(&self) -> &[u8] {
        &self.pixels
    }

    #[inline]
    pub fn get(&self, x: usize, y: usize) -> u8 {
        self.pixels[y * self.width + x]
    }

    /// Pixel lookup with coordinates clamped to the image (edge replication).
    #[inline]
    pub fn get_clamped(&self, x: isize, y: isize) -> u8 {
        let x = x.clamp(0, self.width as isize - 1) as usize;
        let y = y.clamp(0, self.height as isize - 1) as usize;
        self.pixels[y * self.width + x]
    }

    #[inline]
    pub fn put(&mut self, x: usize, y: usize, value: u8) {
        self.pixels[y * self.width + x] = value;
    }

    /// Promotes to RGB with R = G = B.
    pub fn to_rgb(&self) -> RgbImage {
        let pixels = self.pixels.iter().flat_map(|&v| [v, v, v]).collect();
        RgbImage { width: self.width, height: self.height, pixels }
    }
}

/// Row-major boolean mask; `true` is foreground.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct BinaryImage {
    width: usize,
    height: usize,
    bits: Vec<bool>,
}

impl BinaryImage {
    pub fn new(width: usize, height: usize, bits: Vec<bool>) -> Result<Self, RasterError> {
        check_dims(width, height, 1, bits.len())?;
        Ok(Self { width, height, bits })
    }

    pub fn empty(width: usize, height: usize) -> Self {
        assert!(width > 0 && height > 0, "image must be non-empty");
        Self { width, height, bits: vec![false; width * height] }
    }

    pub fn from_fn(width: usize, height: usize, mut f: impl FnMut(usize, usize) -> bool) -> Self {
        assert!(width > 0 && height > 0, "image must be non-empty");
        let mut bits = Vec::with_capacity(width * height);
        for y in 0..height {
            for x in 0..width {
                bits.push(f(x, y));
            }
        }
        Self { width, height, bits }
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn bits(&self) -> &[bool] {
        &self.bits
    }

    #[inline]
    pub fn get(&self, x: usize, y: usize) -> bool {
        self.bits[y * self.width + x]
    }

    /// Out-of-bounds coordinates read as background.
    #[inline]
    pub fn get_or_background(&self, x: isize, y: isize) -> bool {
        if x < 0 || y < 0 || x >= self.width as isize || y >= self.height as isize {
            false
        } else {
            self.bits[y as usize * self.width + x as usize]
        }
    }

    #[inline]
    pub fn set(&mut self, x: usize, y: usize, value: bool) {
        self.bits[y * self.width + x] = value;
    }

    pub fn count_foreground(&self) -> usize {
        self.bits.iter().filter(|&&b| b).count()
    }

    pub fn invert(&self) -> Self {
        Self { width: self.width, height: self.height, bits: self.bits.iter().map(|b| !b).collect() }
    }

    /// Pixels set here and clear in `other`. Both masks must share dimensions.
    pub fn minus(&self, other: &BinaryImage) -> Self {
        assert_eq!((self.width, self.height), (other.width, other.height));
        let bits = self.bits.iter().zip(&other.bits).map(|(&a, &b)| a && !b).collect();
        Self { width: self.width, height: self.height, bits }
    }

    pub fn union(&self, other: &BinaryImage) -> Self {
        assert_eq!((self.width, self.height), (other.width, other.height));
        let bits = self.bits.iter().zip(&other.bits).map(|(&a, &b)| a || b).collect();
        Self { width: self.width, height: self.height, bits }
    }

    pub fn intersect(&self, other: &BinaryImage) -> Self {
        assert_eq!((self.width, self.height), (other.width, other.height));
        let bits = self.bits.iter().zip(&other.bits).map(|(&a, &b)| a && b).collect();
        Self { width: self.width, height: self.height, bits }
    }

    /// `true` when every foreground pixel of `self` is also foreground in `other`.
    pub fn is_subset_of(&self, other: &BinaryImage) -> bool {
        self.bits.iter().zip(&other.bits).all(|(&a, &b)| !a || b)
    }

    /// Foreground as 255, background as 0.
    pub fn to_gray(&self) -> GrayImage {
        let pixels = self.bits.iter().map(|&b| if b { 255 } else { 0 }).collect();
        GrayImage { width: self.width, height: self.height, pixels }
    }
}

/// Either kind of decoded PNM raster.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum PnmImage {
    Gray(GrayImage),
    Rgb(RgbImage),
}

impl PnmImage {
    pub fn into_gray(self) -> GrayImage {
        match self {
            PnmImage::Gray(g) => g,
            PnmImage::Rgb(rgb) => to_gray(&rgb),
        }
    }

    pub fn into_rgb(self) -> RgbImage {
        match self {
            PnmImage::Gray(g) => g.to_rgb(),
            PnmImage::Rgb(rgb) => rgb,
        }
    }
}

impl From<GrayImage> for PnmImage {
    fn from(img: GrayImage) -> Self {
        PnmImage::Gray(img)
    }
}

impl From<RgbImage> for PnmImage {
    fn from(img: RgbImage) -> Self {
        PnmImage::Rgb(img)
    }
}

/// BT.601 luma, rounded half away from zero.
///
/// Computed in integer thousandths so that values landing exactly on `.5`
/// round the way the real-valued formula says they should.
#[inline]
pub fn luma(r: u8, g: u8, b: u8) -> u8 {
    let n = 299 * r as u32 + 587 * g as u32 + 114 * b as u32;
    ((n + 500) / 1000).min(255) as u8
}

pub fn to_gray(img: &RgbImage) -> GrayImage {
    let pixels = img.pixels.chunks_exact(3).map(|p| luma(p[0], p[1], p[2])).collect();
    GrayImage { width: img.width, height: img.height, pixels }
}

struct HeaderCursor<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl HeaderCursor<'_> {
    fn skip_whitespace_and_comments(&mut self) {
        while self.pos < self.bytes.len() {
            let c = self.bytes[self.pos];
            if c == b'#' {
                while self.pos < self.bytes.len() && self.bytes[self.pos] != b'\n' {
                    self.pos += 1;
                }
            } else if c.is_ascii_whitespace() {
                self.pos += 1;
            } else {
                break;
            }
        }
    }

    fn number(&mut self, what: &'static str) -> Result<u32, PnmError> {
        self.skip_whitespace_and_comments();
        let start = self.pos;
        while self.pos < self.bytes.len() && self.bytes[self.pos].is_ascii_digit() {
            self.pos += 1;
        }
        if start == self.pos {
            return Err(PnmError::MalformedHeader(what));
        }
        std::str::from_utf8(&self.bytes[start..self.pos])
            .ok()
            .and_then(|s| s.parse().ok())
            .ok_or(PnmError::MalformedHeader(what))
    }
}

/// Decodes a binary P5 or P6 buffer with maxval 255.
pub fn decode_pnm(bytes: &[u8]) -> Result<PnmImage, PnmError> {
    if bytes.len() < 2 {
        return Err(PnmError::MalformedHeader("missing magic number"));
    }
    let channels = match &bytes[..2] {
        b"P5" => 1,
        b"P6" => 3,
        other => return Err(PnmError::UnsupportedMagic(String::from_utf8_lossy(other).into_owned())),
    };
    let mut cur = HeaderCursor { bytes, pos: 2 };
    let width = cur.number("width")? as usize;
    let height = cur.number("height")? as usize;
    let maxval = cur.number("maxval")?;
    if width == 0 || height == 0 {
        return Err(PnmError::MalformedHeader("zero dimension"));
    }
    if maxval != 255 {
        return Err(PnmError::UnsupportedMaxval(maxval));
    }
    // Exactly one whitespace byte separates the header from the payload.
    match bytes.get(cur.pos) {
        Some(c) if c.is_ascii_whitespace() => cur.pos += 1,
        _ => return Err(PnmError::MalformedHeader("missing separator before payload")),
    }
    let expected = width * height * channels;
    let payload = &bytes[cur.pos..];
    if payload.len() < expected {
        return Err(PnmError::Truncated { expected, actual: payload.len() });
    }
    let data = payload[..expected].to_vec();
    Ok(if channels == 1 {
        PnmImage::Gray(GrayImage::new(width, height, data)?)
    } else {
        PnmImage::Rgb(RgbImage::new(width, height, data)?)
    })
}

pub fn read_pnm(path: impl AsRef<Path>) -> Result<PnmImage, PnmError> {
    decode_pnm(&fs::read(path)?)
}

pub fn encode_pnm(img: &PnmImage) -> Vec<u8> {
    let (magic, w, h, data) = match img {
        PnmImage::Gray(g) => ("P5", g.width, g.height, &g.pixels),
        PnmImage::Rgb(c) => ("P6", c.width, c.height, &c.pixels),
    };
    let mut out = format!("{magic}\n{w} {h}\n255\n").into_bytes();
    out.extend_from_slice(data);
    out
}

pub fn write_pnm(img: &PnmImage, path: impl AsRef<Path>) -> Result<(), PnmError> {
    let mut f = fs::File::create(path)?;
    f.write_all(&encode_pnm(img))?;
    Ok(())
}

pub fn write_pgm(img: &GrayImage, path: impl AsRef<Path>) -> Result<(), PnmError> {
    let mut f = fs::File::create(path)?;
    f.write_all(format!("P5\n{} {}\n255\n", img.width, img.height).as_bytes())?;
    f.write_all(&img.pixels)?;
    Ok(())
}

pub fn write_ppm(img: &RgbImage, path: impl AsRef<Path>) -> Result<(), PnmError> {
    let mut f = fs::File::create(path)?;
    f.write_all(format!("P6\n{} {}\n255\n", img.width, img.height).as_bytes())?;
    f.write_all(&img.pixels)?;
    Ok(())
}
