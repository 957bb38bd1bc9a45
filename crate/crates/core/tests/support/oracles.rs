//! Brute-force definitions of the raster operators.

use std::collections::BTreeSet;

use eglpr::morphology::StructuringElement;
use eglpr::raster::{BinaryImage, GrayImage};
use rand::Rng;
use rand_chacha::ChaCha8Rng;

pub fn random_binary(rng: &mut ChaCha8Rng, w: usize, h: usize) -> BinaryImage {
    let density = rng.random_range(0.1..0.7);
    BinaryImage::from_fn(w, h, |_, _| rng.random_bool(density))
}

/// Odd sides up to 7, centre always set; about a third are full rectangles.
pub fn random_se(rng: &mut ChaCha8Rng) -> StructuringElement {
    let (w, h) = (2 * rng.random_range(0..4) + 1, 2 * rng.random_range(0..4) + 1);
    if rng.random_bool(0.3) {
        return StructuringElement::rect(w, h).unwrap();
    }
    let mut bits: Vec<bool> = (0..w * h).map(|_| rng.random_bool(0.5)).collect();
    bits[(h / 2) * w + w / 2] = true;
    StructuringElement::new(w, h, bits).unwrap()
}

pub fn random_gray(rng: &mut ChaCha8Rng) -> GrayImage {
    let (w, h) = (rng.random_range(3..=16), rng.random_range(3..=16));
    GrayImage::from_fn(w, h, |_, _| rng.random())
}

pub fn at(img: &BinaryImage, x: isize, y: isize) -> bool {
    x >= 0 && y >= 0 && (x as usize) < img.width() && (y as usize) < img.height() && img.get(x as usize, y as usize)
}

pub fn se_points(se: &StructuringElement) -> Vec<(isize, isize)> {
    let (cx, cy) = ((se.width() / 2) as isize, (se.height() / 2) as isize);
    let mut v = Vec::new();
    for y in 0..se.height() {
        for x in 0..se.width() {
            if se.get(x, y) {
                v.push((x as isize - cx, y as isize - cy));
            }
        }
    }
    v
}

/// Union of the element translated to every foreground pixel.
pub fn dilate_oracle(img: &BinaryImage, se: &StructuringElement) -> BinaryImage {
    let pts = se_points(se);
    BinaryImage::from_fn(img.width(), img.height(), |x, y| {
        pts.iter().any(|&(dx, dy)| at(img, x as isize - dx, y as isize - dy))
    })
}

/// Pixels where the translated element lies inside the foreground.
pub fn erode_oracle(img: &BinaryImage, se: &StructuringElement) -> BinaryImage {
    let pts = se_points(se);
    BinaryImage::from_fn(img.width(), img.height(), |x, y| {
        pts.iter().all(|&(dx, dy)| at(img, x as isize + dx, y as isize + dy))
    })
}

pub fn pad(img: &BinaryImage, r: usize) -> BinaryImage {
    BinaryImage::from_fn(img.width() + 2 * r, img.height() + 2 * r, |x, y| {
        at(img, x as isize - r as isize, y as isize - r as isize)
    })
}

pub fn unpad(img: &BinaryImage, r: usize) -> BinaryImage {
    BinaryImage::from_fn(img.width() - 2 * r, img.height() - 2 * r, |x, y| img.get(x + r, y + r))
}

/// Foreground plus every background pixel the border cannot reach in 4 steps.
pub fn fill_oracle(img: &BinaryImage) -> BinaryImage {
    let (w, h) = (img.width(), img.height());
    let mut reach = vec![false; w * h];
    let mut stack: Vec<(usize, usize)> = Vec::new();
    for y in 0..h {
        for x in 0..w {
            if (x == 0 || y == 0 || x == w - 1 || y == h - 1) && !img.get(x, y) {
                stack.push((x, y));
            }
        }
    }
    while let Some((x, y)) = stack.pop() {
        if reach[y * w + x] || img.get(x, y) {
            continue;
        }
        reach[y * w + x] = true;
        if x > 0 {
            stack.push((x - 1, y));
        }
        if y > 0 {
            stack.push((x, y - 1));
        }
        if x + 1 < w {
            stack.push((x + 1, y));
        }
        if y + 1 < h {
            stack.push((x, y + 1));
        }
    }
    BinaryImage::from_fn(w, h, |x, y| !reach[y * w + x])
}

pub type Partition = BTreeSet<BTreeSet<(usize, usize)>>;

/// Foreground pixels grouped by repeated flood fill.
pub fn partition_oracle(img: &BinaryImage, eight: bool) -> Partition {
    let (w, h) = (img.width(), img.height());
    let mut seen = vec![false; w * h];
    let mut out = BTreeSet::new();
    for sy in 0..h {
        for sx in 0..w {
            if !img.get(sx, sy) || seen[sy * w + sx] {
                continue;
            }
            let mut comp = BTreeSet::new();
            let mut stack = vec![(sx, sy)];
            seen[sy * w + sx] = true;
            while let Some((x, y)) = stack.pop() {
                comp.insert((x, y));
                for dy in -1isize..=1 {
                    for dx in -1isize..=1 {
                        if (dx == 0 && dy == 0) || (!eight && dx != 0 && dy != 0) {
                            continue;
                        }
                        let (nx, ny) = (x as isize + dx, y as isize + dy);
                        if at(img, nx, ny) && !seen[ny as usize * w + nx as usize] {
                            seen[ny as usize * w + nx as usize] = true;
                            stack.push((nx as usize, ny as usize));
                        }
                    }
                }
            }
            out.insert(comp);
        }
    }
    out
}

fn replicate(img: &GrayImage, x: isize, y: isize) -> i64 {
    let cx = x.clamp(0, img.width() as isize - 1) as usize;
    let cy = y.clamp(0, img.height() as isize - 1) as usize;
    img.get(cx, cy) as i64
}

/// Gradient magnitudes by direct 3×3 convolution with edge replication.
pub fn sobel_oracle(img: &GrayImage) -> Vec<f64> {
    let gx = [[-1i64, 0, 1], [-2, 0, 2], [-1, 0, 1]];
    let mut out = Vec::with_capacity(img.width() * img.height());
    for y in 0..img.height() {
        for x in 0..img.width() {
            let (mut sx, mut sy) = (0i64, 0i64);
            for j in 0..3 {
                for i in 0..3 {
                    let v = replicate(img, x as isize + i as isize - 1, y as isize + j as isize - 1);
                    sx += gx[j][i] * v;
                    // The vertical kernel is the transpose.
                    sy += gx[i][j] * v;
                }
            }
            out.push(((sx * sx + sy * sy) as f64).sqrt());
        }
    }
    out
}

/// Sort the window and take the middle element.
pub fn median_oracle(img: &GrayImage, window: usize) -> GrayImage {
    let r = (window / 2) as isize;
    GrayImage::from_fn(img.width(), img.height(), |x, y| {
        let mut vals = Vec::new();
        for dy in -r..=r {
            for dx in -r..=r {
                vals.push(replicate(img, x as isize + dx, y as isize + dy));
            }
        }
        vals.sort();
        vals[vals.len() / 2] as u8
    })
}
