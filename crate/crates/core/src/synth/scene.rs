//! Cluttered scenes with one pasted plate and their ground truth.

use std::fs;
use std::path::{Path, PathBuf};

use rand::Rng;
use serde::{Deserialize, Serialize};

use super::chars::sample_rng;
use super::plate::{compose_plate, PlateStyle, PlateTruth, TruthChar};
use super::render::{mapped_bounds, sample_gray};
use super::{GlyphAtlas, SynthError};
use crate::acr::{LabelMap, DIGIT_COUNT, LETTER_COUNT};
use crate::geometry::BBox;
use crate::raster::{read_pnm, write_ppm, GrayImage, RgbImage};

#[derive(Clone, Debug, PartialEq)]
pub struct SceneParams {
    pub width: usize,
    pub height: usize,
    pub min_scale: f64,
    pub max_scale: f64,
    pub max_rotation_deg: f64,
    pub clutter: bool,
    /// Global brightness offset drawn from `[-x, x]`.
    pub brightness_shift: f64,
    pub noise_sigma: f64,
}

impl Default for SceneParams {
    fn default() -> Self {
        Self {
            width: 640,
            height: 480,
            min_scale: 0.85,
            max_scale: 1.15,
            max_rotation_deg: 3.0,
            clutter: true,
            brightness_shift: 20.0,
            noise_sigma: 2.0,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct SceneTruth {
    pub bbox: BBox,
    pub digits: String,
    pub letters: String,
    pub chars: Vec<TruthChar>,
}

/// Everything drawn besides the plate, for inspection.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct Clutter {
    /// Rectangles too large or too small to be a plate.
    pub rects: Vec<BBox>,
    /// Thin bars.
    pub lines: Vec<BBox>,
}

/// Keep-out margin around the plate for clutter.
const PLATE_MARGIN: usize = 25;

fn expand(b: &BBox, m: usize, w: usize, h: usize) -> BBox {
    let (x0, y0) = (b.x.saturating_sub(m), b.y.saturating_sub(m));
    BBox::new(x0, y0, (b.right() + m).min(w) - x0, (b.bottom() + m).min(h) - y0)
}

struct Layer {
    rgb: Vec<[f64; 3]>,
    width: usize,
}

impl Layer {
    fn fill(&mut self, b: &BBox, c: [f64; 3]) {
        for y in b.y..b.bottom() {
            for x in b.x..b.right() {
                self.rgb[y * self.width + x] = c;
            }
        }
    }
}

fn try_place(rng: &mut impl Rng, w: usize, h: usize, bw: usize, bh: usize, avoid: &BBox) -> Option<BBox> {
    if bw >= w || bh >= h {
        return None;
    }
    (0..60).find_map(|_| {
        let b = BBox::new(rng.random_range(0..w - bw), rng.random_range(0..h - bh), bw, bh);
        b.intersection(avoid).is_none().then_some(b)
    })
}

fn contrasting(rng: &mut impl Rng, base: [f64; 3]) -> [f64; 3] {
    let delta = rng.random_range(60.0..110.0);
    let mean = (base[0] + base[1] + base[2]) / 3.0;
    let sign = if mean > 128.0 { -1.0 } else { 1.0 };
    base.map(|c| (c + sign * delta + rng.random_range(-15.0..15.0)).clamp(0.0, 255.0))
}

/// Pastes `plate` into a fresh scene. Returns the scene, its truth and the
/// clutter that was drawn.
pub fn compose_scene(
    plate: &GrayImage,
    truth: &PlateTruth,
    params: &SceneParams,
    rng: &mut impl Rng,
) -> Result<(RgbImage, SceneTruth, Clutter), SynthError> {
    let (sw, sh) = (params.width, params.height);
    if !(params.min_scale > 0.0 && params.min_scale <= params.max_scale) {
        return Err(SynthError::Params("scene scale range".into()));
    }
    let scale = if params.max_scale > params.min_scale {
        rng.random_range(params.min_scale..=params.max_scale)
    } else {
        params.min_scale
    };
    let rotation = if params.max_rotation_deg > 0.0 {
        rng.random_range(-params.max_rotation_deg..=params.max_rotation_deg).to_radians()
    } else {
        0.0
    };
    let (pw, ph) = (plate.width() as f64, plate.height() as f64);
    let (s, c) = rotation.sin_cos();
    let rel = |u: f64, v: f64| {
        let (px, py) = ((u - pw / 2.0) * scale, (v - ph / 2.0) * scale);
        (c * px - s * py, s * px + c * py)
    };
    let (x0, y0, x1, y1) = mapped_bounds(pw, ph, rel);
    let (bw, bh) = (x1 - x0, y1 - y0);
    if bw + 2.0 > sw as f64 || bh + 2.0 > sh as f64 {
        return Err(SynthError::PlateTooLarge { plate: (bw.ceil() as usize, bh.ceil() as usize), scene: (sw, sh) });
    }
    let cx = rng.random_range(1.0 - x0..=sw as f64 - 1.0 - x1);
    let cy = rng.random_range(1.0 - y0..=sh as f64 - 1.0 - y1);
    let to_scene = |u: f64, v: f64| {
        let (rx, ry) = rel(u, v);
        (rx + cx, ry + cy)
    };
    let to_plate = |x: f64, y: f64| {
        let (dx, dy) = (x - cx, y - cy);
        ((c * dx + s * dy) / scale + pw / 2.0, (-s * dx + c * dy) / scale + ph / 2.0)
    };
    let box_of = |u: f64, v: f64, w: f64, h: f64| {
        let (a, b, cc, d) = mapped_bounds(w, h, |du, dv| to_scene(u + du, v + dv));
        let (l, t) = (a.floor().max(0.0) as usize, b.floor().max(0.0) as usize);
        let (r, btm) = ((cc.ceil() as usize).min(sw), (d.ceil() as usize).min(sh));
        BBox::new(l, t, r - l, btm - t)
    };
    let plate_box = box_of(0.0, 0.0, pw, ph);

    // Smooth background: a tilted linear gradient.
    let base: [f64; 3] = std::array::from_fn(|_| rng.random_range(80.0..170.0));
    let (gx, gy) = (rng.random_range(-0.06..0.06), rng.random_range(-0.06..0.06));
    let mut layer = Layer {
        rgb: (0..sw * sh)
            .map(|i| {
                let (x, y) = ((i % sw) as f64, (i / sw) as f64);
                let g = gx * (x - sw as f64 / 2.0) + gy * (y - sh as f64 / 2.0);
                base.map(|v| v + g)
            })
            .collect(),
        width: sw,
    };

    let mut clutter = Clutter::default();
    if params.clutter {
        let avoid = expand(&plate_box, PLATE_MARGIN, sw, sh);
        let tall_h = rng.random_range((sh * 3 / 4)..=(sh * 11 / 12));
        let tall_w = rng.random_range(30..=60);
        if let Some(b) = try_place(rng, sw, sh, tall_w, tall_h, &avoid) {
            let col = contrasting(rng, base);
            layer.fill(&b, col);
            clutter.rects.push(b);
        }
        for _ in 0..rng.random_range(2..=3) {
            let (w, h) = (rng.random_range(10..=40), rng.random_range(10..=40));
            if let Some(b) = try_place(rng, sw, sh, w, h, &avoid) {
                let col = contrasting(rng, base);
                layer.fill(&b, col);
                clutter.rects.push(b);
            }
        }
        for i in 0..rng.random_range(2..=3) {
            let len = rng.random_range(sw / 4..=sw / 2);
            let thick = rng.random_range(1..=3);
            let (w, h) = if i == 1 { (thick, len.min(sh - 1)) } else { (len, thick) };
            if let Some(b) = try_place(rng, sw, sh, w, h, &avoid) {
                let col = contrasting(rng, base);
                layer.fill(&b, col);
                clutter.lines.push(b);
            }
        }
    }

    let tint = [rng.random_range(0.94..1.0), rng.random_range(0.94..1.0), rng.random_range(0.9..1.0)];
    for y in plate_box.y..plate_box.bottom() {
        for x in plate_box.x..plate_box.right() {
            let (u, v) = to_plate(x as f64 + 0.5, y as f64 + 0.5);
            if let Some(g) = sample_gray(plate, u, v) {
                layer.rgb[y * sw + x] = [g * tint[0], g * tint[1], g * tint[2]];
            }
        }
    }

    let shift = if params.brightness_shift > 0.0 {
        rng.random_range(-params.brightness_shift..=params.brightness_shift)
    } else {
        0.0
    };
    let noise = (params.noise_sigma > 0.0)
        .then(|| rand_distr::Normal::new(0.0, params.noise_sigma).expect("positive sigma"));
    let mut pixels = Vec::with_capacity(sw * sh * 3);
    for px in &layer.rgb {
        for &v in px {
            let n = noise.as_ref().map_or(0.0, |d| rand_distr::Distribution::sample(d, rng));
            pixels.push((v + shift + n).round().clamp(0.0, 255.0) as u8);
        }
    }
    let img = RgbImage::new(sw, sh, pixels).expect("scene size");
    let chars = truth
        .chars
        .iter()
        .map(|t| TruthChar {
            bbox: box_of(t.bbox.x as f64, t.bbox.y as f64, t.bbox.w as f64, t.bbox.h as f64),
            class: t.class,
            symbol: t.symbol.clone(),
        })
        .collect();
    let scene_truth = SceneTruth { bbox: plate_box, digits: truth.digits.clone(), letters: truth.letters.clone(), chars };
    Ok((img, scene_truth, clutter))
}

/// A random in-grammar reading: three or four digits, two or three letters.
pub fn random_reading(rng: &mut impl Rng) -> (String, String) {
    let map = LabelMap;
    let nd = rng.random_range(3..=4);
    let nl = rng.random_range(2..=3);
    let digits = (0..nd).map(|_| map.char_of(rng.random_range(0..DIGIT_COUNT)).expect("digit")).collect();
    let letters = (0..nl)
        .map(|_| map.char_of(DIGIT_COUNT + rng.random_range(0..LETTER_COUNT)).expect("letter"))
        .collect();
    (digits, letters)
}

#[derive(Clone, Debug, PartialEq)]
pub struct SceneSample {
    pub name: String,
    pub image: RgbImage,
    pub truth: SceneTruth,
}

/// Scene `i` draws its reading, placement and clutter from stream `i` of `seed`.
pub fn gen_scene_dataset(
    atlas: &GlyphAtlas,
    count: usize,
    seed: u64,
    style: &PlateStyle,
    params: &SceneParams,
) -> Result<Vec<SceneSample>, SynthError> {
    (0..count)
        .map(|i| {
            let mut rng = sample_rng(seed, i as u64);
            let (digits, letters) = random_reading(&mut rng);
            let (plate, truth) = compose_plate(atlas, &digits, &letters, style)?;
            let (image, truth, _) = compose_scene(&plate, &truth, params, &mut rng)?;
            Ok(SceneSample { name: format!("scene_{i:04}"), image, truth })
        })
        .collect()
}

pub fn write_scene_dataset(scenes: &[SceneSample], dir: impl AsRef<Path>) -> Result<(), SynthError> {
    let dir = dir.as_ref();
    fs::create_dir_all(dir)?;
    for s in scenes {
        write_ppm(&s.image, dir.join(format!("{}.ppm", s.name)))?;
        let json = serde_json::to_string_pretty(&s.truth).expect("truth serializes");
        fs::write(dir.join(format!("{}.json", s.name)), json + "\n")?;
    }
    Ok(())
}

/// `(image path, truth)` for every `*.ppm` in `dir` with a sibling `.json`,
/// sorted by file name.
pub fn read_scene_truths(dir: impl AsRef<Path>) -> Result<Vec<(PathBuf, SceneTruth)>, SynthError> {
    let mut images: Vec<PathBuf> = fs::read_dir(dir.as_ref())?
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| p.extension().is_some_and(|x| x == "ppm" || x == "pgm" || x == "pnm"))
        .collect();
    images.sort();
    images
        .into_iter()
        .map(|img| {
            let json_path = img.with_extension("json");
            let text = fs::read_to_string(&json_path).map_err(|_| SynthError::MissingTruth(img.clone()))?;
            let truth = serde_json::from_str(&text)
                .map_err(|e| SynthError::Truth { path: json_path.clone(), msg: e.to_string() })?;
            Ok((img, truth))
        })
        .collect()
}

pub fn load_scene(path: impl AsRef<Path>) -> Result<RgbImage, SynthError> {
    Ok(read_pnm(path)?.into_rgb())
}
