//! Augmented isolated-character samples.

use std::fs;
use std::io::Write;
use std::path::Path;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::render::{add_gaussian_noise, add_salt_pepper, quantize, Canvas, Placement};
use super::{GlyphAtlas, SynthError};
use crate::acr::{Sample, CLASS_COUNT};
use crate::raster::{read_pnm, write_pgm, GrayImage};
use crate::segmenter::{glyph_from_sample, GLYPH_SIZE};

pub const MANIFEST: &str = "labels.tsv";

/// Augmentation ranges; every jitter is drawn uniformly from `[-x, x]`.
#[derive(Clone, Debug, PartialEq)]
pub struct AugmentParams {
    pub rotation_deg: f64,
    pub translate_px: f64,
    /// Relative scale jitter, 0.1 = ±10 %.
    pub scale_jitter: f64,
    /// Gaussian noise standard deviation in gray levels.
    pub noise_sigma: f64,
    pub salt_pepper: f64,
    /// Background level offset in gray levels.
    pub brightness: f64,
    /// Relative ink/background contrast jitter.
    pub contrast: f64,
    pub seed: u64,
}

impl Default for AugmentParams {
    fn default() -> Self {
        Self {
            rotation_deg: 5.0,
            translate_px: 2.0,
            scale_jitter: 0.10,
            noise_sigma: 8.0,
            salt_pepper: 0.005,
            brightness: 25.0,
            contrast: 0.15,
            seed: 0,
        }
    }
}

impl AugmentParams {
    /// No geometric or photometric change at all.
    pub fn identity(seed: u64) -> Self {
        Self {
            rotation_deg: 0.0,
            translate_px: 0.0,
            scale_jitter: 0.0,
            noise_sigma: 0.0,
            salt_pepper: 0.0,
            brightness: 0.0,
            contrast: 0.0,
            seed,
        }
    }

    pub fn validate(&self) -> Result<(), SynthError> {
        let ok = [self.rotation_deg, self.translate_px, self.noise_sigma, self.brightness]
            .iter()
            .all(|v| v.is_finite() && *v >= 0.0)
            && (0.0..1.0).contains(&self.scale_jitter)
            && (0.0..1.0).contains(&self.contrast)
            && (0.0..=1.0).contains(&self.salt_pepper);
        if ok {
            Ok(())
        } else {
            Err(SynthError::Params(format!("augmentation parameters out of range: {self:?}")))
        }
    }
}

/// How many samples each class gets.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ClassProfile {
    Balanced,
    /// Counts proportional to a skewed real-world corpus (most common class
    /// about thirteen times the rarest), rescaled so the mean is `per_class`.
    Skewed,
}

const SKEWED_COUNTS: [u32; CLASS_COUNT] = [
    57, 73, 67, 55, 65, 86, 53, 59, 77, 23, 45, 13, 15, 25, 52, 32, 20, 19, 7, 90, 9, 12, 11, 28, 8, 24,
];

pub fn class_counts(per_class: usize, profile: ClassProfile) -> [usize; CLASS_COUNT] {
    match profile {
        ClassProfile::Balanced => [per_class; CLASS_COUNT],
        ClassProfile::Skewed => {
            let mean = SKEWED_COUNTS.iter().sum::<u32>() as f64 / CLASS_COUNT as f64;
            SKEWED_COUNTS.map(|c| ((per_class as f64 * c as f64 / mean).round() as usize).max(1))
        }
    }
}

pub const BASE_BACKGROUND: f64 = 215.0;
pub const BASE_INK: f64 = 35.0;

/// Independent generator for sample `index` under `seed`.
pub fn sample_rng(seed: u64, index: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(index);
    rng
}

fn jitter(rng: &mut impl Rng, range: f64) -> f64 {
    if range > 0.0 {
        rng.random_range(-range..=range)
    } else {
        0.0
    }
}

/// Renders one 32×32 dark-on-light sample of class `class`.
pub fn render_char(atlas: &GlyphAtlas, class: usize, params: &AugmentParams, rng: &mut impl Rng) -> GrayImage {
    let tpl = atlas.template(class);
    let scale = 1.0 + jitter(rng, params.scale_jitter);
    let rotation = jitter(rng, params.rotation_deg).to_radians();
    let (tx, ty) = (jitter(rng, params.translate_px), jitter(rng, params.translate_px));
    let centre = GLYPH_SIZE as f64 / 2.0;
    let mut canvas = Canvas::new(GLYPH_SIZE, GLYPH_SIZE);
    canvas.stamp(
        tpl,
        &Placement { cx: centre + tx, cy: centre + ty, scale_x: scale, scale_y: scale, rotation },
    );
    let background = BASE_BACKGROUND + jitter(rng, params.brightness);
    let contrast = 1.0 + jitter(rng, params.contrast);
    let ink = background - (BASE_BACKGROUND - BASE_INK) * contrast;
    let mut values = canvas.render(background, ink);
    add_gaussian_noise(&mut values, params.noise_sigma, rng);
    add_salt_pepper(&mut values, params.salt_pepper, rng);
    GrayImage::new(GLYPH_SIZE, GLYPH_SIZE, quantize(&values)).expect("glyph size")
}

#[derive(Clone, Debug, PartialEq)]
pub struct CharSample {
    pub file_name: String,
    pub label: usize,
    pub image: GrayImage,
}

/// Class-major sample list; sample `i` draws from its own stream of `seed`.
pub fn gen_char_dataset(
    atlas: &GlyphAtlas,
    per_class: usize,
    profile: ClassProfile,
    params: &AugmentParams,
) -> Result<Vec<CharSample>, SynthError> {
    params.validate()?;
    if per_class == 0 {
        return Err(SynthError::Params("per_class must be at least 1".into()));
    }
    let mut out = Vec::new();
    let mut index = 0u64;
    for (class, &n) in class_counts(per_class, profile).iter().enumerate() {
        for k in 0..n {
            let mut rng = sample_rng(params.seed, index);
            let image = render_char(atlas, class, params, &mut rng);
            out.push(CharSample { file_name: format!("c{class:02}_{k:05}.pgm"), label: class, image });
            index += 1;
        }
    }
    Ok(out)
}

pub fn write_char_dataset(samples: &[CharSample], dir: impl AsRef<Path>) -> Result<(), SynthError> {
    let dir = dir.as_ref();
    fs::create_dir_all(dir)?;
    let mut manifest = Vec::new();
    for s in samples {
        write_pgm(&s.image, dir.join(&s.file_name))?;
        writeln!(manifest, "{}\t{}", s.file_name, s.label)?;
    }
    fs::write(dir.join(MANIFEST), manifest)?;
    Ok(())
}

/// Reads `labels.tsv` and the images it lists.
pub fn read_char_dataset(dir: impl AsRef<Path>) -> Result<Vec<CharSample>, SynthError> {
    let dir = dir.as_ref();
    let text = fs::read_to_string(dir.join(MANIFEST))?;
    let mut out = Vec::new();
    for (i, line) in text.lines().enumerate().filter(|(_, l)| !l.trim().is_empty()) {
        let bad = || SynthError::Manifest { line: i + 1, msg: format!("expected `file<TAB>class`, got {line:?}") };
        let (name, label) = line.split_once('\t').ok_or_else(bad)?;
        let label: usize = label.trim().parse().map_err(|_| bad())?;
        if label >= CLASS_COUNT {
            return Err(SynthError::Manifest { line: i + 1, msg: format!("class {label} out of range") });
        }
        if name.contains('/') || name.contains('\\') || name == ".." {
            return Err(SynthError::Manifest { line: i + 1, msg: format!("file name {name:?} leaves the dataset") });
        }
        let image = read_pnm(dir.join(name))?.into_gray();
        out.push(CharSample { file_name: name.to_string(), label, image });
    }
    Ok(out)
}

/// Normalized classifier inputs for a sample list.
pub fn to_training_samples(samples: &[CharSample]) -> Vec<Sample> {
    samples.iter().map(|s| Sample { glyph: glyph_from_sample(&s.image), label: s.label }).collect()
}
