//! Flat `key = value` configuration with `#` comments.

use std::fs;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use eglpr::acr::TrainConfig;
use eglpr::locator::LocatorConfig;
use eglpr::synth::{AugmentParams, SceneParams};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("config {path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },
    #[error("config line {line}: expected `key = value`")]
    Syntax { line: usize },
    #[error("config line {line}: unknown key {key:?}")]
    UnknownKey { line: usize, key: String },
    #[error("config line {line}: key {key:?} set twice")]
    Duplicate { line: usize, key: String },
    #[error("config line {line}: bad value {value:?} for {key}")]
    BadValue { line: usize, key: String, value: String },
    #[error("config: {0}")]
    Invalid(String),
}

#[derive(Clone, Debug, PartialEq)]
pub struct AppConfig {
    pub locator: LocatorConfig,
    pub train: TrainConfig,
    pub augment: AugmentParams,
    pub scene: SceneParams,
    pub atlas: Option<PathBuf>,
}

impl Default for AppConfig {
    fn default() -> Self {
        Self {
            locator: LocatorConfig::default(),
            train: TrainConfig::default(),
            augment: AugmentParams::default(),
            scene: SceneParams::default(),
            atlas: None,
        }
    }
}

fn set<T: FromStr>(slot: &mut T, line: usize, key: &str, value: &str) -> Result<(), ConfigError> {
    *slot = value
        .parse()
        .map_err(|_| ConfigError::BadValue { line, key: key.to_string(), value: value.to_string() })?;
    Ok(())
}

fn set_pair(slot: &mut (usize, usize), line: usize, key: &str, value: &str) -> Result<(), ConfigError> {
    let bad = || ConfigError::BadValue { line, key: key.to_string(), value: value.to_string() };
    let (a, b) = value.split_once('x').ok_or_else(bad)?;
    *slot = (a.trim().parse().map_err(|_| bad())?, b.trim().parse().map_err(|_| bad())?);
    Ok(())
}

impl AppConfig {
    pub fn parse(text: &str) -> Result<Self, ConfigError> {
        let mut cfg = Self::default();
        let mut seen = std::collections::HashSet::new();
        for (i, raw) in text.lines().enumerate() {
            let line = i + 1;
            let body = raw.split('#').next().unwrap_or("").trim();
            if body.is_empty() {
                continue;
            }
            let (key, value) = body.split_once('=').ok_or(ConfigError::Syntax { line })?;
            let (key, value) = (key.trim(), value.trim());
            if !seen.insert(key.to_string()) {
                return Err(ConfigError::Duplicate { line, key: key.to_string() });
            }
            let (l, t, a, s) = (&mut cfg.locator, &mut cfg.train, &mut cfg.augment, &mut cfg.scene);
            match key {
                "locator.pixels_per_cm" => set(&mut l.pixels_per_cm, line, key, value)?,
                "locator.plate_w_cm" => set(&mut l.plate_w_cm, line, key, value)?,
                "locator.plate_h_cm" => set(&mut l.plate_h_cm, line, key, value)?,
                "locator.size_tolerance" => set(&mut l.size_tolerance, line, key, value)?,
                "locator.aspect_ratio" => set(&mut l.aspect_ratio, line, key, value)?,
                "locator.aspect_tolerance" => set(&mut l.aspect_tolerance, line, key, value)?,
                "locator.line_se_length" => set(&mut l.line_se_length, line, key, value)?,
                "locator.line_max_thickness" => set(&mut l.line_max_thickness, line, key, value)?,
                "locator.max_candidates" => set(&mut l.max_candidates, line, key, value)?,
                "locator.dilate_se" => set_pair(&mut l.dilate_se, line, key, value)?,
                "locator.erode_se" => set_pair(&mut l.erode_se, line, key, value)?,
                "locator.median_window" => set(&mut l.median_window, line, key, value)?,
                "train.epochs" => set(&mut t.epochs, line, key, value)?,
                "train.batch" => set(&mut t.batch_size, line, key, value)?,
                "train.lr" => set(&mut t.learning_rate, line, key, value)?,
                "train.seed" => set(&mut t.seed, line, key, value)?,
                "train.val_fraction" => set(&mut t.val_fraction, line, key, value)?,
                "train.patience" => {
                    let mut p = 0usize;
                    set(&mut p, line, key, value)?;
                    t.patience = (p > 0).then_some(p);
                }
                "synth.rotation_deg" => set(&mut a.rotation_deg, line, key, value)?,
                "synth.translate_px" => set(&mut a.translate_px, line, key, value)?,
                "synth.scale_jitter" => set(&mut a.scale_jitter, line, key, value)?,
                "synth.noise_sigma" => set(&mut a.noise_sigma, line, key, value)?,
                "synth.salt_pepper" => set(&mut a.salt_pepper, line, key, value)?,
                "synth.brightness" => set(&mut a.brightness, line, key, value)?,
                "synth.contrast" => set(&mut a.contrast, line, key, value)?,
                "synth.scene_width" => set(&mut s.width, line, key, value)?,
                "synth.scene_height" => set(&mut s.height, line, key, value)?,
                "synth.min_scale" => set(&mut s.min_scale, line, key, value)?,
                "synth.max_scale" => set(&mut s.max_scale, line, key, value)?,
                "synth.max_rotation_deg" => set(&mut s.max_rotation_deg, line, key, value)?,
                "synth.clutter" => set(&mut s.clutter, line, key, value)?,
                "synth.brightness_shift" => set(&mut s.brightness_shift, line, key, value)?,
                "synth.scene_noise_sigma" => set(&mut s.noise_sigma, line, key, value)?,
                "paths.atlas" => cfg.atlas = Some(PathBuf::from(value)),
                _ => return Err(ConfigError::UnknownKey { line, key: key.to_string() }),
            }
        }
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self, ConfigError> {
        let text = fs::read_to_string(path).map_err(|source| ConfigError::Io { path: path.to_path_buf(), source })?;
        Self::parse(&text)
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        self.locator.validate().map_err(|e| ConfigError::Invalid(e.to_string()))?;
        self.train.validate().map_err(|e| ConfigError::Invalid(e.to_string()))?;
        self.augment.validate().map_err(|e| ConfigError::Invalid(e.to_string()))?;
        let s = &self.scene;
        if s.width == 0 || s.height == 0 || !(s.min_scale > 0.0 && s.min_scale <= s.max_scale) || s.max_rotation_deg < 0.0 {
            return Err(ConfigError::Invalid("scene size, scale range or rotation out of range".into()));
        }
        Ok(())
    }
}
