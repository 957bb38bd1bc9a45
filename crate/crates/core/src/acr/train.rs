use std::io::{self, Write};

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::{AcrError, ModelConfig, CLASS_COUNT};
use crate::nn::{Adam, AdamConfig, ForwardMode, NetworkWeights, Tensor};
use crate::segmenter::{GlyphImage, GLYPH_SIZE};

#[derive(Clone, Debug, PartialEq)]
pub struct Sample {
    pub glyph: GlyphImage,
    pub label: usize,
}

#[derive(Clone, Debug, PartialEq)]
pub struct TrainConfig {
    pub epochs: usize,
    pub batch_size: usize,
    pub learning_rate: f64,
    pub seed: u64,
    /// Share of each class held out for validation by [`train`].
    pub val_fraction: f64,
    /// Stop after this many epochs without a validation improvement.
    pub patience: Option<usize>,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self { epochs: 100, batch_size: 32, learning_rate: 1e-3, seed: 0, val_fraction: 0.1, patience: None }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<(), AcrError> {
        let bad = |m: &str| Err(AcrError::Config(m.to_string()));
        if self.epochs == 0 {
            return bad("epochs must be at least 1");
        }
        if self.batch_size == 0 {
            return bad("batch size must be at least 1");
        }
        if !(self.learning_rate.is_finite() && self.learning_rate > 0.0) {
            return bad("learning rate must be positive");
        }
        if !(self.val_fraction > 0.0 && self.val_fraction < 1.0) {
            return bad("validation fraction must lie in (0, 1)");
        }
        if self.patience == Some(0) {
            return bad("patience must be at least 1");
        }
        Ok(())
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct EpochMetrics {
    /// 1-based.
    pub epoch: usize,
    /// Mean training cross-entropy over the epoch.
    pub loss: f64,
    pub train_acc: f64,
    pub val_acc: Option<f64>,
}

#[derive(Clone, Debug)]
pub struct TrainOutcome {
    pub weights: NetworkWeights,
    pub metrics: Vec<EpochMetrics>,
    /// Epoch whose weights were kept.
    pub best_epoch: usize,
}

pub fn glyph_tensor(glyph: &GlyphImage) -> Tensor {
    Tensor::new(vec![GLYPH_SIZE, GLYPH_SIZE, 1], glyph.values().to_vec()).expect("glyph size")
}

/// Per-class seeded split into `(train, validation)` index lists. Each class
/// keeps at least one training sample.
pub fn stratified_split(labels: &[usize], fraction: f64, seed: u64) -> (Vec<usize>, Vec<usize>) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut by_class: Vec<Vec<usize>> = vec![Vec::new(); CLASS_COUNT];
    for (i, &l) in labels.iter().enumerate() {
        if let Some(v) = by_class.get_mut(l) {
            v.push(i);
        }
    }
    let (mut train, mut val) = (Vec::new(), Vec::new());
    for mut idx in by_class {
        idx.shuffle(&mut rng);
        let n_val = ((idx.len() as f64 * fraction).round() as usize).min(idx.len().saturating_sub(1));
        val.extend_from_slice(&idx[..n_val]);
        train.extend_from_slice(&idx[n_val..]);
    }
    train.sort_unstable();
    val.sort_unstable();
    (train, val)
}

fn check_samples(samples: &[Sample]) -> Result<(), AcrError> {
    let mut counts = [0usize; CLASS_COUNT];
    for s in samples {
        if s.label >= CLASS_COUNT {
            return Err(AcrError::LabelOutOfRange(s.label));
        }
        counts[s.label] += 1;
    }
    match counts.iter().position(|&c| c == 0) {
        Some(class) => Err(AcrError::EmptyClass(class)),
        None => Ok(()),
    }
}

pub fn accuracy(model: &ModelConfig, weights: &NetworkWeights, samples: &[Sample]) -> Result<f64, AcrError> {
    if samples.is_empty() {
        return Ok(0.0);
    }
    let mut hits = 0usize;
    for s in samples {
        if model.network.predict(weights, &glyph_tensor(&s.glyph))?.argmax() == s.label {
            hits += 1;
        }
    }
    Ok(hits as f64 / samples.len() as f64)
}

/// Splits off a stratified validation set and trains on the rest.
pub fn train(samples: &[Sample], model: &ModelConfig, cfg: &TrainConfig) -> Result<TrainOutcome, AcrError> {
    cfg.validate()?;
    check_samples(samples)?;
    let labels: Vec<usize> = samples.iter().map(|s| s.label).collect();
    let (ti, vi) = stratified_split(&labels, cfg.val_fraction, cfg.seed);
    let pick = |idx: &[usize]| idx.iter().map(|&i| samples[i].clone()).collect::<Vec<_>>();
    train_split(&pick(&ti), &pick(&vi), model, cfg, &mut |_| {})
}

/// Trains on `train_set`, scoring `val_set` after every epoch and keeping the
/// best-scoring weights (the last weights when `val_set` is empty).
pub fn train_split(
    train_set: &[Sample],
    val_set: &[Sample],
    model: &ModelConfig,
    cfg: &TrainConfig,
    progress: &mut dyn FnMut(&EpochMetrics),
) -> Result<TrainOutcome, AcrError> {
    cfg.validate()?;
    check_samples(train_set)?;
    if let Some(s) = val_set.iter().find(|s| s.label >= CLASS_COUNT) {
        return Err(AcrError::LabelOutOfRange(s.label));
    }
    let net = &model.network;
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut weights = net.init_weights(&mut rng);
    let mut adam = Adam::new(AdamConfig { learning_rate: cfg.learning_rate, ..AdamConfig::default() }, &weights);
    let inputs: Vec<Tensor> = train_set.iter().map(|s| glyph_tensor(&s.glyph)).collect();
    let mut order: Vec<usize> = (0..train_set.len()).collect();
    let mut metrics = Vec::with_capacity(cfg.epochs);
    let mut best: Option<(f64, usize, NetworkWeights)> = None;
    let mut grads = weights.zeros_like();

    for epoch in 1..=cfg.epochs {
        order.shuffle(&mut rng);
        let (mut loss_sum, mut hits) = (0.0, 0usize);
        for batch in order.chunks(cfg.batch_size) {
            grads.scale(0.0);
            for &i in batch {
                let trace = net.forward(&weights, &inputs[i], ForwardMode::Train(&mut rng))?;
                if trace.output.argmax() == train_set[i].label {
                    hits += 1;
                }
                let loss = net.accumulate_gradients(&weights, &trace, train_set[i].label, &mut grads)?;
                if !loss.is_finite() {
                    return Err(AcrError::NonFiniteLoss { epoch });
                }
                loss_sum += loss;
            }
            grads.scale(1.0 / batch.len() as f64);
            adam.step(&mut weights, &grads)?;
        }
        let val_acc = if val_set.is_empty() { None } else { Some(accuracy(model, &weights, val_set)?) };
        let row = EpochMetrics {
            epoch,
            loss: loss_sum / train_set.len() as f64,
            train_acc: hits as f64 / train_set.len() as f64,
            val_acc,
        };
        if !row.loss.is_finite() {
            return Err(AcrError::NonFiniteLoss { epoch });
        }
        progress(&row);
        metrics.push(row);

        let score = val_acc.unwrap_or(f64::NEG_INFINITY);
        let improved = match &best {
            None => true,
            Some((b, _, _)) => val_acc.is_none() || score > *b,
        };
        if improved {
            best = Some((score, epoch, weights.clone()));
        } else if let (Some(p), Some((_, be, _))) = (cfg.patience, &best) {
            if epoch - be >= p {
                break;
            }
        }
    }
    let (_, best_epoch, weights) = best.expect("at least one epoch ran");
    Ok(TrainOutcome { weights, metrics, best_epoch })
}

pub fn write_metrics(rows: &[EpochMetrics], mut out: impl Write) -> io::Result<()> {
    writeln!(out, "epoch\tloss\ttrain_acc\tval_acc")?;
    for r in rows {
        let val = r.val_acc.map_or_else(|| "-".to_string(), |v| format!("{v:.6}"));
        writeln!(out, "{}\t{:.6}\t{:.6}\t{}", r.epoch, r.loss, r.train_acc, val)?;
    }
    Ok(())
}

#[derive(Clone, Debug, PartialEq)]
pub struct Prediction {
    pub class: usize,
    pub probs: Vec<f64>,
}

/// Inference-mode classification of one glyph.
pub fn predict(glyph: &GlyphImage, weights: &NetworkWeights, model: &ModelConfig) -> Result<Prediction, AcrError> {
    let probs = model.network.predict(weights, &glyph_tensor(glyph))?;
    Ok(Prediction { class: probs.argmax(), probs: probs.into_data() })
}
