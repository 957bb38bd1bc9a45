//! Scene-level scoring: recognition rate, false positives and negatives,
//! character confusion and localization overlap.

use std::collections::HashSet;

use serde::Serialize;
use thiserror::Error;

use crate::acr::{LabelMap, CLASS_COUNT};
use crate::geometry::BBox;
use crate::pipeline::Recognition;
use crate::synth::SceneTruth;

/// A top candidate at or above this overlap counts as localized.
pub const MATCH_IOU: f64 = 0.5;
/// Detections below this overlap are false positives.
pub const FP_IOU: f64 = 0.1;

pub fn iou(a: &BBox, b: &BBox) -> f64 {
    a.iou(b)
}

#[derive(Debug, Error, PartialEq, Eq)]
pub enum EvalError {
    #[error("no scenes to evaluate")]
    Empty,
    #[error("scene {0:?} appears more than once")]
    DuplicateScene(String),
    #[error("scene {name:?}: truth char {index} has class {class} outside the alphabet")]
    BadTruth { name: String, index: usize, class: usize },
}

#[derive(Clone, Debug, PartialEq)]
pub struct Detection {
    pub bbox: BBox,
    pub digits: String,
    pub letters: String,
    /// Class ids in reading order.
    pub classes: Vec<usize>,
}

/// What a pipeline reported for one scene, best detection first.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct ScenePrediction {
    pub detections: Vec<Detection>,
}

impl From<&Recognition> for ScenePrediction {
    fn from(r: &Recognition) -> Self {
        Self {
            detections: r
                .plates
                .iter()
                .map(|p| Detection {
                    bbox: p.reading.bbox,
                    digits: p.reading.digits.clone(),
                    letters: p.reading.letters.clone(),
                    classes: p.reading.chars.iter().map(|c| c.class).collect(),
                })
                .collect(),
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct EvalItem {
    pub name: String,
    pub truth: SceneTruth,
    pub prediction: ScenePrediction,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SceneResult {
    pub name: String,
    pub top_iou: f64,
    pub recognized: bool,
    pub false_positives: usize,
    pub predicted: Option<String>,
    pub expected: String,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct IouStats {
    pub mean: f64,
    pub min: f64,
    pub median: f64,
    /// Share of scenes whose top detection overlaps the truth by at least 0.7.
    pub at_least_0_7: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct EvalReport {
    pub n_scenes: usize,
    pub recognized: usize,
    pub recognition_rate: f64,
    pub false_positives: usize,
    pub false_negatives: usize,
    pub fp_per_scene: f64,
    /// Truth characters paired with a predicted character.
    pub char_total: usize,
    pub char_correct: usize,
    pub char_accuracy: f64,
    /// Truth characters with no counterpart (missed scene or count mismatch).
    pub unmatched_chars: usize,
    /// `confusion[truth][predicted]`.
    pub confusion: Vec<Vec<u64>>,
    pub iou: IouStats,
    pub scenes: Vec<SceneResult>,
}

fn ratio(n: usize, d: usize) -> f64 {
    if d == 0 {
        0.0
    } else {
        n as f64 / d as f64
    }
}

/// Scores a scene set. Results do not depend on input order.
pub fn evaluate(items: &[EvalItem]) -> Result<EvalReport, EvalError> {
    if items.is_empty() {
        return Err(EvalError::Empty);
    }
    let mut seen = HashSet::new();
    for it in items {
        if !seen.insert(it.name.as_str()) {
            return Err(EvalError::DuplicateScene(it.name.clone()));
        }
        if let Some((index, c)) = it.truth.chars.iter().enumerate().find(|(_, c)| c.class >= CLASS_COUNT) {
            return Err(EvalError::BadTruth { name: it.name.clone(), index, class: c.class });
        }
    }
    let mut sorted: Vec<&EvalItem> = items.iter().collect();
    sorted.sort_by(|a, b| a.name.cmp(&b.name));

    let map = LabelMap;
    let mut confusion = vec![vec![0u64; CLASS_COUNT]; CLASS_COUNT];
    let (mut recognized, mut fps, mut fns) = (0, 0, 0);
    let (mut char_total, mut char_correct, mut unmatched) = (0, 0, 0);
    let mut ious = Vec::with_capacity(items.len());
    let mut scenes = Vec::with_capacity(items.len());
    for it in sorted {
        let t = &it.truth;
        let dets = &it.prediction.detections;
        let top = dets.first();
        let top_iou = top.map_or(0.0, |d| iou(&d.bbox, &t.bbox));
        let reading_ok = top.is_some_and(|d| d.digits == t.digits && d.letters == t.letters);
        let hit = top_iou >= MATCH_IOU && reading_ok;
        let fp = dets.iter().filter(|d| iou(&d.bbox, &t.bbox) < FP_IOU).count();
        if hit {
            recognized += 1;
        }
        if !dets.iter().any(|d| iou(&d.bbox, &t.bbox) >= MATCH_IOU) {
            fns += 1;
        }
        fps += fp;
        ious.push(top_iou);

        let truth_classes: Vec<usize> = t.chars.iter().map(|c| c.class).collect();
        match top {
            Some(d) if top_iou >= MATCH_IOU && d.classes.len() == truth_classes.len() => {
                for (&tc, &pc) in truth_classes.iter().zip(&d.classes) {
                    if pc < CLASS_COUNT {
                        confusion[tc][pc] += 1;
                        char_total += 1;
                        if tc == pc {
                            char_correct += 1;
                        }
                    } else {
                        unmatched += 1;
                    }
                }
            }
            _ => unmatched += truth_classes.len(),
        }
        let latin = |d: &str, l: &str| format!("{} {}", map.to_latin(d).unwrap_or_default(), map.to_latin(l).unwrap_or_default());
        scenes.push(SceneResult {
            name: it.name.clone(),
            top_iou,
            recognized: hit,
            false_positives: fp,
            predicted: top.map(|d| latin(&d.digits, &d.letters)),
            expected: latin(&t.digits, &t.letters),
        });
    }

    let n = items.len();
    let mut sorted_ious = ious.clone();
    sorted_ious.sort_by(f64::total_cmp);
    let median = if n % 2 == 1 {
        sorted_ious[n / 2]
    } else {
        (sorted_ious[n / 2 - 1] + sorted_ious[n / 2]) / 2.0
    };
    let iou_stats = IouStats {
        mean: sorted_ious.iter().sum::<f64>() / n as f64,
        min: sorted_ious[0],
        median,
        at_least_0_7: ratio(sorted_ious.iter().filter(|&&v| v >= 0.7).count(), n),
    };
    Ok(EvalReport {
        n_scenes: n,
        recognized,
        recognition_rate: ratio(recognized, n),
        false_positives: fps,
        false_negatives: fns,
        fp_per_scene: ratio(fps, n),
        char_total,
        char_correct,
        char_accuracy: ratio(char_correct, char_total),
        unmatched_chars: unmatched,
        confusion,
        iou: iou_stats,
        scenes,
    })
}

/// Aligned plain-text summary with per-class accuracy.
pub fn format_table(r: &EvalReport) -> String {
    let map = LabelMap;
    let mut out = String::new();
    let rows = [
        ("scenes", r.n_scenes.to_string()),
        ("recognized", r.recognized.to_string()),
        ("recognition rate", format!("{:.2} %", 100.0 * r.recognition_rate)),
        ("false positives", r.false_positives.to_string()),
        ("false negatives", r.false_negatives.to_string()),
        ("FP per scene", format!("{:.3}", r.fp_per_scene)),
        ("char accuracy", format!("{:.2} % ({}/{})", 100.0 * r.char_accuracy, r.char_correct, r.char_total)),
        ("unmatched chars", r.unmatched_chars.to_string()),
        ("mean IoU", format!("{:.3}", r.iou.mean)),
        ("IoU >= 0.7", format!("{:.2} %", 100.0 * r.iou.at_least_0_7)),
    ];
    for (k, v) in rows {
        out.push_str(&format!("{k:<18} {v:>18}\n"));
    }
    out.push_str("\nclass  key  samples  correct  accuracy\n");
    for (id, row) in r.confusion.iter().enumerate() {
        let n: u64 = row.iter().sum();
        if n == 0 {
            continue;
        }
        out.push_str(&format!(
            "{id:>5}  {:>3}  {n:>7}  {:>7}  {:>7.2} %\n",
            map.latin_of(id).expect("class"),
            row[id],
            100.0 * row[id] as f64 / n as f64
        ));
    }
    out
}
