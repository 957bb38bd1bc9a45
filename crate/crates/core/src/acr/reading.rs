use serde::Serialize;

use super::{AcrError, LabelMap, CLASS_COUNT, DIGIT_COUNT};
use crate::geometry::BBox;
use crate::segmenter::{Band, CharBox};

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct CharReading {
    pub bbox: BBox,
    pub band: Band,
    pub class: usize,
    pub symbol: String,
    pub latin: String,
    pub confidence: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct PlateReading {
    pub bbox: BBox,
    pub digits: String,
    /// Reading order, so the first letter is the rightmost one on the plate.
    pub letters: String,
    /// Digit keys, a space, then letter keys.
    pub latin: String,
    /// Weakest per-character confidence.
    pub confidence: f64,
    pub chars: Vec<CharReading>,
}

impl PlateReading {
    pub fn confidences(&self) -> Vec<f64> {
        self.chars.iter().map(|c| c.confidence).collect()
    }
}

fn best_in(probs: &[f64], range: std::ops::Range<usize>) -> usize {
    let mut best = range.start;
    for i in range {
        if probs[i] > probs[best] {
            best = i;
        }
    }
    best
}

/// Combines per-box class probabilities into a reading. Each box is decoded
/// by argmax over the classes legal in its band, so a digit box always yields
/// a digit and a letter box a letter. The confidence of a character is its
/// (unrenormalized) probability.
pub fn assemble_reading(boxes: &[CharBox], probs: &[Vec<f64>], plate: BBox) -> Result<PlateReading, AcrError> {
    if boxes.len() != probs.len() {
        return Err(AcrError::Config(format!("{} boxes but {} predictions", boxes.len(), probs.len())));
    }
    if let Some(p) = probs.iter().find(|p| p.len() != CLASS_COUNT) {
        return Err(AcrError::Config(format!("probability vector of length {}", p.len())));
    }
    for band in [Band::Digit, Band::Letter] {
        if !boxes.iter().any(|b| b.band == band) {
            return Err(AcrError::IncompleteReading(band));
        }
    }
    let map = LabelMap;
    let mut order: Vec<usize> = (0..boxes.len()).collect();
    order.sort_by_key(|&i| (boxes[i].band == Band::Letter, boxes[i].order_index));
    let mut chars = Vec::with_capacity(boxes.len());
    let (mut digits, mut letters) = (String::new(), String::new());
    for i in order {
        let b = &boxes[i];
        let range = match b.band {
            Band::Digit => 0..DIGIT_COUNT,
            Band::Letter => DIGIT_COUNT..CLASS_COUNT,
        };
        let class = best_in(&probs[i], range);
        let sym = map.symbol(class).expect("class in range");
        match b.band {
            Band::Digit => digits.push(sym.ch),
            Band::Letter => letters.push(sym.ch),
        }
        chars.push(CharReading {
            bbox: b.bbox,
            band: b.band,
            class,
            symbol: sym.ch.to_string(),
            latin: sym.latin.to_string(),
            confidence: probs[i][class],
        });
    }
    let latin = format!("{} {}", map.to_latin(&digits).expect("digits"), map.to_latin(&letters).expect("letters"));
    let confidence = chars.iter().map(|c| c.confidence).fold(f64::INFINITY, f64::min);
    Ok(PlateReading { bbox: plate, digits, letters, latin, confidence, chars })
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Violation {
    DigitCount { found: usize },
    LetterCount { found: usize },
    DigitAlphabet { ch: char },
    LetterAlphabet { ch: char },
}

/// Grammar check of a digit string and a letter string: three or four digits
/// from one to nine, two or three letters from the plate alphabet.
pub fn validate_parts(digits: &str, letters: &str) -> Vec<Violation> {
    let map = LabelMap;
    let mut out = Vec::new();
    let nd = digits.chars().count();
    if !(3..=4).contains(&nd) {
        out.push(Violation::DigitCount { found: nd });
    }
    let nl = letters.chars().count();
    if !(2..=3).contains(&nl) {
        out.push(Violation::LetterCount { found: nl });
    }
    for ch in digits.chars() {
        if !map.id_of_char(ch).is_some_and(|id| map.is_digit(id)) {
            out.push(Violation::DigitAlphabet { ch });
        }
    }
    for ch in letters.chars() {
        if !map.id_of_char(ch).is_some_and(|id| map.is_letter(id)) {
            out.push(Violation::LetterAlphabet { ch });
        }
    }
    out
}

pub fn validate_reading(r: &PlateReading) -> Vec<Violation> {
    validate_parts(&r.digits, &r.letters)
}
