//! Synthetic plate rendering: framed light plate, a header strip with the
//! country marker, and a body of digits | divider | letters.

use serde::{Deserialize, Serialize};

use super::render::{quantize, Canvas, Placement};
use super::{GlyphAtlas, SynthError};
use crate::acr::{validate_parts, LabelMap};
use crate::geometry::BBox;
use crate::raster::{BinaryImage, GrayImage};

#[derive(Clone, Debug, PartialEq)]
pub struct PlateStyle {
    pub width: usize,
    pub height: usize,
    pub background: f64,
    pub ink: f64,
    pub frame: usize,
}

impl Default for PlateStyle {
    fn default() -> Self {
        Self { width: 340, height: 180, background: 225.0, ink: 25.0, frame: 3 }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct TruthChar {
    pub bbox: BBox,
    pub class: usize,
    pub symbol: String,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct PlateTruth {
    pub digits: String,
    pub letters: String,
    /// Reading order: digits, then letters.
    pub chars: Vec<TruthChar>,
    /// First row below the header ink.
    pub header_bottom: usize,
    pub divider: BBox,
}

/// 5×7 block capitals for the Latin header.
const BLOCK_FONT: [(char, [u8; 7]); 5] = [
    ('E', [0b11111, 0b10000, 0b10000, 0b11110, 0b10000, 0b10000, 0b11111]),
    ('G', [0b01110, 0b10001, 0b10000, 0b10111, 0b10001, 0b10001, 0b01111]),
    ('Y', [0b10001, 0b10001, 0b01010, 0b00100, 0b00100, 0b00100, 0b00100]),
    ('P', [0b11110, 0b10001, 0b10001, 0b11110, 0b10000, 0b10000, 0b10000]),
    ('T', [0b11111, 0b00100, 0b00100, 0b00100, 0b00100, 0b00100, 0b00100]),
];

fn block_glyph(c: char) -> BinaryImage {
    let rows = BLOCK_FONT.iter().find(|(k, _)| *k == c).expect("header glyph").1;
    BinaryImage::from_fn(5, 7, |x, y| rows[y] >> (4 - x) & 1 == 1)
}

/// Arabic country marker, right to left.
const HEADER_ARABIC: [char; 3] = ['\u{0645}', '\u{0635}', '\u{0631}'];

fn ink_extent(t: &BinaryImage) -> BBox {
    let mut b: Option<BBox> = None;
    for y in 0..t.height() {
        for x in 0..t.width() {
            if t.get(x, y) {
                let p = BBox::new(x, y, 1, 1);
                b = Some(b.map_or(p, |q| q.union(&p)));
            }
        }
    }
    b.expect("templates have ink")
}

fn union_opt(a: Option<BBox>, b: Option<BBox>) -> Option<BBox> {
    match (a, b) {
        (Some(a), Some(b)) => Some(a.union(&b)),
        (a, None) => a,
        (None, b) => b,
    }
}

/// Renders a plate for `digits` / `letters` (Arabic strings in reading
/// order). The first letter is drawn rightmost.
pub fn compose_plate(
    atlas: &GlyphAtlas,
    digits: &str,
    letters: &str,
    style: &PlateStyle,
) -> Result<(GrayImage, PlateTruth), SynthError> {
    let violations = validate_parts(digits, letters);
    if !violations.is_empty() {
        return Err(SynthError::Grammar(violations));
    }
    let (w, h) = (style.width as f64, style.height as f64);
    if style.width < 60 || style.height < 40 || style.frame * 4 >= style.height {
        return Err(SynthError::Params(format!("plate {}x{} too small", style.width, style.height)));
    }
    let map = LabelMap;
    let mut canvas = Canvas::new(style.width, style.height);
    let f = style.frame;
    canvas.fill_rect(0, 0, style.width, f);
    canvas.fill_rect(0, style.height - f, style.width, style.height);
    canvas.fill_rect(0, 0, f, style.height);
    canvas.fill_rect(style.width - f, 0, style.width, style.height);

    // Header: Latin word on the left, Arabic word on the right, both ending
    // just above 0.3 H.
    let header_bottom = (0.3 * h).round();
    let k = (4.0 * h / 180.0).max(1.0).round();
    let text_top = header_bottom - 7.0 * k;
    let mut header_ink = None;
    let mut x = (0.08 * w).round();
    for c in "EGYPT".chars() {
        let g = block_glyph(c);
        let p = Placement::centered(x + 2.5 * k, text_top + 3.5 * k, k);
        header_ink = union_opt(header_ink, canvas.stamp(&g, &p));
        x += 6.0 * k;
    }
    let arabic_scale = 7.0 * k / atlas.height() as f64;
    let mut right = w - (0.08 * w).round();
    for ch in HEADER_ARABIC {
        let tpl = atlas.template(map.id_of_char(ch).expect("header letters are in the alphabet"));
        let e = ink_extent(tpl);
        let cell_left = right - (e.x + e.w) as f64 * arabic_scale;
        let p = Placement::centered(cell_left + atlas.width() as f64 * arabic_scale / 2.0, text_top + 3.5 * k, arabic_scale);
        header_ink = union_opt(header_ink, canvas.stamp(tpl, &p));
        right = cell_left + e.x as f64 * arabic_scale - 2.0 * k;
    }

    // Body: left-to-right drawing order is digits then letters reversed.
    let digit_ids = map.ids(digits).expect("validated");
    let letter_ids = map.ids(letters).expect("validated");
    let mut drawn: Vec<usize> = digit_ids.clone();
    drawn.extend(letter_ids.iter().rev());
    let extents: Vec<BBox> = drawn.iter().map(|&id| ink_extent(atlas.template(id))).collect();
    let gap = 0.025 * w;
    let divider_gap = 0.12 * w;
    let ink_units: f64 = extents.iter().map(|e| e.w as f64).sum();
    let avail = 0.9 * w - gap * (drawn.len() - 2) as f64 - divider_gap;
    let scale = (1.8 * h / 180.0).min(avail / ink_units);
    let total = ink_units * scale + gap * (drawn.len() - 2) as f64 + divider_gap;
    let cell_top = (0.42 * h).round();
    let cell = atlas.width() as f64 * scale;
    let mut x = ((w - total) / 2.0).round();
    let mut boxes = Vec::with_capacity(drawn.len());
    let mut divider = BBox::new(0, 0, 0, 0);
    for (i, (&id, e)) in drawn.iter().zip(&extents).enumerate() {
        let cell_left = x - e.x as f64 * scale;
        let p = Placement::centered(cell_left + cell / 2.0, cell_top + atlas.height() as f64 * scale / 2.0, scale);
        let b = canvas.stamp(atlas.template(id), &p).ok_or_else(|| SynthError::Params("glyph fell off the plate".into()))?;
        boxes.push((id, b));
        x += e.w as f64 * scale;
        if i + 1 == digit_ids.len() {
            let dx = (x + divider_gap / 2.0 - f as f64 / 2.0).round() as usize;
            let dy = (0.5 * h).round() as usize;
            canvas.fill_rect(dx, dy, dx + f, style.height);
            divider = BBox::new(dx, dy, f, style.height - dy);
            x += divider_gap;
        } else {
            x += gap;
        }
    }

    // Reading order: digits as drawn, letters right to left.
    let nd = digit_ids.len();
    let mut ordered: Vec<(usize, BBox)> = boxes[..nd].to_vec();
    ordered.extend(boxes[nd..].iter().rev());
    let chars = ordered
        .into_iter()
        .map(|(class, bbox)| TruthChar { bbox, class, symbol: map.char_of(class).expect("class").to_string() })
        .collect();
    let header_bottom = header_ink.map_or(0, |b| b.bottom());
    let img = GrayImage::new(style.width, style.height, quantize(&canvas.render(style.background, style.ink)))
        .expect("plate size");
    Ok((img, PlateTruth { digits: digits.to_string(), letters: letters.to_string(), chars, header_bottom, divider }))
}
