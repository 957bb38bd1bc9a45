//! Text glyph atlas: a `GLYPHS <count> <w> <h>` header, then per glyph a
//! `CHAR <id> <latin-key>` line followed by `h` rows of `w` `0`/`1` cells.
//! Blank lines and lines starting with `#` are ignored.

use std::fs;
use std::path::Path;

use thiserror::Error;

use crate::acr::{LabelMap, CLASS_COUNT};
use crate::raster::BinaryImage;

const DEFAULT_ATLAS: &str = include_str!("../../assets/glyphs.atlas");

#[derive(Debug, Error)]
pub enum AtlasError {
    #[error("atlas i/o")]
    Io(#[from] std::io::Error),
    #[error("atlas line {line}: {msg}")]
    Parse { line: usize, msg: String },
    #[error("atlas has no glyph for class {0}")]
    MissingClass(usize),
    #[error("atlas defines class {0} twice")]
    DuplicateId(usize),
    #[error("atlas line {line}: bad dimensions: {msg}")]
    BadDimensions { line: usize, msg: String },
    #[error("glyph {id} is labelled {found:?} but the label map says {expected:?}")]
    KeyMismatch { id: usize, found: char, expected: char },
    #[error("glyph {0} has no ink")]
    EmptyTemplate(usize),
}

/// One binary template per class, indexed by class id.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct GlyphAtlas {
    width: usize,
    height: usize,
    templates: Vec<BinaryImage>,
}

impl GlyphAtlas {
    /// The templates shipped with the crate.
    pub fn builtin() -> Self {
        parse_atlas(DEFAULT_ATLAS).expect("bundled atlas is valid")
    }

    pub fn new(templates: Vec<BinaryImage>) -> Result<Self, AtlasError> {
        if templates.len() != CLASS_COUNT {
            return Err(AtlasError::MissingClass(templates.len().min(CLASS_COUNT)));
        }
        let (width, height) = (templates[0].width(), templates[0].height());
        for (id, t) in templates.iter().enumerate() {
            if (t.width(), t.height()) != (width, height) {
                return Err(AtlasError::BadDimensions { line: 0, msg: format!("glyph {id} differs in size") });
            }
            if t.count_foreground() == 0 {
                return Err(AtlasError::EmptyTemplate(id));
            }
        }
        Ok(Self { width, height, templates })
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn template(&self, id: usize) -> &BinaryImage {
        &self.templates[id]
    }

    pub fn templates(&self) -> &[BinaryImage] {
        &self.templates
    }
}

fn parse_err(line: usize, msg: impl Into<String>) -> AtlasError {
    AtlasError::Parse { line, msg: msg.into() }
}

pub fn parse_atlas(text: &str) -> Result<GlyphAtlas, AtlasError> {
    let mut lines = text
        .lines()
        .enumerate()
        .map(|(i, l)| (i + 1, l.trim()))
        .filter(|(_, l)| !l.is_empty() && !l.starts_with('#'));
    let (hl, header) = lines.next().ok_or_else(|| parse_err(0, "empty atlas"))?;
    let fields: Vec<&str> = header.split_whitespace().collect();
    let [tag, count, w, h] = fields[..] else {
        return Err(parse_err(hl, "expected `GLYPHS <count> <w> <h>`"));
    };
    if tag != "GLYPHS" {
        return Err(parse_err(hl, "expected `GLYPHS <count> <w> <h>`"));
    }
    let num = |s: &str| s.parse::<usize>().map_err(|_| AtlasError::BadDimensions { line: hl, msg: format!("{s:?}") });
    let (count, w, h) = (num(count)?, num(w)?, num(h)?);
    if w == 0 || h == 0 {
        return Err(AtlasError::BadDimensions { line: hl, msg: "zero-sized templates".into() });
    }

    let map = LabelMap;
    let mut slots: Vec<Option<BinaryImage>> = vec![None; CLASS_COUNT];
    for _ in 0..count {
        let (cl, char_line) = lines.next().ok_or_else(|| parse_err(0, "fewer glyphs than declared"))?;
        let parts: Vec<&str> = char_line.split_whitespace().collect();
        let ["CHAR", id, key] = parts[..] else {
            return Err(parse_err(cl, "expected `CHAR <id> <latin-key>`"));
        };
        let id: usize = id.parse().map_err(|_| parse_err(cl, format!("bad id {id:?}")))?;
        let expected = map.latin_of(id).ok_or_else(|| parse_err(cl, format!("id {id} outside the label map")))?;
        let mut kc = key.chars();
        let found = match (kc.next(), kc.next()) {
            (Some(c), None) => c,
            _ => return Err(parse_err(cl, format!("bad key {key:?}"))),
        };
        if found != expected {
            return Err(AtlasError::KeyMismatch { id, found, expected });
        }
        if slots[id].is_some() {
            return Err(AtlasError::DuplicateId(id));
        }
        let mut bits = Vec::with_capacity(w * h);
        for _ in 0..h {
            let (rl, row) = lines.next().ok_or_else(|| parse_err(0, format!("glyph {id} truncated")))?;
            if row.len() != w {
                return Err(AtlasError::BadDimensions { line: rl, msg: format!("row of {} cells, expected {w}", row.len()) });
            }
            for c in row.chars() {
                match c {
                    '0' => bits.push(false),
                    '1' => bits.push(true),
                    _ => return Err(parse_err(rl, format!("unexpected cell {c:?}"))),
                }
            }
        }
        slots[id] = Some(BinaryImage::new(w, h, bits).expect("sized above"));
    }
    if let Some((l, _)) = lines.next() {
        return Err(parse_err(l, "content after the last declared glyph"));
    }
    let templates = slots
        .into_iter()
        .enumerate()
        .map(|(id, t)| t.ok_or(AtlasError::MissingClass(id)))
        .collect::<Result<Vec<_>, _>>()?;
    GlyphAtlas::new(templates)
}

pub fn format_atlas(atlas: &GlyphAtlas) -> String {
    let map = LabelMap;
    let mut out = format!("GLYPHS {} {} {}\n", CLASS_COUNT, atlas.width, atlas.height);
    for (id, t) in atlas.templates.iter().enumerate() {
        out.push_str(&format!("CHAR {} {}\n", id, map.latin_of(id).expect("class id")));
        for y in 0..t.height() {
            out.extend((0..t.width()).map(|x| if t.get(x, y) { '1' } else { '0' }));
            out.push('\n');
        }
    }
    out
}

pub fn load_atlas(path: impl AsRef<Path>) -> Result<GlyphAtlas, AtlasError> {
    parse_atlas(&fs::read_to_string(path)?)
}

pub fn save_atlas(atlas: &GlyphAtlas, path: impl AsRef<Path>) -> Result<(), AtlasError> {
    fs::write(path, format_atlas(atlas))?;
    Ok(())
}
