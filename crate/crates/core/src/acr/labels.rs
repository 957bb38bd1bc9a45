//! The 26-class plate alphabet: digits one to nine, then seventeen letters.

pub const CLASS_COUNT: usize = 26;
pub const DIGIT_COUNT: usize = 9;
pub const LETTER_COUNT: usize = CLASS_COUNT - DIGIT_COUNT;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Symbol {
    pub id: usize,
    pub ch: char,
    /// Latin transliteration key.
    pub latin: char,
}

const SYMBOLS: [(char, char); CLASS_COUNT] = [
    ('\u{0661}', '1'),
    ('\u{0662}', '2'),
    ('\u{0663}', '3'),
    ('\u{0664}', '4'),
    ('\u{0665}', '5'),
    ('\u{0666}', '6'),
    ('\u{0667}', '7'),
    ('\u{0668}', '8'),
    ('\u{0669}', '9'),
    ('\u{0623}', 'A'),
    ('\u{0628}', 'B'),
    ('\u{062C}', 'G'),
    ('\u{062F}', 'D'),
    ('\u{0631}', 'R'),
    ('\u{0633}', 'S'),
    ('\u{0635}', 'C'),
    ('\u{0637}', 'T'),
    ('\u{0639}', 'E'),
    ('\u{0641}', 'F'),
    ('\u{0642}', 'K'),
    ('\u{0644}', 'L'),
    ('\u{0645}', 'M'),
    ('\u{0646}', 'N'),
    ('\u{0647}', 'H'),
    ('\u{0648}', 'W'),
    ('\u{064A}', 'Y'),
];

/// Bijection between class ids, Arabic characters and Latin keys.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct LabelMap;

impl LabelMap {
    pub fn symbol(&self, id: usize) -> Option<Symbol> {
        SYMBOLS.get(id).map(|&(ch, latin)| Symbol { id, ch, latin })
    }

    pub fn symbols(&self) -> impl Iterator<Item = Symbol> {
        let map = *self;
        (0..CLASS_COUNT).map(move |id| map.symbol(id).expect("in range"))
    }

    pub fn char_of(&self, id: usize) -> Option<char> {
        SYMBOLS.get(id).map(|s| s.0)
    }

    pub fn latin_of(&self, id: usize) -> Option<char> {
        SYMBOLS.get(id).map(|s| s.1)
    }

    pub fn id_of_char(&self, ch: char) -> Option<usize> {
        SYMBOLS.iter().position(|s| s.0 == ch)
    }

    pub fn id_of_latin(&self, key: char) -> Option<usize> {
        SYMBOLS.iter().position(|s| s.1 == key)
    }

    pub fn is_digit(&self, id: usize) -> bool {
        id < DIGIT_COUNT
    }

    pub fn is_letter(&self, id: usize) -> bool {
        (DIGIT_COUNT..CLASS_COUNT).contains(&id)
    }

    /// Latin keys for an Arabic string; `None` if any character is outside
    /// the alphabet.
    pub fn to_latin(&self, s: &str) -> Option<String> {
        s.chars().map(|c| self.id_of_char(c).and_then(|id| self.latin_of(id))).collect()
    }

    pub fn from_latin(&self, s: &str) -> Option<String> {
        s.chars().map(|c| self.id_of_latin(c).and_then(|id| self.char_of(id))).collect()
    }

    /// Class ids of an Arabic string.
    pub fn ids(&self, s: &str) -> Option<Vec<usize>> {
        s.chars().map(|c| self.id_of_char(c)).collect()
    }
}
