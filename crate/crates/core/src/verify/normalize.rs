//! Text normalization that remembers where every output character came from.

use unicode_normalization::char::canonical_combining_class;
use unicode_normalization::UnicodeNormalization;

use crate::model::CharSpan;

/// A normalized view of a source text.
///
/// The source is cut into units (a starter plus its combining marks; units
/// are merged when NFC composes across them). Each unit normalizes
/// independently, so every output character belongs to exactly one unit and
/// every unit knows its character range in the source. Matches are only
/// accepted when they start and end on unit boundaries, which keeps reported
/// spans exact.
#[derive(Debug, Clone)]
pub struct MappedText {
    text: String,
    /// Byte offset of each output char in `text`, plus `text.len()` at the end.
    byte_starts: Vec<usize>,
    /// For each output char, the source range of the unit it came from.
    origin: Vec<CharSpan>,
    /// Whether output char `i` opens its unit.
    opens_unit: Vec<bool>,
    /// Whether output char `i` closes its unit.
    closes_unit: Vec<bool>,
}

struct Unit {
    src: CharSpan,
    raw: String,
    out: String,
}

fn split_units(source: &str) -> Vec<Unit> {
    let mut units: Vec<Unit> = Vec::new();
    for (i, c) in source.chars().enumerate() {
        // A mark after whitespace starts its own unit so whitespace units
        // stay pure and can be collapsed.
        let attach = canonical_combining_class(c) != 0
            && units.last().is_some_and(|u| !u.raw.chars().all(char::is_whitespace));
        if attach {
            let u = units.last_mut().expect("checked non-empty");
            u.raw.push(c);
            u.src.end = i + 1;
        } else {
            units.push(Unit {
                src: CharSpan::new(i, i + 1),
                raw: c.to_string(),
                out: String::new(),
            });
        }
    }
    units
}

fn compose_units(units: Vec<Unit>) -> Vec<Unit> {
    let mut merged: Vec<Unit> = Vec::with_capacity(units.len());
    for mut u in units {
        u.out = u.raw.nfc().collect();
        if let Some(prev) = merged.last_mut() {
            let joined: String = format!("{}{}", prev.raw, u.raw).nfc().collect();
            if joined != format!("{}{}", prev.out, u.out) {
                prev.raw.push_str(&u.raw);
                prev.out = joined;
                prev.src.end = u.src.end;
                continue;
            }
        }
        merged.push(u);
    }
    merged
}

impl MappedText {
    /// Identity mapping: every source char is its own unit.
    pub fn strict(source: &str) -> MappedText {
        let mut m = MappedText::empty();
        for (i, c) in source.chars().enumerate() {
            m.push_unit(&c.to_string(), CharSpan::new(i, i + 1));
        }
        m.finish()
    }

    /// NFC, whitespace runs collapsed to one space, ends trimmed.
    pub fn normalized(source: &str) -> MappedText {
        let units = compose_units(split_units(source));
        let mut m = MappedText::empty();
        let mut pending_ws: Option<CharSpan> = None;
        for u in units {
            if u.out.chars().all(char::is_whitespace) {
                pending_ws = Some(match pending_ws {
                    Some(span) => CharSpan::new(span.start, u.src.end),
                    None => u.src,
                });
                continue;
            }
            if let Some(ws) = pending_ws.take() {
                if !m.origin.is_empty() {
                    m.push_unit(" ", ws);
                }
            }
            m.push_unit(&u.out, u.src);
        }
        m.finish()
    }

    fn empty() -> MappedText {
        MappedText {
            text: String::new(),
            byte_starts: Vec::new(),
            origin: Vec::new(),
            opens_unit: Vec::new(),
            closes_unit: Vec::new(),
        }
    }

    fn push_unit(&mut self, out: &str, src: CharSpan) {
        let n = out.chars().count();
        for (k, c) in out.chars().enumerate() {
            self.byte_starts.push(self.text.len());
            self.text.push(c);
            self.origin.push(src);
            self.opens_unit.push(k == 0);
            self.closes_unit.push(k + 1 == n);
        }
    }

    fn finish(mut self) -> MappedText {
        self.byte_starts.push(self.text.len());
        self
    }

    pub fn as_str(&self) -> &str {
        &self.text
    }

    pub fn is_empty(&self) -> bool {
        self.text.is_empty()
    }

    fn char_index(&self, byte: usize) -> usize {
        self.byte_starts
            .binary_search(&byte)
            .expect("match offsets fall on char boundaries")
    }

    /// Every unit-aligned occurrence of `needle`, as source spans, in order.
    /// Overlapping occurrences are all reported.
    pub fn find_all(&self, needle: &str) -> Vec<CharSpan> {
        let mut spans = Vec::new();
        if needle.is_empty() {
            return spans;
        }
        let needle_chars = needle.chars().count();
        let mut from = 0;
        while let Some(rel) = self.text[from..].find(needle) {
            let byte = from + rel;
            let start = self.char_index(byte);
            let last = start + needle_chars - 1;
            if self.opens_unit[start] && self.closes_unit[last] {
                spans.push(CharSpan::new(self.origin[start].start, self.origin[last].end));
            }
            from = self.byte_starts[start + 1];
        }
        spans
    }
}
