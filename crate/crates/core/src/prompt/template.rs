//! Minimal `{slot}` templates.
//!
//! A slot is `{` + identifier + `}` where the identifier is lowercase ASCII,
//! digits or `_` and does not start with a digit. Any other brace is literal
//! text, which keeps the JSON examples inside the templates intact. Rendering
//! is single-pass, so slot markers inside substituted values are never
//! expanded.

use std::collections::BTreeMap;

#[derive(Debug, Clone, PartialEq, Eq)]
enum Segment {
    Literal(String),
    Slot(String),
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Template {
    segments: Vec<Segment>,
}

fn is_slot_name(s: &str) -> bool {
    let mut chars = s.chars();
    matches!(chars.next(), Some(c) if c.is_ascii_lowercase() || c == '_')
        && chars.all(|c| c.is_ascii_lowercase() || c.is_ascii_digit() || c == '_')
}

impl Template {
    /// Parses template source. Leading lines starting with `%%` are header
    /// comments and are dropped, as is a single trailing newline.
    pub fn parse(source: &str) -> Template {
        let mut body = source;
        while body.starts_with("%%") {
            body = match body.find('\n') {
                Some(i) => &body[i + 1..],
                None => "",
            };
        }
        let body = body
            .strip_suffix("\r\n")
            .or_else(|| body.strip_suffix('\n'))
            .unwrap_or(body);

        let mut segments = Vec::new();
        let mut literal = String::new();
        let mut rest = body;
        while let Some(open) = rest.find('{') {
            literal.push_str(&rest[..open]);
            let after = &rest[open + 1..];
            match after.find('}') {
                Some(close) if is_slot_name(&after[..close]) => {
                    if !literal.is_empty() {
                        segments.push(Segment::Literal(std::mem::take(&mut literal)));
                    }
                    segments.push(Segment::Slot(after[..close].to_string()));
                    rest = &after[close + 1..];
                }
                _ => {
                    literal.push('{');
                    rest = after;
                }
            }
        }
        literal.push_str(rest);
        if !literal.is_empty() {
            segments.push(Segment::Literal(literal));
        }
        Template { segments }
    }

    /// Slot names in order of first appearance.
    pub fn slots(&self) -> Vec<&str> {
        let mut out: Vec<&str> = Vec::new();
        for seg in &self.segments {
            if let Segment::Slot(name) = seg {
                if !out.contains(&name.as_str()) {
                    out.push(name);
                }
            }
        }
        out
    }

    /// Fills every slot. Returns the name of the first slot without a value.
    pub fn render(&self, values: &BTreeMap<String, String>) -> Result<String, String> {
        let mut out = String::new();
        for seg in &self.segments {
            match seg {
                Segment::Literal(s) => out.push_str(s),
                Segment::Slot(name) => match values.get(name) {
                    Some(v) => out.push_str(v),
                    None => return Err(name.clone()),
                },
            }
        }
        Ok(out)
    }

    /// The final line of the template, with any trailing whitespace removed.
    pub fn last_line(&self) -> String {
        let tail = match self.segments.last() {
            Some(Segment::Literal(s)) => s.as_str(),
            _ => "",
        };
        tail.rsplit('\n').next().unwrap_or("").trim_end().to_string()
    }
}
