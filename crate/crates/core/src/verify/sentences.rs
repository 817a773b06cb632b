//! Rule-based sentence segmentation.
//!
//! A sentence ends at `.`, `?` or `!` when the next character is whitespace
//! or the end of input, and at every newline. Sentence text is trimmed, so the
//! gaps between consecutive spans contain only whitespace. Abbreviations such
//! as "Dr." are split like any other period.

use serde::Serialize;

use crate::model::CharSpan;

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Sentence {
    pub text: String,
    pub span: CharSpan,
}

fn is_terminal(c: char) -> bool {
    matches!(c, '.' | '?' | '!')
}

pub fn segment_sentences(text: &str) -> Vec<Sentence> {
    let chars: Vec<char> = text.chars().collect();
    let mut spans = Vec::new();
    let mut start: Option<usize> = None;
    // Index one past the last non-whitespace char of the open sentence.
    let mut last_content = 0;

    for (i, &c) in chars.iter().enumerate() {
        if c == '\n' {
            if let Some(s) = start.take() {
                spans.push(CharSpan::new(s, last_content));
            }
            continue;
        }
        if c.is_whitespace() {
            continue;
        }
        if start.is_none() {
            start = Some(i);
        }
        last_content = i + 1;
        let at_boundary = chars.get(i + 1).is_none_or(|n| n.is_whitespace());
        if is_terminal(c) && at_boundary {
            spans.push(CharSpan::new(start.take().expect("sentence is open"), i + 1));
        }
    }
    if let Some(s) = start {
        spans.push(CharSpan::new(s, last_content));
    }

    spans
        .into_iter()
        .map(|span| Sentence {
            text: chars[span.start..span.end].iter().collect(),
            span,
        })
        .collect()
}
