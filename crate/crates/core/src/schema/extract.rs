//! Locating the JSON object inside free-form model output.

use serde_json::{Map, Value};

/// Returns the first top-level JSON object embedded in `raw`.
///
/// Surrounding prose and markdown fences are ignored. Candidates are tried at
/// each `{` from left to right; when a candidate fails to parse, scanning
/// resumes past the point where the parser gave up so that objects nested in
/// a broken outer object are never mistaken for a top-level one.
pub fn first_object(raw: &str) -> Option<Map<String, Value>> {
    let mut pos = 0;
    while let Some(rel) = raw[pos..].find('{') {
        let start = pos + rel;
        let tail = &raw[start..];
        let mut stream = serde_json::Deserializer::from_str(tail).into_iter::<Value>();
        match stream.next() {
            Some(Ok(Value::Object(map))) => return Some(map),
            Some(Ok(_)) | None => pos = start + 1,
            Some(Err(e)) => {
                if e.is_eof() {
                    return None;
                }
                let consumed = byte_offset(tail, e.line(), e.column());
                pos = next_char_boundary(raw, start + consumed.max(1));
            }
        }
    }
    None
}

// serde_json reports 1-based lines and byte columns.
fn byte_offset(text: &str, line: usize, column: usize) -> usize {
    let mut offset = 0;
    for (i, l) in text.split_inclusive('\n').enumerate() {
        if i + 1 == line {
            return (offset + column.saturating_sub(1)).min(text.len());
        }
        offset += l.len();
    }
    text.len()
}

fn next_char_boundary(s: &str, mut i: usize) -> usize {
    while i < s.len() && !s.is_char_boundary(i) {
        i += 1;
    }
    i.min(s.len())
}
