//! Parsing and canonical serialization of evaluator outputs.
//!
//! The envelope is lenient: prose or code fences around the JSON are
//! tolerated. The payload is strict: required fields must be present and
//! well-typed, and `Yes`/`No` labels accept nothing else. Unknown fields are
//! kept in memory and dropped on canonical output.

mod extract;
pub mod jsonl;

use std::fmt;

use serde::{Deserialize, Serialize};
use serde_json::{Map, Value};

use crate::model::{
    CharSpan, CitationMode, CitationSnippet, ContextRef, Extra, PointwiseVerdict,
    QualityEvalOutput, RagCitationEntry, RagCitationOutput, Statement, Violation, ViolationCode,
    YesNo,
};

pub use extract::first_object;
pub use jsonl::{read_jsonl, write_jsonl, JsonlError, JsonlRead, LineError, LinePolicy};

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ValidationReport {
    pub ok: bool,
    pub violations: Vec<Violation>,
}

impl ValidationReport {
    pub fn from_violations(violations: Vec<Violation>) -> Self {
        ValidationReport {
            ok: violations.is_empty(),
            violations,
        }
    }

    pub fn ok() -> Self {
        Self::from_violations(Vec::new())
    }
}

/// A rejected payload, carrying every violation found.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SchemaError {
    pub violations: Vec<Violation>,
}

impl SchemaError {
    fn single(code: ViolationCode, path: impl Into<String>, detail: impl Into<String>) -> Self {
        SchemaError {
            violations: vec![Violation::new(code, path, detail)],
        }
    }

    /// Code of the first violation, which is what callers usually branch on.
    pub fn code(&self) -> ViolationCode {
        self.violations
            .first()
            .map(|v| v.code)
            .unwrap_or(ViolationCode::BadJson)
    }

    pub fn has(&self, code: ViolationCode) -> bool {
        self.violations.iter().any(|v| v.code == code)
    }

    pub fn report(&self) -> ValidationReport {
        ValidationReport::from_violations(self.violations.clone())
    }
}

impl fmt::Display for SchemaError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let parts: Vec<String> = self.violations.iter().map(|v| v.to_string()).collect();
        f.write_str(&parts.join("; "))
    }
}

impl std::error::Error for SchemaError {}

fn locate_object(raw: &str) -> Result<Map<String, Value>, SchemaError> {
    first_object(raw).ok_or_else(|| {
        SchemaError::single(ViolationCode::BadJson, "", "no parseable JSON object in output")
    })
}

/// Walks a JSON object and records violations instead of failing fast.
struct Fields<'a> {
    map: &'a Map<String, Value>,
    path: String,
    known: &'static [&'static str],
}

impl<'a> Fields<'a> {
    fn new(map: &'a Map<String, Value>, path: String, known: &'static [&'static str]) -> Self {
        Fields { map, path, known }
    }

    fn at(&self, key: &str) -> String {
        if self.path.is_empty() {
            key.to_string()
        } else {
            format!("{}.{key}", self.path)
        }
    }

    fn required(&self, key: &str, out: &mut Vec<Violation>) -> Option<&'a Value> {
        match self.map.get(key) {
            Some(Value::Null) | None => {
                out.push(Violation::new(
                    ViolationCode::MissingField,
                    self.at(key),
                    "required field is missing",
                ));
                None
            }
            Some(v) => Some(v),
        }
    }

    fn optional(&self, key: &str) -> Option<&'a Value> {
        match self.map.get(key) {
            Some(Value::Null) | None => None,
            Some(v) => Some(v),
        }
    }

    fn string(&self, key: &str, v: &'a Value, out: &mut Vec<Violation>) -> Option<String> {
        match v {
            Value::String(s) => Some(s.clone()),
            other => {
                out.push(wrong_type(self.at(key), "string", other));
                None
            }
        }
    }

    fn required_string(&self, key: &str, out: &mut Vec<Violation>) -> Option<String> {
        self.required(key, out).and_then(|v| self.string(key, v, out))
    }

    fn optional_string(&self, key: &str, out: &mut Vec<Violation>) -> Option<String> {
        self.optional(key).and_then(|v| self.string(key, v, out))
    }

    fn yes_no(&self, key: &str, out: &mut Vec<Violation>) -> Option<YesNo> {
        let s = self.required_string(key, out)?;
        let parsed = YesNo::parse_lenient(&s);
        if parsed.is_none() {
            out.push(Violation::new(
                ViolationCode::WrongType,
                self.at(key),
                format!("expected \"Yes\" or \"No\", found {s:?}"),
            ));
        }
        parsed
    }

    fn array(&self, key: &str, out: &mut Vec<Violation>) -> Option<&'a Vec<Value>> {
        match self.required(key, out)? {
            Value::Array(items) => Some(items),
            other => {
                out.push(wrong_type(self.at(key), "array", other));
                None
            }
        }
    }

    fn extra(&self) -> Extra {
        Extra(
            self.map
                .iter()
                .filter(|(k, _)| !self.known.contains(&k.as_str()))
                .map(|(k, v)| (k.clone(), v.clone()))
                .collect(),
        )
    }
}

fn wrong_type(path: String, expected: &str, found: &Value) -> Violation {
    let kind = match found {
        Value::Null => "null",
        Value::Bool(_) => "boolean",
        Value::Number(_) => "number",
        Value::String(_) => "string",
        Value::Array(_) => "array",
        Value::Object(_) => "object",
    };
    Violation::new(
        ViolationCode::WrongType,
        path,
        format!("expected {expected}, found {kind}"),
    )
}

fn as_object<'a>(
    v: &'a Value,
    path: &str,
    out: &mut Vec<Violation>,
) -> Option<&'a Map<String, Value>> {
    match v {
        Value::Object(m) => Some(m),
        other => {
            out.push(wrong_type(path.to_string(), "object", other));
            None
        }
    }
}

fn finish<T>(value: Option<T>, mut out: Vec<Violation>, invariants: impl FnOnce(&T) -> Vec<Violation>) -> Result<T, SchemaError> {
    match value {
        Some(v) if out.is_empty() => {
            let broken = invariants(&v);
            if broken.is_empty() {
                Ok(v)
            } else {
                Err(SchemaError { violations: broken })
            }
        }
        _ => {
            if out.is_empty() {
                out.push(Violation::new(ViolationCode::BadJson, "", "unusable payload"));
            }
            Err(SchemaError { violations: out })
        }
    }
}

const QUALITY_FIELDS: &[&str] = &["answer", "feedback", "statements"];
const STATEMENT_FIELDS: &[&str] = &["statement_string", "citations"];
const SNIPPET_FIELDS: &[&str] = &["snippet", "context_id", "char_span"];

fn parse_citation(v: &Value, path: &str, out: &mut Vec<Violation>) -> Option<CitationSnippet> {
    // Citations come either as bare strings or as {"snippet": ...} objects.
    match v {
        Value::String(s) => Some(CitationSnippet::new(s.clone())),
        Value::Object(m) => {
            let f = Fields::new(m, path.to_string(), SNIPPET_FIELDS);
            let snippet = f.required_string("snippet", out);
            let context_id = f.optional_string("context_id", out);
            let char_span = match f.optional("char_span") {
                None => None,
                Some(span) => match serde_json::from_value::<(usize, usize)>(span.clone()) {
                    Ok((s, e)) if s <= e => Some(CharSpan::new(s, e)),
                    _ => {
                        out.push(Violation::new(
                            ViolationCode::WrongType,
                            f.at("char_span"),
                            "expected [start, end] with start <= end",
                        ));
                        None
                    }
                },
            };
            snippet.map(|snippet| CitationSnippet {
                snippet,
                context_id,
                char_span,
            })
        }
        other => {
            out.push(wrong_type(path.to_string(), "string or object", other));
            None
        }
    }
}

fn parse_statement(v: &Value, path: &str, out: &mut Vec<Violation>) -> Option<Statement> {
    let m = as_object(v, path, out)?;
    let f = Fields::new(m, path.to_string(), STATEMENT_FIELDS);
    let statement_string = f.required_string("statement_string", out);
    let citations = f.array("citations", out).map(|items| {
        items
            .iter()
            .enumerate()
            .filter_map(|(j, c)| parse_citation(c, &format!("{path}.citations[{j}]"), out))
            .collect::<Vec<_>>()
    });
    Some(Statement {
        statement_string: statement_string?,
        citations: citations?,
    })
}

/// Parses a content-quality evaluation (answer, feedback, cited statements).
pub fn parse_quality_output(raw: &str) -> Result<QualityEvalOutput, SchemaError> {
    let map = locate_object(raw)?;
    let mut out = Vec::new();
    let f = Fields::new(&map, String::new(), QUALITY_FIELDS);
    let answer = f.yes_no("answer", &mut out);
    let feedback = f.required_string("feedback", &mut out);
    let statements = f.array("statements", &mut out).map(|items| {
        items
            .iter()
            .enumerate()
            .filter_map(|(i, s)| parse_statement(s, &format!("statements[{i}]"), &mut out))
            .collect::<Vec<_>>()
    });
    let value = match (answer, feedback, statements) {
        (Some(answer), Some(feedback), Some(statements)) => Some(QualityEvalOutput {
            answer,
            feedback,
            statements,
            extra: f.extra(),
        }),
        _ => None,
    };
    finish(value, out, QualityEvalOutput::violations)
}

const RAG_FIELDS: &[&str] = &["citations"];
const RAG_ENTRY_FIELDS: &[&str] = &["context_id", "claim", "snippet"];

/// Parses a RAG citation list, checking each entry's fields against `mode`.
pub fn parse_rag_output(raw: &str, mode: CitationMode) -> Result<RagCitationOutput, SchemaError> {
    let map = locate_object(raw)?;
    let mut out = Vec::new();
    let f = Fields::new(&map, String::new(), RAG_FIELDS);
    let citations = f.array("citations", &mut out).map(|items| {
        items
            .iter()
            .enumerate()
            .filter_map(|(i, v)| {
                let path = format!("citations[{i}]");
                let m = as_object(v, &path, &mut out)?;
                let ef = Fields::new(m, path, RAG_ENTRY_FIELDS);
                let context_id = ef.required_string("context_id", &mut out);
                let claim = ef.optional_string("claim", &mut out);
                let snippet = ef.optional_string("snippet", &mut out);
                Some(RagCitationEntry {
                    context_id: ContextRef::from(context_id?.as_str()),
                    claim,
                    snippet,
                    extra: ef.extra(),
                })
            })
            .collect::<Vec<_>>()
    });
    let value = citations.map(|citations| RagCitationOutput { citations, mode });
    finish(value, out, RagCitationOutput::violations)
}

const POINTWISE_FIELDS: &[&str] = &["metriclabel", "justification"];

/// Parses a pointwise `{metriclabel, justification}` verdict.
pub fn parse_pointwise(raw: &str) -> Result<PointwiseVerdict, SchemaError> {
    let map = locate_object(raw)?;
    let mut out = Vec::new();
    let f = Fields::new(&map, String::new(), POINTWISE_FIELDS);
    let label = f.yes_no("metriclabel", &mut out);
    let justification = f.required_string("justification", &mut out);
    let value = match (label, justification) {
        (Some(metriclabel), Some(justification)) => Some(PointwiseVerdict {
            metriclabel,
            justification,
            extra: f.extra(),
        }),
        _ => None,
    };
    finish(value, out, PointwiseVerdict::violations)
}

/// JSON text with sorted object keys and no insignificant whitespace.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct CanonicalJsonText(String);

impl CanonicalJsonText {
    pub fn as_str(&self) -> &str {
        &self.0
    }

    pub fn into_string(self) -> String {
        self.0
    }
}

impl fmt::Display for CanonicalJsonText {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl AsRef<str> for CanonicalJsonText {
    fn as_ref(&self) -> &str {
        &self.0
    }
}

fn sort_keys(v: Value) -> Value {
    match v {
        Value::Object(map) => {
            let mut entries: Vec<(String, Value)> = map.into_iter().collect();
            entries.sort_by(|a, b| a.0.cmp(&b.0));
            Value::Object(entries.into_iter().map(|(k, v)| (k, sort_keys(v))).collect())
        }
        Value::Array(items) => Value::Array(items.into_iter().map(sort_keys).collect()),
        other => other,
    }
}

/// Canonical text for a JSON value.
pub fn canonical_value(value: Value) -> CanonicalJsonText {
    // Serializing a `Value` cannot fail.
    CanonicalJsonText(serde_json::to_string(&sort_keys(value)).expect("serialize json value"))
}

/// Serializes any model type to its canonical JSON text.
pub fn serialize_canonical<T: Serialize + ?Sized>(value: &T) -> CanonicalJsonText {
    let v = serde_json::to_value(value).expect("model types serialize to plain JSON");
    canonical_value(v)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::ViolationCode as C;

    #[test]
    fn minimal_quality_output() {
        let out = parse_quality_output(r#"{"answer":"Yes","feedback":"No errors.","statements":[]}"#)
            .unwrap();
        assert_eq!(out.answer, YesNo::Yes);
        assert!(out.statements.is_empty());
    }

    #[test]
    fn bad_json() {
        let err = parse_quality_output("invalid json").unwrap_err();
        assert_eq!(err.code(), C::BadJson);
        assert_eq!(parse_pointwise("").unwrap_err().code(), C::BadJson);
    }

    #[test]
    fn answer_is_case_insensitive_and_strict() {
        let out = parse_quality_output(
            r#"{"answer":"  yES ","feedback":"fine","statements":[]}"#,
        )
        .unwrap();
        assert_eq!(out.answer, YesNo::Yes);
        let err = parse_quality_output(r#"{"answer":"Maybe","feedback":"x","statements":[]}"#)
            .unwrap_err();
        assert_eq!(err.code(), C::WrongType);
    }

    #[test]
    fn missing_and_wrong_fields_are_all_reported() {
        let err = parse_quality_output(r#"{"answer":3,"statements":{}}"#).unwrap_err();
        assert!(err.has(C::WrongType));
        assert!(err.has(C::MissingField));
        assert_eq!(err.violations.len(), 3);
    }

    #[test]
    fn both_citation_shapes_accepted() {
        let raw = r#"{"answer":"No","feedback":"f","statements":[
            {"statement_string":"s","citations":["a", {"snippet":"b"}]}]}"#;
        let out = parse_quality_output(raw).unwrap();
        let snippets: Vec<_> = out.snippets().map(|c| c.snippet.as_str()).collect();
        assert_eq!(snippets, ["a", "b"]);
        // Canonical form always uses objects.
        let canon = serialize_canonical(&out);
        assert!(canon.as_str().contains(r#"{"snippet":"a"}"#));
    }

    #[test]
    fn no_answer_needs_statements() {
        let err = parse_quality_output(r#"{"answer":"No","feedback":"bad","statements":[]}"#)
            .unwrap_err();
        assert_eq!(err.code(), C::EmptyRequired);
    }

    #[test]
    fn extras_kept_then_dropped() {
        let raw = r#"{"answer":"Yes","feedback":"ok","statements":[],"score":7}"#;
        let out = parse_quality_output(raw).unwrap();
        assert_eq!(out.extra.0.get("score"), Some(&serde_json::json!(7)));
        assert_eq!(
            serialize_canonical(&out).as_str(),
            r#"{"answer":"Yes","feedback":"ok","statements":[]}"#
        );
    }

    #[test]
    fn pointwise_cases() {
        let v = parse_pointwise(r#"{"metriclabel":"No","justification":"invented fact X"}"#)
            .unwrap();
        assert_eq!(v.metriclabel, YesNo::No);
        assert_eq!(v.justification, "invented fact X");
        let err = parse_pointwise(r#"{"metriclabel":"maybe","justification":"…"}"#).unwrap_err();
        assert_eq!(err.code(), C::WrongType);
    }

    #[test]
    fn pointwise_fenced() {
        // Hand-built fence variants.
        for raw in [
            "```json\n{\"metriclabel\": \"Yes\", \"justification\": \"ok\"}\n```",
            "```\n{\"metriclabel\": \"Yes\", \"justification\": \"ok\"}\n```",
            "Sure!\n```json\n{\"metriclabel\":\"yes\",\"justification\":\"ok\"}\n```\nDone.",
            "  ```JSON\r\n{\"metriclabel\":\"YES\",\"justification\":\"ok\"}\r\n```  ",
        ] {
            let v = parse_pointwise(raw).unwrap();
            assert_eq!(v.metriclabel, YesNo::Yes);
            assert_eq!(v.justification, "ok");
        }
    }

    #[test]
    fn justification_preserved_verbatim() {
        let v = parse_pointwise(r#"{"metriclabel":"Yes","justification":"  spaced\n text "}"#)
            .unwrap();
        assert_eq!(v.justification, "  spaced\n text ");
    }

    #[test]
    fn rag_context_id_must_be_string() {
        let err = parse_rag_output(r#"{"citations":[{"context_id":1233}]}"#, CitationMode::PostFix)
            .unwrap_err();
        assert_eq!(err.code(), C::WrongType);
    }

    #[test]
    fn rag_none_context_id() {
        let out = parse_rag_output(
            r#"{"citations":[{"context_id":"None","claim":"c"}]}"#,
            CitationMode::Inline,
        )
        .unwrap();
        assert_eq!(out.citations[0].context_id, ContextRef::Unsupported);
    }

    #[test]
    fn canonical_is_sorted_and_compact() {
        let v = serde_json::json!({"b": 1, "a": {"d": [1, {"z": 0, "y": 1}], "c": null}});
        assert_eq!(
            canonical_value(v).as_str(),
            r#"{"a":{"c":null,"d":[1,{"y":1,"z":0}]},"b":1}"#
        );
    }
}
