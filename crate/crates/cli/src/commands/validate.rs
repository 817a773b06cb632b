use std::collections::HashMap;

use serde::{Deserialize, Serialize};
use serde_json::Value;

use rec_core::model::{CitationMode, ContextDocument, Violation, ViolationCode};
use rec_core::schema::{
    parse_pointwise, parse_quality_output, parse_rag_output, serialize_canonical, ValidationReport,
};
use rec_core::verify::{verify_quality_output, verify_rag_output, MatchPolicy, VerificationReport};

use crate::args::ValidateArgs;
use crate::error::{CliError, CliResult, Exit};
use crate::io::{print_json, read_contexts, read_rows};
use crate::settings::Settings;

#[derive(Debug, Deserialize)]
#[serde(untagged)]
enum Refs {
    One(String),
    Many(Vec<String>),
}

impl Refs {
    fn ids(&self) -> Vec<&str> {
        match self {
            Refs::One(s) => vec![s.as_str()],
            Refs::Many(v) => v.iter().map(String::as_str).collect(),
        }
    }
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct StoredRecord {
    context_ref: Refs,
    output: Value,
    #[serde(default)]
    answer: Option<String>,
    #[serde(default)]
    mode: Option<String>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
enum Kind {
    Quality,
    Rag,
    Pointwise,
    Unknown,
}

#[derive(Debug, Serialize)]
struct RecordReport {
    index: usize,
    kind: Kind,
    ok: bool,
    validation: ValidationReport,
    #[serde(skip_serializing_if = "Option::is_none")]
    verification: Option<VerificationReport>,
}

#[derive(Debug, Serialize)]
struct Report {
    n: usize,
    failed: usize,
    records: Vec<RecordReport>,
}

fn violation(path: &str, detail: impl Into<String>) -> ValidationReport {
    ValidationReport::from_violations(vec![Violation::new(ViolationCode::Invariant, path, detail)])
}

/// The output as raw text, whether it was stored as an object or a string.
fn raw_text(output: &Value) -> String {
    match output {
        Value::String(s) => s.clone(),
        other => serialize_canonical(other).into_string(),
    }
}

fn infer_kind(raw: &str) -> Kind {
    let Some(obj) = rec_core::schema::first_object(raw) else {
        return Kind::Unknown;
    };
    let has = |k: &str| obj.contains_key(k);
    if has("statements") {
        Kind::Quality
    } else if has("citations") {
        Kind::Rag
    } else if has("metriclabel") {
        Kind::Pointwise
    } else {
        Kind::Unknown
    }
}

/// Mode from the keys of the first cited entry when the record does not say.
fn infer_rag_mode(raw: &str) -> CitationMode {
    let first = rec_core::schema::first_object(raw)
        .and_then(|o| o.get("citations").cloned())
        .and_then(|c| c.as_array().and_then(|a| a.first().cloned()));
    let has = |k: &str| first.as_ref().is_some_and(|e| e.get(k).is_some());
    match (has("claim"), has("snippet")) {
        (true, true) => CitationMode::InlineWithSnippet,
        (true, false) => CitationMode::Inline,
        (false, true) => CitationMode::PostFixWithSnippet,
        (false, false) => CitationMode::PostFix,
    }
}

fn check(
    index: usize,
    rec: &StoredRecord,
    contexts: &HashMap<String, ContextDocument>,
    policy: MatchPolicy,
) -> RecordReport {
    let raw = raw_text(&rec.output);
    let kind = infer_kind(&raw);
    let mut report = RecordReport {
        index,
        kind,
        ok: false,
        validation: ValidationReport::ok(),
        verification: None,
    };
    let lookup = |id: &str| contexts.get(id).cloned().ok_or_else(|| violation("context_ref", format!("unknown context `{id}`")));
    let ids = rec.context_ref.ids();
    match kind {
        Kind::Unknown => {
            report.validation = match parse_quality_output(&raw) {
                Err(e) => e.report(),
                Ok(_) => violation("output", "unrecognised output shape"),
            };
        }
        Kind::Pointwise => match parse_pointwise(&raw) {
            Err(e) => report.validation = e.report(),
            Ok(_) => report.ok = true,
        },
        Kind::Quality => match parse_quality_output(&raw) {
            Err(e) => report.validation = e.report(),
            Ok(out) => {
                let [id] = ids.as_slice() else {
                    report.validation = violation("context_ref", "quality outputs cite exactly one context");
                    return report;
                };
                match lookup(id) {
                    Err(v) => report.validation = v,
                    Ok(doc) => {
                        let v = verify_quality_output(&out, &doc, policy);
                        report.ok = v.passes();
                        report.verification = Some(v);
                    }
                }
            }
        },
        Kind::Rag => {
            let mode = match rec.mode.as_deref() {
                Some(m) => match m.parse() {
                    Ok(m) => m,
                    Err(e) => {
                        report.validation = violation("mode", format!("{e}"));
                        return report;
                    }
                },
                None => infer_rag_mode(&raw),
            };
            let Some(answer) = &rec.answer else {
                report.validation = violation("answer", "RAG outputs need the answer they cite");
                return report;
            };
            let chunks: Result<Vec<_>, _> = ids.iter().map(|id| lookup(id)).collect();
            let chunks = match chunks {
                Ok(c) => c,
                Err(v) => {
                    report.validation = v;
                    return report;
                }
            };
            match parse_rag_output(&raw, mode) {
                Err(e) => report.validation = e.report(),
                Ok(out) => match verify_rag_output(&out, &chunks, answer, policy) {
                    Err(e) => report.validation = violation("citations", e.to_string()),
                    Ok(v) => {
                        report.ok = v.passes();
                        report.verification = Some(v);
                    }
                },
            }
        }
    }
    report
}

pub fn run(args: ValidateArgs, settings: &Settings) -> CliResult {
    let records: Vec<StoredRecord> = read_rows(&args.records)?;
    let mut contexts = HashMap::new();
    for doc in read_contexts(&args.contexts)? {
        let Some(id) = doc.context_id.clone() else {
            return Err(CliError::usage("every context needs a context_id"));
        };
        if contexts.insert(id.clone(), doc).is_some() {
            return Err(CliError::usage(format!("duplicate context id `{id}`")));
        }
    }
    let reports: Vec<RecordReport> = records
        .iter()
        .enumerate()
        .map(|(i, r)| check(i + 1, r, &contexts, settings.policy))
        .collect();
    let failed = reports.iter().filter(|r| !r.ok).count();
    for r in reports.iter().filter(|r| !r.ok) {
        log::error!("record {} failed validation", r.index);
    }
    print_json(&Report {
        n: reports.len(),
        failed,
        records: reports,
    });
    Ok(if failed == 0 { Exit::Success } else { Exit::Validation })
}
