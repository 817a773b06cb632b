//! Verbatim citation checks.
//!
//! A citation is valid when its snippet occurs in the source it cites. Under
//! the `Normalized` policy both sides are NFC-normalized and whitespace runs
//! are collapsed before comparing; reported spans always point into the
//! original, un-normalized text.

mod normalize;
mod sentences;

use std::collections::HashMap;

use serde::{Deserialize, Serialize};

use crate::model::{CharSpan, ContextDocument, ContextRef, QualityEvalOutput, RagCitationOutput};

pub use normalize::MappedText;
pub use sentences::{segment_sentences, Sentence};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MatchPolicy {
    /// Exact substring.
    Strict,
    /// Substring after NFC, whitespace collapsing and trimming on both sides.
    #[default]
    Normalized,
}

impl std::str::FromStr for MatchPolicy {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim().to_ascii_lowercase().as_str() {
            "strict" => Ok(MatchPolicy::Strict),
            "normalized" => Ok(MatchPolicy::Normalized),
            other => Err(format!("unknown match policy `{other}` (expected strict or normalized)")),
        }
    }
}

impl MatchPolicy {
    pub fn map(self, text: &str) -> MappedText {
        match self {
            MatchPolicy::Strict => MappedText::strict(text),
            MatchPolicy::Normalized => MappedText::normalized(text),
        }
    }

    /// Equality of two texts under this policy.
    pub fn equivalent(self, a: &str, b: &str) -> bool {
        self.map(a).as_str() == self.map(b).as_str()
    }

    /// The comparison key for a text under this policy.
    pub fn key(self, text: &str) -> String {
        self.map(text).as_str().to_string()
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct MatchResult {
    pub found: bool,
    /// First occurrence, in characters of the original source.
    pub char_span: Option<CharSpan>,
    pub occurrence_count: usize,
}

impl MatchResult {
    fn from_spans(spans: &[CharSpan]) -> Self {
        MatchResult {
            found: !spans.is_empty(),
            char_span: spans.first().copied(),
            occurrence_count: spans.len(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum VerifyError {
    #[error("snippet must not be empty")]
    EmptySnippet,
    #[error("snippet not found in context: {0:?}")]
    NotFound(String),
    #[error("citation refers to unknown context_id `{0}`")]
    UnknownContextId(String),
}

/// A context prepared once for many lookups.
#[derive(Debug, Clone)]
pub struct PreparedContext<'a> {
    body: &'a str,
    policy: MatchPolicy,
    mapped: MappedText,
}

impl<'a> PreparedContext<'a> {
    pub fn new(body: &'a str, policy: MatchPolicy) -> Self {
        PreparedContext {
            body,
            policy,
            mapped: policy.map(body),
        }
    }

    pub fn body(&self) -> &'a str {
        self.body
    }

    pub fn find(&self, snippet: &str) -> Result<MatchResult, VerifyError> {
        if snippet.trim().is_empty() {
            return Err(VerifyError::EmptySnippet);
        }
        let needle = self.policy.map(snippet);
        Ok(MatchResult::from_spans(&self.mapped.find_all(needle.as_str())))
    }
}

/// Looks for `snippet` in the context body.
pub fn verify_snippet(
    snippet: &str,
    context: &ContextDocument,
    policy: MatchPolicy,
) -> Result<MatchResult, VerifyError> {
    PreparedContext::new(&context.body, policy).find(snippet)
}

/// Outcome for one citation snippet.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CitationCheck {
    /// Position among all citations of the output, in order.
    pub index: usize,
    /// Statement (quality outputs) or entry (RAG outputs) the citation belongs to.
    pub parent: usize,
    pub snippet: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub context_id: Option<String>,
    pub result: MatchResult,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ClaimCheck {
    pub index: usize,
    pub claim: String,
    pub result: MatchResult,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct VerificationReport {
    pub all_citations_verbatim: bool,
    pub per_citation: Vec<CitationCheck>,
    /// Present for RAG outputs whose mode carries claims.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub claims_verbatim: Option<bool>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub per_claim: Vec<ClaimCheck>,
    /// (statement index, found in feedback) for quality outputs.
    pub statements_extractive: Vec<(usize, bool)>,
    pub warnings: Vec<String>,
}

impl VerificationReport {
    /// Citations and claims are all verbatim. Non-extractive statements only
    /// produce warnings and do not affect this.
    pub fn passes(&self) -> bool {
        self.all_citations_verbatim && self.claims_verbatim != Some(false)
    }

    pub fn failing_citations(&self) -> impl Iterator<Item = &CitationCheck> {
        self.per_citation.iter().filter(|c| !c.result.found)
    }

    fn empty() -> Self {
        VerificationReport {
            all_citations_verbatim: true,
            per_citation: Vec::new(),
            claims_verbatim: None,
            per_claim: Vec::new(),
            statements_extractive: Vec::new(),
            warnings: Vec::new(),
        }
    }

    fn push_citation(&mut self, parent: usize, snippet: &str, context_id: Option<&str>, result: Result<MatchResult, VerifyError>) {
        let index = self.per_citation.len();
        let result = result.unwrap_or_else(|e| {
            self.warnings.push(format!("citation {index}: {e}"));
            MatchResult::from_spans(&[])
        });
        if !result.found {
            self.all_citations_verbatim = false;
        } else if result.occurrence_count > 1 {
            self.warnings.push(format!(
                "citation {index} occurs {} times; first occurrence used",
                result.occurrence_count
            ));
        }
        self.per_citation.push(CitationCheck {
            index,
            parent,
            snippet: snippet.to_string(),
            context_id: context_id.map(str::to_string),
            result,
        });
    }
}

/// Checks every cited snippet of a quality output against its context, and
/// every statement against the feedback it was extracted from.
pub fn verify_quality_output(
    out: &QualityEvalOutput,
    context: &ContextDocument,
    policy: MatchPolicy,
) -> VerificationReport {
    let ctx = PreparedContext::new(&context.body, policy);
    let feedback = PreparedContext::new(&out.feedback, MatchPolicy::Normalized);
    let mut report = VerificationReport::empty();
    for (si, st) in out.statements.iter().enumerate() {
        let extractive = feedback
            .find(&st.statement_string)
            .map(|r| r.found)
            .unwrap_or(false);
        if !extractive {
            report
                .warnings
                .push(format!("statement {si} is not a substring of the feedback"));
        }
        report.statements_extractive.push((si, extractive));
        if st.citations.is_empty() {
            report.warnings.push(format!("statement {si} has no citations"));
        }
        for c in &st.citations {
            report.push_citation(si, &c.snippet, None, ctx.find(&c.snippet));
        }
    }
    report
}

/// Checks a RAG citation list: snippets against the cited chunk, claims
/// against the answer. Entries with the `"None"` context id only have their
/// claim checked.
pub fn verify_rag_output(
    out: &RagCitationOutput,
    chunks: &[ContextDocument],
    answer: &str,
    policy: MatchPolicy,
) -> Result<VerificationReport, VerifyError> {
    let by_id: HashMap<&str, PreparedContext<'_>> = chunks
        .iter()
        .filter_map(|c| {
            c.context_id
                .as_deref()
                .map(|id| (id, PreparedContext::new(&c.body, policy)))
        })
        .collect();
    let answer_ctx = PreparedContext::new(answer, policy);
    let mut report = VerificationReport::empty();
    let mut claims_ok = true;

    for (ei, entry) in out.citations.iter().enumerate() {
        let chunk = match &entry.context_id {
            ContextRef::Id(id) => Some(
                by_id
                    .get(id.as_str())
                    .ok_or_else(|| VerifyError::UnknownContextId(id.clone()))?,
            ),
            ContextRef::Unsupported => None,
        };
        if let (Some(snippet), Some(chunk)) = (&entry.snippet, chunk) {
            report.push_citation(ei, snippet, entry.context_id.id(), chunk.find(snippet));
        } else if entry.snippet.is_some() {
            report
                .warnings
                .push(format!("entry {ei} has a snippet but no supporting chunk"));
        }
        if let Some(claim) = &entry.claim {
            let result = answer_ctx.find(claim).unwrap_or_else(|_| MatchResult::from_spans(&[]));
            claims_ok &= result.found;
            report.per_claim.push(ClaimCheck {
                index: ei,
                claim: claim.clone(),
                result,
            });
        }
    }
    if out.mode.has_claim() {
        report.claims_verbatim = Some(claims_ok);
    }
    Ok(report)
}

/// A run of whole sentences covering a snippet.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SnappedRun {
    /// The covering text, exactly as it appears in the context.
    pub text: String,
    pub span: CharSpan,
    /// The individual sentences of the run, in order.
    pub sentences: Vec<Sentence>,
}

/// Expands the first occurrence of `snippet` to the minimal run of whole
/// context sentences that covers it.
pub fn snap_run(
    snippet: &str,
    context: &ContextDocument,
    policy: MatchPolicy,
) -> Result<SnappedRun, VerifyError> {
    let found = verify_snippet(snippet, context, policy)?;
    let span = found
        .char_span
        .ok_or_else(|| VerifyError::NotFound(snippet.to_string()))?;
    let covering: Vec<Sentence> = segment_sentences(&context.body)
        .into_iter()
        .filter(|s| s.span.overlaps(&span))
        .collect();
    let (first, last) = match (covering.first(), covering.last()) {
        (Some(f), Some(l)) => (f.span.start, l.span.end),
        _ => return Err(VerifyError::NotFound(snippet.to_string())),
    };
    let run = CharSpan::new(first, last);
    Ok(SnappedRun {
        text: run.slice(&context.body).to_string(),
        span: run,
        sentences: covering,
    })
}

/// Snaps a snippet to full sentences, keeping the original separators.
pub fn snap_to_sentences(
    snippet: &str,
    context: &ContextDocument,
    policy: MatchPolicy,
) -> Result<String, VerifyError> {
    snap_run(snippet, context, policy).map(|r| r.text)
}
