//! Shared domain types for rating, explanation and citation.
//!
//! Everything in here is plain data. Each type that carries invariants
//! exposes a `violations()` method returning every breach it finds, so callers
//! can report all problems at once instead of stopping at the first.

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use serde_json::Value;

/// The four quality dimensions an evaluator can rate.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum MetricName {
    Faithfulness,
    InstructionFollowing,
    Coherence,
    Completeness,
}

impl MetricName {
    pub const ALL: [MetricName; 4] = [
        MetricName::Faithfulness,
        MetricName::InstructionFollowing,
        MetricName::Coherence,
        MetricName::Completeness,
    ];

    /// Human-facing name as it appears in prompts.
    pub fn display_name(self) -> &'static str {
        match self {
            MetricName::Faithfulness => "Faithfulness",
            MetricName::InstructionFollowing => "Instruction Following",
            MetricName::Coherence => "Coherence",
            MetricName::Completeness => "Completeness",
        }
    }

    pub fn short_name(self) -> &'static str {
        match self {
            MetricName::Faithfulness => "f",
            MetricName::InstructionFollowing => "if",
            MetricName::Coherence => "coh",
            MetricName::Completeness => "comp",
        }
    }
}

impl fmt::Display for MetricName {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.display_name())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("unknown metric `{0}` (expected one of: faithfulness|f, instruction-following|if, coherence|coh, completeness|comp)")]
pub struct UnknownMetric(pub String);

impl FromStr for MetricName {
    type Err = UnknownMetric;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let key: String = s
            .trim()
            .chars()
            .filter(|c| !matches!(c, '-' | '_' | ' '))
            .flat_map(char::to_lowercase)
            .collect();
        match key.as_str() {
            "faithfulness" | "f" => Ok(MetricName::Faithfulness),
            "instructionfollowing" | "if" => Ok(MetricName::InstructionFollowing),
            "coherence" | "coh" => Ok(MetricName::Coherence),
            "completeness" | "comp" => Ok(MetricName::Completeness),
            _ => Err(UnknownMetric(s.to_string())),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct EvaluationMetric {
    pub name: MetricName,
    pub scale: String,
    pub description: String,
}

impl EvaluationMetric {
    pub fn violations(&self) -> Vec<Violation> {
        let mut out = Vec::new();
        if self.description.trim().is_empty() {
            out.push(Violation::empty("description"));
        }
        if self.scale.trim().is_empty() {
            out.push(Violation::empty("scale"));
        }
        out
    }
}

/// The catalog of supported metrics, in canonical order.
pub fn metric_catalog() -> Vec<EvaluationMetric> {
    MetricName::ALL.iter().map(|&name| metric(name)).collect()
}

/// Catalog entry for a single metric.
pub fn metric(name: MetricName) -> EvaluationMetric {
    let description = match name {
        MetricName::Faithfulness => {
            "The generated answer only contains truthful content, and does not contain \
             invented or misleading facts that are not supported by the context."
        }
        MetricName::InstructionFollowing => {
            "The generated answer follows all the instructions provided in the task prompt, \
             and does not ignore or contradict any of them."
        }
        MetricName::Coherence => {
            "The generated answer is coherent: its sentences are well-structured, logically \
             connected, and easy to follow as a whole."
        }
        MetricName::Completeness => {
            "The generated answer includes all the necessary details requested by the task \
             prompt, and does not omit any key information from the context."
        }
    };
    EvaluationMetric {
        name,
        scale: "Yes/No".to_string(),
        description: description.to_string(),
    }
}

/// Binary rating used by every evaluator output.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum YesNo {
    Yes,
    No,
}

impl YesNo {
    /// Case-insensitive parse with surrounding whitespace ignored. Anything
    /// other than yes/no is rejected.
    pub fn parse_lenient(s: &str) -> Option<YesNo> {
        let t = s.trim();
        if t.eq_ignore_ascii_case("yes") {
            Some(YesNo::Yes)
        } else if t.eq_ignore_ascii_case("no") {
            Some(YesNo::No)
        } else {
            None
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            YesNo::Yes => "Yes",
            YesNo::No => "No",
        }
    }
}

impl fmt::Display for YesNo {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum SourceKind {
    TaskPrompt,
    Conversation,
    RetrievedChunk,
    #[default]
    Document,
}

/// A source text that citations must be drawn from.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ContextDocument {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub context_id: Option<String>,
    pub body: String,
    #[serde(default)]
    pub source_kind: SourceKind,
}

impl ContextDocument {
    pub fn new(body: impl Into<String>, source_kind: SourceKind) -> Self {
        ContextDocument {
            context_id: None,
            body: body.into(),
            source_kind,
        }
    }

    pub fn chunk(id: impl Into<String>, body: impl Into<String>) -> Self {
        ContextDocument {
            context_id: Some(id.into()),
            body: body.into(),
            source_kind: SourceKind::RetrievedChunk,
        }
    }

    pub fn violations(&self) -> Vec<Violation> {
        let mut out = Vec::new();
        if self.body.is_empty() {
            out.push(Violation::empty("body"));
        }
        if self.source_kind == SourceKind::RetrievedChunk && self.context_id.is_none() {
            out.push(Violation::new(
                ViolationCode::MissingField,
                "context_id",
                "retrieved chunks require a context_id",
            ));
        }
        out
    }
}

/// Checks that context ids are unique across one request.
pub fn duplicate_context_ids(docs: &[ContextDocument]) -> Vec<String> {
    let mut seen = std::collections::HashSet::new();
    let mut dups = Vec::new();
    for id in docs.iter().filter_map(|d| d.context_id.as_deref()) {
        if !seen.insert(id) && !dups.iter().any(|d: &String| d == id) {
            dups.push(id.to_string());
        }
    }
    dups
}

/// Which kind of citation task an output belongs to.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CitationTask {
    ContentQuality,
    Rag,
}

/// Output layout: post-fix or inline, each with or without context snippets.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum CitationMode {
    #[serde(rename = "postfix")]
    PostFix,
    #[serde(rename = "inline")]
    Inline,
    #[serde(rename = "postfix-snippet")]
    PostFixWithSnippet,
    #[serde(rename = "inline-snippet")]
    InlineWithSnippet,
}

impl CitationMode {
    pub const ALL: [CitationMode; 4] = [
        CitationMode::PostFix,
        CitationMode::Inline,
        CitationMode::PostFixWithSnippet,
        CitationMode::InlineWithSnippet,
    ];

    pub fn has_claim(self) -> bool {
        matches!(self, CitationMode::Inline | CitationMode::InlineWithSnippet)
    }

    pub fn has_snippet(self) -> bool {
        matches!(
            self,
            CitationMode::PostFixWithSnippet | CitationMode::InlineWithSnippet
        )
    }

    /// Plain post-fix and inline modes only make sense for RAG citation.
    pub fn valid_for(self, task: CitationTask) -> bool {
        match task {
            CitationTask::Rag => true,
            CitationTask::ContentQuality => self.has_snippet(),
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            CitationMode::PostFix => "postfix",
            CitationMode::Inline => "inline",
            CitationMode::PostFixWithSnippet => "postfix-snippet",
            CitationMode::InlineWithSnippet => "inline-snippet",
        }
    }
}

impl fmt::Display for CitationMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("unknown citation mode `{0}` (expected postfix, inline, postfix-snippet or inline-snippet)")]
pub struct UnknownMode(pub String);

impl FromStr for CitationMode {
    type Err = UnknownMode;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let key: String = s
            .trim()
            .chars()
            .filter(|c| !matches!(c, '-' | '_' | ' '))
            .flat_map(char::to_lowercase)
            .collect();
        match key.as_str() {
            "postfix" => Ok(CitationMode::PostFix),
            "inline" => Ok(CitationMode::Inline),
            "postfixsnippet" | "postfixwithsnippet" => Ok(CitationMode::PostFixWithSnippet),
            "inlinesnippet" | "inlinewithsnippet" => Ok(CitationMode::InlineWithSnippet),
            _ => Err(UnknownMode(s.to_string())),
        }
    }
}

/// Half-open character range `[start, end)` counted in Unicode scalar values.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(from = "(usize, usize)", into = "(usize, usize)")]
pub struct CharSpan {
    pub start: usize,
    pub end: usize,
}

impl CharSpan {
    pub fn new(start: usize, end: usize) -> Self {
        debug_assert!(start <= end);
        CharSpan { start, end }
    }

    pub fn len(&self) -> usize {
        self.end - self.start
    }

    pub fn is_empty(&self) -> bool {
        self.start == self.end
    }

    pub fn overlaps(&self, other: &CharSpan) -> bool {
        self.start < other.end && other.start < self.end
    }

    /// Extracts the spanned characters from `text`.
    pub fn slice<'a>(&self, text: &'a str) -> &'a str {
        let mut indices = text.char_indices().map(|(i, _)| i).chain([text.len()]);
        let start = indices.nth(self.start).unwrap_or(text.len());
        let end = if self.end == self.start {
            start
        } else {
            indices.nth(self.end - self.start - 1).unwrap_or(text.len())
        };
        &text[start..end]
    }
}

impl From<(usize, usize)> for CharSpan {
    fn from((start, end): (usize, usize)) -> Self {
        CharSpan { start, end }
    }
}

impl From<CharSpan> for (usize, usize) {
    fn from(s: CharSpan) -> Self {
        (s.start, s.end)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CitationSnippet {
    pub snippet: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub context_id: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub char_span: Option<CharSpan>,
}

impl CitationSnippet {
    pub fn new(snippet: impl Into<String>) -> Self {
        CitationSnippet {
            snippet: snippet.into(),
            context_id: None,
            char_span: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Statement {
    pub statement_string: String,
    pub citations: Vec<CitationSnippet>,
}

/// Fields a parser saw but does not model. They ride along in memory, take no
/// part in equality, and are not written back out.
#[derive(Debug, Clone, Default)]
pub struct Extra(pub BTreeMap<String, Value>);

impl PartialEq for Extra {
    fn eq(&self, _: &Self) -> bool {
        true
    }
}

impl Eq for Extra {}

/// Structured verdict for one content-quality metric.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct QualityEvalOutput {
    pub answer: YesNo,
    pub feedback: String,
    pub statements: Vec<Statement>,
    #[serde(skip)]
    pub extra: Extra,
}

impl QualityEvalOutput {
    pub fn violations(&self) -> Vec<Violation> {
        let mut out = Vec::new();
        if self.feedback.trim().is_empty() {
            out.push(Violation::empty("feedback"));
        }
        if self.statements.is_empty() && self.answer == YesNo::No {
            out.push(Violation::new(
                ViolationCode::EmptyRequired,
                "statements",
                "a `No` answer must cite at least one statement",
            ));
        }
        for (i, st) in self.statements.iter().enumerate() {
            if st.statement_string.trim().is_empty() {
                out.push(Violation::empty(format!("statements[{i}].statement_string")));
            }
            for (j, c) in st.citations.iter().enumerate() {
                if c.snippet.trim().is_empty() {
                    out.push(Violation::empty(format!(
                        "statements[{i}].citations[{j}].snippet"
                    )));
                }
            }
        }
        out
    }

    /// All citation snippets in statement order.
    pub fn snippets(&self) -> impl Iterator<Item = &CitationSnippet> {
        self.statements.iter().flat_map(|s| s.citations.iter())
    }
}

/// The `context_id` of a RAG citation. The literal string `"None"` marks a
/// claim no chunk supports.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum ContextRef {
    Id(String),
    Unsupported,
}

impl ContextRef {
    pub const SENTINEL: &'static str = "None";

    pub fn as_str(&self) -> &str {
        match self {
            ContextRef::Id(s) => s,
            ContextRef::Unsupported => Self::SENTINEL,
        }
    }

    pub fn id(&self) -> Option<&str> {
        match self {
            ContextRef::Id(s) => Some(s),
            ContextRef::Unsupported => None,
        }
    }
}

impl From<&str> for ContextRef {
    fn from(s: &str) -> Self {
        if s == Self::SENTINEL {
            ContextRef::Unsupported
        } else {
            ContextRef::Id(s.to_string())
        }
    }
}

impl Serialize for ContextRef {
    fn serialize<S: serde::Serializer>(&self, ser: S) -> Result<S::Ok, S::Error> {
        ser.serialize_str(self.as_str())
    }
}

impl<'de> Deserialize<'de> for ContextRef {
    fn deserialize<D: serde::Deserializer<'de>>(de: D) -> Result<Self, D::Error> {
        let s = String::deserialize(de)?;
        Ok(ContextRef::from(s.as_str()))
    }
}

impl fmt::Display for ContextRef {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct RagCitationEntry {
    pub context_id: ContextRef,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub claim: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub snippet: Option<String>,
    #[serde(skip)]
    pub extra: Extra,
}

impl RagCitationEntry {
    pub fn violations(&self, mode: CitationMode) -> Vec<Violation> {
        let mut out = Vec::new();
        if let ContextRef::Id(id) = &self.context_id {
            if id.trim().is_empty() {
                out.push(Violation::empty("context_id"));
            }
        }
        match (&self.claim, mode.has_claim()) {
            (Some(_), false) => out.push(Violation::new(
                ViolationCode::ModeMismatch,
                "claim",
                format!("`claim` is not produced in {mode} mode"),
            )),
            (None, true) => out.push(Violation::new(
                ViolationCode::ModeMismatch,
                "claim",
                format!("`claim` is required in {mode} mode"),
            )),
            (Some(c), true) if c.trim().is_empty() => out.push(Violation::empty("claim")),
            _ => {}
        }
        match (&self.snippet, mode.has_snippet()) {
            (Some(_), false) => out.push(Violation::new(
                ViolationCode::ModeMismatch,
                "snippet",
                format!("`snippet` is not produced in {mode} mode"),
            )),
            (None, true) if self.context_id != ContextRef::Unsupported => {
                out.push(Violation::new(
                    ViolationCode::ModeMismatch,
                    "snippet",
                    format!("`snippet` is required in {mode} mode"),
                ))
            }
            (Some(s), true) if s.trim().is_empty() => out.push(Violation::empty("snippet")),
            _ => {}
        }
        out
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct RagCitationOutput {
    pub citations: Vec<RagCitationEntry>,
    #[serde(skip)]
    pub mode: CitationMode,
}

impl RagCitationOutput {
    pub fn violations(&self) -> Vec<Violation> {
        self.citations
            .iter()
            .enumerate()
            .flat_map(|(i, e)| {
                e.violations(self.mode)
                    .into_iter()
                    .map(move |v| v.prefixed(&format!("citations[{i}]")))
            })
            .collect()
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct PointwiseVerdict {
    pub metriclabel: YesNo,
    pub justification: String,
    #[serde(skip)]
    pub extra: Extra,
}

impl PointwiseVerdict {
    pub fn violations(&self) -> Vec<Violation> {
        if self.justification.trim().is_empty() {
            vec![Violation::empty("justification")]
        } else {
            Vec::new()
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TaskType {
    PairwiseEval,
    PointwiseEval,
    OpenEndedEval,
    Citation,
    GeneralInstruction,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FilterStatus {
    Kept,
    RejectedBadJson,
    RejectedNonVerbatim,
    RejectedTooLong,
}

/// One fine-tuning datapoint.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct UnifiedTaskRecord {
    pub prompt: String,
    pub completion: String,
    pub task_type: TaskType,
    pub source_dataset: String,
    pub filter_status: FilterStatus,
}

impl UnifiedTaskRecord {
    pub fn violations(&self) -> Vec<Violation> {
        let mut out = Vec::new();
        if self.filter_status == FilterStatus::Kept {
            if self.prompt.is_empty() {
                out.push(Violation::empty("prompt"));
            }
            if self.completion.is_empty() {
                out.push(Violation::empty("completion"));
            }
        }
        out
    }
}

/// Verdict of a pairwise judge, by presented position.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Verdict {
    A,
    B,
    Unparseable,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum PresentationOrder {
    AB,
    BA,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PairwiseJudgment {
    pub instruction: String,
    pub response_a: String,
    pub response_b: String,
    pub verdict: Verdict,
    pub presentation_order: PresentationOrder,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum ViolationCode {
    BadJson,
    MissingField,
    WrongType,
    ModeMismatch,
    EmptyRequired,
    DuplicateId,
    Invariant,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Violation {
    pub code: ViolationCode,
    pub path: String,
    pub detail: String,
}

impl Violation {
    pub fn new(code: ViolationCode, path: impl Into<String>, detail: impl Into<String>) -> Self {
        Violation {
            code,
            path: path.into(),
            detail: detail.into(),
        }
    }

    fn empty(path: impl Into<String>) -> Self {
        Violation::new(ViolationCode::EmptyRequired, path, "must not be empty")
    }

    pub fn prefixed(mut self, prefix: &str) -> Self {
        self.path = if self.path.is_empty() {
            prefix.to_string()
        } else {
            format!("{prefix}.{}", self.path)
        };
        self
    }
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{:?} at `{}`: {}", self.code, self.path, self.detail)
    }
}
