//! Human-readable citation layouts.
//!
//! Content-quality outputs get numbered markers (`[1][2]`) and a quoted
//! reference list. RAG outputs are marked with the raw context id
//! (`[1233]`), either after each claim or after the whole answer.

use std::collections::HashMap;
use std::fmt::Write as _;

use serde::Serialize;

use crate::model::{CitationMode, CitationTask, ContextRef, QualityEvalOutput, RagCitationOutput};
use crate::verify::{MappedText, MatchPolicy};

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum RenderError {
    #[error("mode {mode} cannot render a {task} output")]
    ModeMismatch { mode: CitationMode, task: &'static str },
    #[error("claim not found in answer: {0:?}")]
    ClaimNotFound(String),
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Reference {
    /// 1-based, in order of first appearance.
    pub number: usize,
    /// The marker as it appears in the body, e.g. `[3]` or `[1233]`.
    pub marker: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub context_id: Option<String>,
    pub snippets: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct RenderedText {
    pub body: String,
    pub references: Vec<Reference>,
    pub mode: CitationMode,
    #[serde(skip_serializing_if = "Vec::is_empty")]
    pub warnings: Vec<String>,
}

impl RenderedText {
    /// Lines of the form `[n]: "<snippet>"`, one per snippet.
    pub fn reference_lines(&self) -> Vec<String> {
        let mut lines = Vec::new();
        for r in &self.references {
            for s in &r.snippets {
                lines.push(format!("{}: \"{}\"", r.marker, s));
            }
        }
        lines
    }

    /// Body followed by a blank line and the reference list, if any.
    pub fn to_text(&self) -> String {
        let lines = self.reference_lines();
        if lines.is_empty() {
            return self.body.clone();
        }
        format!("{}\n\n{}", self.body, lines.join("\n"))
    }

    pub fn format(&self, format: OutputFormat) -> String {
        match format {
            OutputFormat::Text => self.to_text(),
            OutputFormat::Json => serde_json::to_string_pretty(self).expect("rendered text serializes"),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum OutputFormat {
    #[default]
    Text,
    Json,
}

impl std::str::FromStr for OutputFormat {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim().to_ascii_lowercase().as_str() {
            "text" => Ok(OutputFormat::Text),
            "json" => Ok(OutputFormat::Json),
            other => Err(format!("unknown format `{other}` (expected text or json)")),
        }
    }
}

/// Snippet numbering by first appearance. Snippets equal under normalized
/// matching share a number.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct ReferenceNumbers {
    by_key: HashMap<String, usize>,
    order: Vec<String>,
}

impl ReferenceNumbers {
    pub fn get(&self, snippet: &str) -> Option<usize> {
        self.by_key.get(&MatchPolicy::Normalized.key(snippet)).copied()
    }

    /// (number, first spelling seen) in numbering order.
    pub fn entries(&self) -> impl Iterator<Item = (usize, &str)> {
        self.order.iter().enumerate().map(|(i, s)| (i + 1, s.as_str()))
    }

    pub fn len(&self) -> usize {
        self.order.len()
    }

    pub fn is_empty(&self) -> bool {
        self.order.is_empty()
    }

    fn insert(&mut self, snippet: &str) -> usize {
        let key = MatchPolicy::Normalized.key(snippet);
        if let Some(&n) = self.by_key.get(&key) {
            return n;
        }
        self.order.push(snippet.to_string());
        let n = self.order.len();
        self.by_key.insert(key, n);
        n
    }
}

pub fn assign_reference_numbers<'a>(snippets: impl IntoIterator<Item = &'a str>) -> ReferenceNumbers {
    let mut numbers = ReferenceNumbers::default();
    for s in snippets {
        numbers.insert(s);
    }
    numbers
}

fn markers(numbers: &[usize]) -> String {
    let mut out = String::new();
    for n in numbers {
        let _ = write!(out, "[{n}]");
    }
    out
}

/// Inserts `(char position, text)` pairs into `base`. Pairs at the same
/// position keep their given order.
fn insert_at(base: &str, mut inserts: Vec<(usize, String)>) -> String {
    inserts.sort_by_key(|(pos, _)| *pos);
    let mut out = String::with_capacity(base.len() + inserts.iter().map(|(_, s)| s.len()).sum::<usize>());
    let mut pending = inserts.into_iter().peekable();
    for (i, c) in base.chars().enumerate() {
        while let Some((_, text)) = pending.next_if(|(pos, _)| *pos == i) {
            out.push_str(&text);
        }
        out.push(c);
    }
    for (_, text) in pending {
        out.push_str(&text);
    }
    out
}

/// First occurrence at or after `cursor`, falling back to the first overall.
fn locate(haystack: &MappedText, needle: &str, cursor: usize) -> Option<crate::model::CharSpan> {
    let key = MatchPolicy::Normalized.key(needle);
    if key.is_empty() {
        return None;
    }
    let spans = haystack.find_all(&key);
    spans
        .iter()
        .find(|s| s.start >= cursor)
        .or_else(|| spans.first())
        .copied()
}

pub fn render_quality(out: &QualityEvalOutput, mode: CitationMode) -> Result<RenderedText, RenderError> {
    if !mode.valid_for(CitationTask::ContentQuality) {
        return Err(RenderError::ModeMismatch { mode, task: "content-quality" });
    }
    let numbers = assign_reference_numbers(out.snippets().map(|c| c.snippet.as_str()));
    let references = numbers
        .entries()
        .map(|(n, s)| Reference {
            number: n,
            marker: format!("[{n}]"),
            context_id: None,
            snippets: vec![s.to_string()],
        })
        .collect();

    let per_statement: Vec<Vec<usize>> = out
        .statements
        .iter()
        .map(|st| {
            let mut ns: Vec<usize> = Vec::new();
            for c in &st.citations {
                let n = numbers.get(&c.snippet).expect("every snippet was numbered");
                if !ns.contains(&n) {
                    ns.push(n);
                }
            }
            ns
        })
        .collect();

    let mut warnings = Vec::new();
    let body = match mode {
        CitationMode::InlineWithSnippet => {
            let mapped = MappedText::normalized(&out.feedback);
            let mut inserts = Vec::new();
            let mut trailing = String::new();
            let mut cursor = 0;
            for (i, (st, ns)) in out.statements.iter().zip(&per_statement).enumerate() {
                if ns.is_empty() {
                    continue;
                }
                match locate(&mapped, &st.statement_string, cursor) {
                    Some(span) => {
                        cursor = span.end;
                        inserts.push((span.end, markers(ns)));
                    }
                    None => {
                        warnings.push(format!(
                            "statement {i} is not part of the feedback; its markers are appended at the end"
                        ));
                        trailing.push_str(&markers(ns));
                    }
                }
            }
            let mut body = insert_at(&out.feedback, inserts);
            body.push_str(&trailing);
            body
        }
        _ => {
            let all: Vec<usize> = (1..=numbers.len()).collect();
            if all.is_empty() {
                out.feedback.clone()
            } else {
                format!("{}\n{}", out.feedback, markers(&all))
            }
        }
    };
    Ok(RenderedText {
        body,
        references,
        mode,
        warnings,
    })
}

fn is_trailing_punct(c: char) -> bool {
    matches!(c, '.' | ',' | ';' | ':' | '!' | '?')
}

pub fn render_rag(out: &RagCitationOutput, answer: &str) -> Result<RenderedText, RenderError> {
    let mode = out.mode;
    let mut references: Vec<Reference> = Vec::new();
    let mut index_of: HashMap<&str, usize> = HashMap::new();
    let mut warnings = Vec::new();
    for (i, entry) in out.citations.iter().enumerate() {
        let id = match &entry.context_id {
            ContextRef::Id(id) => id.as_str(),
            ContextRef::Unsupported => {
                warnings.push(format!("entry {i} has no supporting chunk and is not marked"));
                continue;
            }
        };
        let slot = *index_of.entry(id).or_insert_with(|| {
            references.push(Reference {
                number: references.len() + 1,
                marker: format!("[{id}]"),
                context_id: Some(id.to_string()),
                snippets: Vec::new(),
            });
            references.len() - 1
        });
        if mode.has_snippet() {
            if let Some(s) = &entry.snippet {
                let r = &mut references[slot];
                if !r.snippets.iter().any(|x| MatchPolicy::Normalized.equivalent(x, s)) {
                    r.snippets.push(s.clone());
                }
            }
        }
    }

    let body = if mode.has_claim() {
        let chars: Vec<char> = answer.chars().collect();
        let mapped = MappedText::normalized(answer);
        let mut inserts: Vec<(usize, String)> = Vec::new();
        let mut cursor = 0;
        for entry in &out.citations {
            let claim = entry.claim.as_deref().ok_or(RenderError::ModeMismatch {
                mode,
                task: "claim-less RAG",
            })?;
            let span = locate(&mapped, claim, cursor)
                .ok_or_else(|| RenderError::ClaimNotFound(claim.to_string()))?;
            cursor = span.end;
            let Some(id) = entry.context_id.id() else {
                continue;
            };
            let mut end = span.end;
            while end > span.start + 1 && is_trailing_punct(chars[end - 1]) {
                end -= 1;
            }
            let marker = format!(" [{id}]");
            if !inserts.iter().any(|(p, m)| *p == end && *m == marker) {
                inserts.push((end, marker));
            }
        }
        insert_at(answer, inserts)
    } else if references.is_empty() {
        answer.to_string()
    } else {
        let block: String = references.iter().map(|r| r.marker.as_str()).collect();
        format!("{answer}\n{block}")
    };

    Ok(RenderedText {
        body,
        references,
        mode,
        warnings,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{CitationSnippet, Extra, RagCitationEntry, Statement, YesNo};

    fn quality(feedback: &str, statements: &[(&str, &[&str])]) -> QualityEvalOutput {
        QualityEvalOutput {
            answer: YesNo::Yes,
            feedback: feedback.into(),
            statements: statements
                .iter()
                .map(|(s, cs)| Statement {
                    statement_string: s.to_string(),
                    citations: cs.iter().map(|c| CitationSnippet::new(*c)).collect(),
                })
                .collect(),
            extra: Extra::default(),
        }
    }

    #[test]
    fn numbering_by_first_appearance() {
        let n = assign_reference_numbers(["s1", "s2", "s1"]);
        assert_eq!(n.entries().collect::<Vec<_>>(), [(1, "s1"), (2, "s2")]);
        assert!(assign_reference_numbers([]).is_empty());
        let n = assign_reference_numbers(["a  b", "a b"]);
        assert_eq!(n.len(), 1);
    }

    #[test]
    fn postfix_layout() {
        let out = quality("One. Two.", &[("One.", &["x", "y"]), ("Two.", &["x", "z"])]);
        let r = render_quality(&out, CitationMode::PostFixWithSnippet).unwrap();
        assert_eq!(r.body, "One. Two.\n[1][2][3]");
        assert_eq!(r.to_text(), "One. Two.\n[1][2][3]\n\n[1]: \"x\"\n[2]: \"y\"\n[3]: \"z\"");
    }

    #[test]
    fn inline_layout() {
        let out = quality("One. Two.", &[("One.", &["x", "y"]), ("Two.", &["x", "z"])]);
        let r = render_quality(&out, CitationMode::InlineWithSnippet).unwrap();
        assert_eq!(r.body, "One.[1][2] Two.[1][3]");
        assert!(r.warnings.is_empty());
    }

    #[test]
    fn non_extractive_markers_go_last() {
        let out = quality("One. Two.", &[("Three.", &["x"]), ("One.", &["y"])]);
        let r = render_quality(&out, CitationMode::InlineWithSnippet).unwrap();
        assert_eq!(r.body, "One.[2] Two.[1]");
        assert_eq!(r.warnings.len(), 1);
    }

    #[test]
    fn zero_statements() {
        let out = quality("Fine.", &[]);
        for mode in [CitationMode::PostFixWithSnippet, CitationMode::InlineWithSnippet] {
            let r = render_quality(&out, mode).unwrap();
            assert_eq!(r.body, "Fine.");
            assert!(r.references.is_empty());
            assert_eq!(r.to_text(), "Fine.");
        }
    }

    #[test]
    fn quality_rejects_claim_modes() {
        let out = quality("x", &[]);
        assert!(matches!(
            render_quality(&out, CitationMode::Inline),
            Err(RenderError::ModeMismatch { .. })
        ));
    }

    fn rag(mode: CitationMode, entries: &[(&str, Option<&str>, Option<&str>)]) -> RagCitationOutput {
        RagCitationOutput {
            citations: entries
                .iter()
                .map(|(id, claim, snippet)| RagCitationEntry {
                    context_id: ContextRef::from(*id),
                    claim: claim.map(str::to_string),
                    snippet: snippet.map(str::to_string),
                    extra: Extra::default(),
                })
                .collect(),
            mode,
        }
    }

    #[test]
    fn rag_postfix_single() {
        let r = render_rag(&rag(CitationMode::PostFix, &[("1233", None, None)]), "Answer.").unwrap();
        assert_eq!(r.to_text(), "Answer.\n[1233]");
    }

    #[test]
    fn rag_inline_before_period() {
        let answer = "Plants make food. They are green.";
        let out = rag(
            CitationMode::InlineWithSnippet,
            &[
                ("1233", Some("Plants make food."), Some("s1")),
                ("1233", Some("They are green."), Some("s1")),
            ],
        );
        let r = render_rag(&out, answer).unwrap();
        assert_eq!(r.body, "Plants make food [1233]. They are green [1233].");
        assert_eq!(r.references.len(), 1);
        assert_eq!(r.reference_lines(), ["[1233]: \"s1\""]);
    }

    #[test]
    fn rag_unsupported_claim_is_not_marked() {
        let out = rag(CitationMode::Inline, &[("None", Some("Plants"), None)]);
        let r = render_rag(&out, "Plants grow.").unwrap();
        assert_eq!(r.body, "Plants grow.");
        assert!(r.references.is_empty());
    }

    #[test]
    fn rag_missing_claim() {
        let out = rag(CitationMode::Inline, &[("1", Some("absent"), None)]);
        assert_eq!(
            render_rag(&out, "Plants grow."),
            Err(RenderError::ClaimNotFound("absent".into()))
        );
    }

    #[test]
    fn rag_postfix_snippets_in_first_appearance_order() {
        let out = rag(
            CitationMode::PostFixWithSnippet,
            &[("2", None, Some("b")), ("1", None, Some("a")), ("2", None, Some("c"))],
        );
        let r = render_rag(&out, "Ans.").unwrap();
        assert_eq!(r.to_text(), "Ans.\n[2][1]\n\n[2]: \"b\"\n[2]: \"c\"\n[1]: \"a\"");
    }
}

#[cfg(test)]
mod props {
    use super::*;
    use crate::model::{CitationSnippet, Extra, Statement, YesNo};
    use proptest::prelude::*;
    use std::collections::BTreeSet;

    fn sentence() -> impl Strategy<Value = String> {
        "[A-Z][a-z ]{0,12}[a-z]\\.".prop_map(|s| s)
    }

    fn output() -> impl Strategy<Value = QualityEvalOutput> {
        let pool = prop::collection::vec("[a-z]{1,6}( [a-z]{1,6}){0,3}", 1..8);
        (prop::collection::vec(sentence(), 0..6), pool, any::<bool>()).prop_flat_map(
            |(sentences, pool, junk)| {
                let n = sentences.len();
                let picks = prop::collection::vec(
                    prop::collection::vec(prop::sample::select(pool.clone()), 0..4),
                    n,
                );
                (Just(sentences), picks, Just(junk))
            },
        )
        .prop_map(|(sentences, picks, junk)| {
            let feedback = sentences.join(" ");
            let mut statements: Vec<Statement> = sentences
                .iter()
                .zip(picks)
                .map(|(s, cs)| Statement {
                    statement_string: s.clone(),
                    citations: cs.into_iter().map(CitationSnippet::new).collect(),
                })
                .collect();
            if junk {
                if let Some(first) = statements.first().cloned() {
                    statements.push(Statement {
                        statement_string: "Not in the text at all".into(),
                        citations: first.citations,
                    });
                }
            }
            QualityEvalOutput {
                answer: YesNo::Yes,
                feedback: if feedback.is_empty() { "Ok.".into() } else { feedback },
                statements,
                extra: Extra::default(),
            }
        })
    }

    fn body_markers(body: &str) -> BTreeSet<usize> {
        let mut out = BTreeSet::new();
        let mut rest = body;
        while let Some(i) = rest.find('[') {
            let after = &rest[i + 1..];
            if let Some(j) = after.find(']') {
                if let Ok(n) = after[..j].parse() {
                    out.insert(n);
                }
            }
            rest = after;
        }
        out
    }

    proptest! {
        #[test]
        fn markers_and_references_are_in_bijection(out in output()) {
            for mode in [CitationMode::PostFixWithSnippet, CitationMode::InlineWithSnippet] {
                let r = render_quality(&out, mode).unwrap();
                let numbers: Vec<usize> = r.references.iter().map(|x| x.number).collect();
                prop_assert_eq!(&numbers, &(1..=numbers.len()).collect::<Vec<_>>());
                prop_assert_eq!(body_markers(&r.body), numbers.iter().copied().collect::<BTreeSet<_>>());

                // Every distinct snippet is listed exactly once.
                let distinct: BTreeSet<&str> = out.snippets().map(|c| c.snippet.as_str()).collect();
                prop_assert_eq!(r.references.len(), distinct.len());

                prop_assert_eq!(render_quality(&out, mode).unwrap(), r);
            }
        }
    }
}
