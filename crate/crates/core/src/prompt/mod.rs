//! Prompt construction for every evaluator task.
//!
//! Templates ship inside the crate (see `templates/`) and can be replaced
//! file-by-file from a directory at runtime.

mod template;

use std::collections::BTreeMap;
use std::fmt;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::model::{duplicate_context_ids, CitationMode, ContextDocument, EvaluationMetric};

pub use template::Template;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum TemplateId {
    QualityEval,
    RagCite,
    Pointwise,
    Grounding,
    PairwiseJudge,
}

impl fmt::Display for TemplateId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Debug::fmt(self, f)
    }
}

/// A fully instantiated prompt.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PromptText {
    pub text: String,
    pub template_id: TemplateId,
    pub slots_filled: BTreeMap<String, String>,
}

impl fmt::Display for PromptText {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.text)
    }
}

#[derive(Debug, thiserror::Error)]
pub enum PromptError {
    #[error("`{0}` must not be empty")]
    EmptyRequired(&'static str),
    #[error("duplicate context_id `{0}`")]
    DuplicateContextId(String),
    #[error("chunk {0} has no context_id")]
    MissingContextId(usize),
    #[error("chunk `{0}` cannot be rendered unambiguously (id contains whitespace or body contains a blank line followed by `ID `)")]
    AmbiguousChunk(String),
    #[error("template {template} leaves slot `{{{slot}}}` unfilled")]
    UnfilledSlot { template: TemplateId, slot: String },
    #[error("reading template {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
}

/// Task instruction given to the summarizer in the ABCD example.
pub const ABCD_TASK_INSTRUCTION: &str = "Summarize knowledge from transcripts after they've ended. \
Summarizing the key points of the conversation including customer issue and resolution.";

/// Builds the task-prompt context for a dialogue summarization item: the task
/// instruction followed by a `### Conversation:` section.
pub fn dialogue_task_prompt(instruction: &str, conversation: &str) -> String {
    format!("{instruction}\n\n### Conversation:\n{conversation}")
}

const FILE_QUALITY: &str = "quality_eval.txt";
const FILE_POINTWISE: &str = "pointwise.txt";
const FILE_GROUNDING: &str = "grounding.txt";
const FILE_PAIRWISE: &str = "pairwise.txt";

fn rag_file(mode: CitationMode) -> &'static str {
    match mode {
        CitationMode::PostFix => "rag_cite_postfix.txt",
        CitationMode::Inline => "rag_cite_inline.txt",
        CitationMode::PostFixWithSnippet => "rag_cite_postfix_snippet.txt",
        CitationMode::InlineWithSnippet => "rag_cite_inline_snippet.txt",
    }
}

const DEFAULTS: &[(&str, &str)] = &[
    (FILE_QUALITY, include_str!("../../templates/quality_eval.txt")),
    (FILE_POINTWISE, include_str!("../../templates/pointwise.txt")),
    (FILE_GROUNDING, include_str!("../../templates/grounding.txt")),
    (FILE_PAIRWISE, include_str!("../../templates/pairwise.txt")),
    ("rag_cite_postfix.txt", include_str!("../../templates/rag_cite_postfix.txt")),
    ("rag_cite_inline.txt", include_str!("../../templates/rag_cite_inline.txt")),
    (
        "rag_cite_postfix_snippet.txt",
        include_str!("../../templates/rag_cite_postfix_snippet.txt"),
    ),
    (
        "rag_cite_inline_snippet.txt",
        include_str!("../../templates/rag_cite_inline_snippet.txt"),
    ),
];

/// Named template sources keyed by file name.
#[derive(Debug, Clone)]
pub struct TemplateSet {
    templates: BTreeMap<&'static str, Template>,
}

impl Default for TemplateSet {
    fn default() -> Self {
        TemplateSet {
            templates: DEFAULTS
                .iter()
                .map(|(name, src)| (*name, Template::parse(src)))
                .collect(),
        }
    }
}

impl TemplateSet {
    /// Built-in templates, with any same-named file in `dir` taking precedence.
    pub fn with_overrides(dir: impl AsRef<Path>) -> Result<Self, PromptError> {
        let mut set = TemplateSet::default();
        for (name, _) in DEFAULTS {
            let path = dir.as_ref().join(name);
            if path.is_file() {
                let src = std::fs::read_to_string(&path).map_err(|source| PromptError::Io {
                    path: path.display().to_string(),
                    source,
                })?;
                set.templates.insert(name, Template::parse(&src));
            }
        }
        Ok(set)
    }

    fn get(&self, file: &str) -> &Template {
        &self.templates[file]
    }

    /// Names of all template files known to the set.
    pub fn file_names() -> impl Iterator<Item = &'static str> {
        DEFAULTS.iter().map(|(n, _)| *n)
    }
}

fn require(value: &str, field: &'static str) -> Result<(), PromptError> {
    if value.trim().is_empty() {
        Err(PromptError::EmptyRequired(field))
    } else {
        Ok(())
    }
}

/// Renders chunks as `ID <context_id>\n<body>` blocks separated by a blank line.
///
/// Rejects inputs that would make two different chunk lists render the same:
/// ids containing whitespace and bodies containing a blank line followed by
/// `ID `.
pub fn render_chunks(chunks: &[ContextDocument]) -> Result<String, PromptError> {
    let mut blocks = Vec::with_capacity(chunks.len());
    for (i, c) in chunks.iter().enumerate() {
        let id = c.context_id.as_deref().ok_or(PromptError::MissingContextId(i))?;
        require(id, "context_id")?;
        require(&c.body, "chunk body")?;
        if id.chars().any(char::is_whitespace) || format!("\n{}", c.body).contains("\n\nID ") {
            return Err(PromptError::AmbiguousChunk(id.to_string()));
        }
        blocks.push(format!("ID {id}\n{}", c.body));
    }
    if let Some(dup) = duplicate_context_ids(chunks).into_iter().next() {
        return Err(PromptError::DuplicateContextId(dup));
    }
    Ok(blocks.join("\n\n"))
}

/// Instantiates evaluator prompts from a [`TemplateSet`].
#[derive(Debug, Clone, Default)]
pub struct PromptBuilder {
    templates: TemplateSet,
}

impl PromptBuilder {
    pub fn new(templates: TemplateSet) -> Self {
        PromptBuilder { templates }
    }

    fn fill(
        &self,
        file: &str,
        id: TemplateId,
        slots: &[(&str, &str)],
    ) -> Result<PromptText, PromptError> {
        let values: BTreeMap<String, String> = slots
            .iter()
            .map(|(k, v)| (k.to_string(), v.to_string()))
            .collect();
        let template = self.templates.get(file);
        let text = template
            .render(&values)
            .map_err(|slot| PromptError::UnfilledSlot { template: id, slot })?;
        let used = template.slots();
        let slots_filled = values
            .into_iter()
            .filter(|(k, _)| used.contains(&k.as_str()))
            .collect();
        Ok(PromptText {
            text,
            template_id: id,
            slots_filled,
        })
    }

    /// Content-quality evaluation with citations back into the task prompt.
    pub fn quality(
        &self,
        metric: &EvaluationMetric,
        task_prompt: &str,
        generation: &str,
    ) -> Result<PromptText, PromptError> {
        require(task_prompt, "task_prompt")?;
        require(generation, "generation")?;
        self.fill(
            FILE_QUALITY,
            TemplateId::QualityEval,
            &[
                ("metric_name", metric.name.display_name()),
                ("metric_scale", &metric.scale),
                ("metric_description", &metric.description),
                ("task_prompt", task_prompt),
                ("generation", generation),
            ],
        )
    }

    /// RAG citation in the requested mode.
    pub fn rag_cite(
        &self,
        chunks: &[ContextDocument],
        answer: &str,
        mode: CitationMode,
    ) -> Result<PromptText, PromptError> {
        require(answer, "answer")?;
        if chunks.is_empty() {
            return Err(PromptError::EmptyRequired("chunks"));
        }
        let rendered = render_chunks(chunks)?;
        self.fill(
            rag_file(mode),
            TemplateId::RagCite,
            &[("retrieved_chunks", &rendered), ("answer", answer)],
        )
    }

    pub fn pointwise(
        &self,
        metric: &EvaluationMetric,
        query_with_context: &str,
        answer: &str,
    ) -> Result<PromptText, PromptError> {
        require(query_with_context, "query_with_context")?;
        require(answer, "answer")?;
        self.fill(
            FILE_POINTWISE,
            TemplateId::Pointwise,
            &[
                ("metric_name", metric.name.display_name()),
                ("metric_scale", &metric.scale),
                ("metric_description", &metric.description),
                ("query_with_context", query_with_context),
                ("answer", answer),
            ],
        )
    }

    /// Document/claim consistency check answered with yes or no.
    pub fn grounding(&self, doc: &str, claim: &str) -> Result<PromptText, PromptError> {
        require(doc, "doc")?;
        require(claim, "claim")?;
        self.fill(
            FILE_GROUNDING,
            TemplateId::Grounding,
            &[("doc", doc), ("claim", claim)],
        )
    }

    /// Two-output comparison. `out_a` is presented first.
    pub fn pairwise(
        &self,
        instruction: &str,
        out_a: &str,
        out_b: &str,
    ) -> Result<PromptText, PromptError> {
        require(instruction, "instruction")?;
        require(out_a, "output_a")?;
        require(out_b, "output_b")?;
        self.fill(
            FILE_PAIRWISE,
            TemplateId::PairwiseJudge,
            &[
                ("instruction", instruction),
                ("output_a", out_a),
                ("output_b", out_b),
            ],
        )
    }

    /// The response cue each template ends with.
    pub fn response_cue(&self, id: TemplateId, mode: CitationMode) -> String {
        let file = match id {
            TemplateId::QualityEval => FILE_QUALITY,
            TemplateId::RagCite => rag_file(mode),
            TemplateId::Pointwise => FILE_POINTWISE,
            TemplateId::Grounding => FILE_GROUNDING,
            TemplateId::PairwiseJudge => FILE_PAIRWISE,
        };
        self.templates.get(file).last_line()
    }
}

pub fn build_quality_prompt(
    metric: &EvaluationMetric,
    task_prompt: &str,
    generation: &str,
) -> Result<PromptText, PromptError> {
    PromptBuilder::default().quality(metric, task_prompt, generation)
}

pub fn build_rag_cite_prompt(
    chunks: &[ContextDocument],
    answer: &str,
    mode: CitationMode,
) -> Result<PromptText, PromptError> {
    PromptBuilder::default().rag_cite(chunks, answer, mode)
}

pub fn build_pointwise_prompt(
    metric: &EvaluationMetric,
    query_with_context: &str,
    answer: &str,
) -> Result<PromptText, PromptError> {
    PromptBuilder::default().pointwise(metric, query_with_context, answer)
}

pub fn build_grounding_prompt(doc: &str, claim: &str) -> Result<PromptText, PromptError> {
    PromptBuilder::default().grounding(doc, claim)
}

pub fn build_pairwise_prompt(
    instruction: &str,
    out_a: &str,
    out_b: &str,
) -> Result<PromptText, PromptError> {
    PromptBuilder::default().pairwise(instruction, out_a, out_b)
}
