//! Synthetic training-data curation.
//!
//! Each source record becomes one or more evaluator prompts. Completions are
//! kept only if they parse, cite verbatim, and fit the length budget; kept
//! completions are stored in canonical JSON.

use std::sync::atomic::AtomicBool;

use indexmap::IndexMap;
use serde::{Deserialize, Serialize};

use crate::gateway::{complete_batch, CompletionRequest, Gateway, GatewayError};
use crate::model::{
    metric, CitationMode, ContextDocument, FilterStatus, MetricName, SourceKind, TaskType, UnifiedTaskRecord,
};
use crate::prompt::{PromptBuilder, PromptError, PromptText};
use crate::schema::{parse_pointwise, parse_quality_output, parse_rag_output, serialize_canonical};
use crate::tokens::{TokenEstimator, WordEstimator};
use crate::verify::{verify_quality_output, verify_rag_output, MatchPolicy};

pub const DEFAULT_MAX_TOKENS: usize = 6144;

/// Prefix of the input keys that hold RAG chunks, e.g. `chunk:1233`.
pub const CHUNK_PREFIX: &str = "chunk:";

/// One raw example. Required `inputs` per kind:
/// pointwise `query_with_context`, `answer`; content-quality citation
/// `task_prompt`, `generation` (optional `metric`); RAG citation `answer`
/// plus one `chunk:<id>` key per chunk, in order.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SourceRecord {
    pub source_dataset: String,
    pub task_type: TaskType,
    pub inputs: IndexMap<String, String>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum JobKind {
    Pointwise,
    CiteQuality,
    CiteRag,
}

impl std::str::FromStr for JobKind {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim() {
            "pointwise" => Ok(JobKind::Pointwise),
            "cite-quality" => Ok(JobKind::CiteQuality),
            "cite-rag" => Ok(JobKind::CiteRag),
            other => Err(format!("unknown task `{other}` (expected pointwise, cite-quality or cite-rag)")),
        }
    }
}

impl SourceRecord {
    pub fn kind(&self) -> Result<JobKind, String> {
        match self.task_type {
            TaskType::PointwiseEval => Ok(JobKind::Pointwise),
            TaskType::Citation if self.chunks().next().is_some() => Ok(JobKind::CiteRag),
            TaskType::Citation => Ok(JobKind::CiteQuality),
            other => Err(format!("task type {other:?} is not generated by this pipeline")),
        }
    }

    fn chunks(&self) -> impl Iterator<Item = ContextDocument> + '_ {
        self.inputs
            .iter()
            .filter_map(|(k, v)| k.strip_prefix(CHUNK_PREFIX).map(|id| ContextDocument::chunk(id, v.clone())))
    }

    fn slot(&self, name: &'static str) -> Result<&str, DatagenError> {
        self.inputs
            .get(name)
            .map(String::as_str)
            .ok_or(DatagenError::MissingInput(name))
    }
}

#[derive(Debug, thiserror::Error)]
pub enum DatagenError {
    #[error("missing input `{0}`")]
    MissingInput(&'static str),
    #[error("{0}")]
    Unsupported(String),
    #[error(transparent)]
    Prompt(#[from] PromptError),
    #[error("record {index}: {source}")]
    Record {
        index: usize,
        #[source]
        source: Box<DatagenError>,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct FilterStats {
    pub total: usize,
    pub kept: usize,
    pub rejected_bad_json: usize,
    pub rejected_non_verbatim: usize,
    pub rejected_too_long: usize,
    pub rejected_transport: usize,
    /// Jobs never attempted because the run was cancelled; not in `total`.
    pub cancelled: usize,
}

impl FilterStats {
    pub fn rejected(&self) -> usize {
        self.rejected_bad_json + self.rejected_non_verbatim + self.rejected_too_long + self.rejected_transport
    }

    pub fn is_consistent(&self) -> bool {
        self.total == self.kept + self.rejected()
    }

    fn count(&mut self, outcome: &Outcome) {
        self.total += 1;
        match outcome {
            Outcome::Kept(_) => self.kept += 1,
            Outcome::Rejected(FilterStatus::RejectedBadJson) => self.rejected_bad_json += 1,
            Outcome::Rejected(FilterStatus::RejectedNonVerbatim) => self.rejected_non_verbatim += 1,
            Outcome::Rejected(FilterStatus::RejectedTooLong) => self.rejected_too_long += 1,
            Outcome::Rejected(FilterStatus::Kept) => unreachable!("kept is not a rejection"),
            Outcome::Transport(_) => self.rejected_transport += 1,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Outcome {
    Kept(UnifiedTaskRecord),
    Rejected(FilterStatus),
    Transport(GatewayError),
}

/// One prompt to send: which record it came from and how to check the reply.
#[derive(Debug, Clone)]
pub struct Job {
    pub record: usize,
    pub kind: JobKind,
    pub metric: Option<MetricName>,
    pub prompt: PromptText,
    source_dataset: String,
    task_type: TaskType,
    context: Vec<ContextDocument>,
    answer: String,
}

#[derive(Debug, Clone)]
pub struct DatagenOptions {
    pub policy: MatchPolicy,
    pub rag_mode: CitationMode,
    pub metrics: Vec<MetricName>,
    pub max_tokens: usize,
    pub parallelism: usize,
    pub seed: Option<u64>,
}

impl Default for DatagenOptions {
    fn default() -> Self {
        DatagenOptions {
            policy: MatchPolicy::Normalized,
            rag_mode: CitationMode::InlineWithSnippet,
            metrics: MetricName::ALL.to_vec(),
            max_tokens: DEFAULT_MAX_TOKENS,
            parallelism: 4,
            seed: None,
        }
    }
}

/// Expands records into jobs: pointwise records fan out over
/// `opts.metrics`, citation records yield one job each.
pub fn plan_jobs(
    records: &[SourceRecord],
    builder: &PromptBuilder,
    opts: &DatagenOptions,
) -> Result<Vec<Job>, DatagenError> {
    let mut jobs = Vec::new();
    for (index, r) in records.iter().enumerate() {
        plan_record(index, r, builder, opts, &mut jobs).map_err(|e| DatagenError::Record {
            index,
            source: Box::new(e),
        })?;
    }
    Ok(jobs)
}

fn plan_record(
    index: usize,
    r: &SourceRecord,
    builder: &PromptBuilder,
    opts: &DatagenOptions,
    jobs: &mut Vec<Job>,
) -> Result<(), DatagenError> {
    let kind = r.kind().map_err(DatagenError::Unsupported)?;
    let job = |metric, prompt, context, answer: &str| Job {
        record: index,
        kind,
        metric,
        prompt,
        source_dataset: r.source_dataset.clone(),
        task_type: r.task_type,
        context,
        answer: answer.to_string(),
    };
    match kind {
        JobKind::Pointwise => {
            let query = r.slot("query_with_context")?;
            let answer = r.slot("answer")?;
            for &m in &opts.metrics {
                let prompt = builder.pointwise(&metric(m), query, answer)?;
                jobs.push(job(Some(m), prompt, Vec::new(), answer));
            }
        }
        JobKind::CiteQuality => {
            let task_prompt = r.slot("task_prompt")?;
            let generation = r.slot("generation")?;
            let m = match r.inputs.get("metric") {
                Some(name) => name.parse::<MetricName>().map_err(|e| DatagenError::Unsupported(e.to_string()))?,
                None => MetricName::Faithfulness,
            };
            let prompt = builder.quality(&metric(m), task_prompt, generation)?;
            let context = vec![ContextDocument::new(task_prompt, SourceKind::TaskPrompt)];
            jobs.push(job(Some(m), prompt, context, generation));
        }
        JobKind::CiteRag => {
            let answer = r.slot("answer")?;
            let chunks: Vec<ContextDocument> = r.chunks().collect();
            let prompt = builder.rag_cite(&chunks, answer, opts.rag_mode)?;
            jobs.push(job(None, prompt, chunks, answer));
        }
    }
    Ok(())
}

/// Inclusive budget check on the combined estimate.
pub fn length_filter(prompt: &str, completion: &str, max_tokens: usize, estimator: &dyn TokenEstimator) -> bool {
    estimator.estimate(prompt) + estimator.estimate(completion) <= max_tokens
}

/// Parse, then verify citations, then check length. The first failing
/// step decides the rejection.
pub fn filter_one(raw: &str, job: &Job, opts: &DatagenOptions, estimator: &dyn TokenEstimator) -> Outcome {
    let completion = match job.kind {
        JobKind::Pointwise => match parse_pointwise(raw) {
            Ok(v) => serialize_canonical(&v),
            Err(_) => return Outcome::Rejected(FilterStatus::RejectedBadJson),
        },
        JobKind::CiteQuality => {
            let Ok(out) = parse_quality_output(raw) else {
                return Outcome::Rejected(FilterStatus::RejectedBadJson);
            };
            if !verify_quality_output(&out, &job.context[0], opts.policy).passes() {
                return Outcome::Rejected(FilterStatus::RejectedNonVerbatim);
            }
            serialize_canonical(&out)
        }
        JobKind::CiteRag => {
            let Ok(out) = parse_rag_output(raw, opts.rag_mode) else {
                return Outcome::Rejected(FilterStatus::RejectedBadJson);
            };
            match verify_rag_output(&out, &job.context, &job.answer, opts.policy) {
                Ok(report) if report.passes() => serialize_canonical(&out),
                _ => return Outcome::Rejected(FilterStatus::RejectedNonVerbatim),
            }
        }
    };
    if !length_filter(&job.prompt.text, completion.as_str(), opts.max_tokens, estimator) {
        return Outcome::Rejected(FilterStatus::RejectedTooLong);
    }
    Outcome::Kept(UnifiedTaskRecord {
        prompt: job.prompt.text.clone(),
        completion: completion.into_string(),
        task_type: job.task_type,
        source_dataset: job.source_dataset.clone(),
        filter_status: FilterStatus::Kept,
    })
}

#[derive(Debug, Clone, Default)]
pub struct DatagenOutput {
    /// Kept records in job order.
    pub records: Vec<UnifiedTaskRecord>,
    /// Outcome of every attempted job, in job order.
    pub outcomes: Vec<Outcome>,
    pub stats: FilterStats,
}

/// Runs every job through the gateway and the filters.
pub fn generate<G: Gateway + ?Sized>(
    jobs: &[Job],
    gateway: &G,
    opts: &DatagenOptions,
    cancel: Option<&AtomicBool>,
) -> DatagenOutput {
    let estimator = WordEstimator::default();
    let reqs: Vec<CompletionRequest> = jobs
        .iter()
        .map(|j| CompletionRequest::from_prompt(&j.prompt).with_seed(opts.seed))
        .collect();
    let results = complete_batch(gateway, &reqs, opts.parallelism, cancel, &|_, _| {});
    let mut out = DatagenOutput::default();
    for (job, result) in jobs.iter().zip(results) {
        let outcome = match result {
            Ok(r) => filter_one(&r.text, job, opts, &estimator),
            Err(GatewayError::Cancelled) => {
                out.stats.cancelled += 1;
                continue;
            }
            Err(e) => Outcome::Transport(e),
        };
        out.stats.count(&outcome);
        if let Outcome::Kept(rec) = &outcome {
            out.records.push(rec.clone());
        }
        out.outcomes.push(outcome);
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::gateway::{MockGateway, MockReply, MockRule, MockScript};

    fn record(task_type: TaskType, inputs: &[(&str, &str)]) -> SourceRecord {
        SourceRecord {
            source_dataset: "unit".into(),
            task_type,
            inputs: inputs.iter().map(|(k, v)| (k.to_string(), v.to_string())).collect(),
        }
    }

    fn pointwise_record(q: &str) -> SourceRecord {
        record(TaskType::PointwiseEval, &[("query_with_context", q), ("answer", "an answer")])
    }

    fn mock(rules: Vec<MockRule>, fallback: &str) -> MockGateway {
        MockGateway::new(MockScript {
            rules,
            fallback: Some(MockReply::Text(fallback.into())),
            ..MockScript::default()
        })
    }

    const VALID_POINTWISE: &str = r#"{"metriclabel": "Yes", "justification": "Supported."}"#;

    #[test]
    fn pointwise_fan_out_all_kept() {
        let records = vec![pointwise_record("q one"), pointwise_record("q two")];
        let opts = DatagenOptions::default();
        let jobs = plan_jobs(&records, &PromptBuilder::default(), &opts).unwrap();
        assert_eq!(jobs.len(), 8);
        let out = generate(&jobs, &mock(vec![], VALID_POINTWISE), &opts, None);
        assert_eq!((out.stats.total, out.stats.kept), (8, 8));
        assert!(out.stats.is_consistent());
        let rec = &out.records[0];
        assert_eq!(rec.completion, r#"{"justification":"Supported.","metriclabel":"Yes"}"#);
        assert_eq!(rec.task_type, TaskType::PointwiseEval);
    }

    #[test]
    fn prose_reply_is_bad_json() {
        let records = vec![pointwise_record("q one"), pointwise_record("q two")];
        let opts = DatagenOptions {
            metrics: vec![MetricName::Faithfulness],
            ..DatagenOptions::default()
        };
        let jobs = plan_jobs(&records, &PromptBuilder::default(), &opts).unwrap();
        let rules = vec![MockRule {
            contains: Some("q two".into()),
            prompt_sha256: None,
            replies: vec![MockReply::Text("I think the answer is fine.".into())],
        }];
        let out = generate(&jobs, &mock(rules, VALID_POINTWISE), &opts, None);
        assert_eq!((out.stats.kept, out.stats.rejected_bad_json), (1, 1));
    }

    fn rag_record() -> SourceRecord {
        record(
            TaskType::Citation,
            &[
                ("chunk:1", "Water boils at 100 degrees. Ice melts at 0 degrees."),
                ("chunk:2", "The sky is blue."),
                ("answer", "Water boils at 100 degrees. The sky is blue."),
            ],
        )
    }

    fn rag_job(opts: &DatagenOptions) -> Job {
        plan_jobs(&[rag_record()], &PromptBuilder::default(), opts).unwrap().remove(0)
    }

    #[test]
    fn filter_order() {
        let opts = DatagenOptions::default();
        let job = rag_job(&opts);
        assert_eq!(job.kind, JobKind::CiteRag);
        let est = WordEstimator::default();
        let good = r#"{"citations": [
            {"context_id": "1", "claim": "Water boils at 100 degrees.", "snippet": "Water boils at 100 degrees."},
            {"context_id": "2", "claim": "The sky is blue.", "snippet": "The sky is blue."}]}"#;
        assert!(matches!(filter_one(good, &job, &opts, &est), Outcome::Kept(_)));

        let fabricated = good.replace("\"snippet\": \"The sky is blue.\"", "\"snippet\": \"The sky is green.\"");
        assert_eq!(
            filter_one(&fabricated, &job, &opts, &est),
            Outcome::Rejected(FilterStatus::RejectedNonVerbatim)
        );
        assert_eq!(
            filter_one(r#"{"answer":"Yes""#, &job, &opts, &est),
            Outcome::Rejected(FilterStatus::RejectedBadJson)
        );
        let tight = DatagenOptions {
            max_tokens: 10,
            ..opts.clone()
        };
        assert_eq!(
            filter_one(good, &job, &tight, &est),
            Outcome::Rejected(FilterStatus::RejectedTooLong)
        );
        // Parsing is checked before verbatim-ness, which is checked before length.
        assert_eq!(
            filter_one(&fabricated, &job, &tight, &est),
            Outcome::Rejected(FilterStatus::RejectedNonVerbatim)
        );
    }

    #[test]
    fn unsupported_claim_is_kept() {
        let opts = DatagenOptions::default();
        let job = rag_job(&opts);
        let raw = r#"{"citations": [{"context_id": "None", "claim": "The sky is blue."}]}"#;
        assert!(matches!(
            filter_one(raw, &job, &opts, &WordEstimator::default()),
            Outcome::Kept(_)
        ));
    }

    #[test]
    fn length_budget() {
        let est = WordEstimator::default();
        assert!(length_filter("", "", DEFAULT_MAX_TOKENS, &est));
        let words = "w ".repeat(5000);
        assert!(!length_filter(&words, &words, DEFAULT_MAX_TOKENS, &est));
        let exact = WordEstimator { tokens_per_word: 1.0 };
        assert!(length_filter(&"w ".repeat(6000), &"w ".repeat(144), DEFAULT_MAX_TOKENS, &exact));
        assert!(!length_filter(&"w ".repeat(6000), &"w ".repeat(145), DEFAULT_MAX_TOKENS, &exact));
    }

    #[test]
    fn transport_failures_are_counted() {
        let opts = DatagenOptions {
            metrics: vec![MetricName::Coherence],
            ..DatagenOptions::default()
        };
        let jobs = plan_jobs(&[pointwise_record("q")], &PromptBuilder::default(), &opts).unwrap();
        let rules = vec![MockRule {
            contains: None,
            prompt_sha256: None,
            replies: vec![MockReply::fault("transport")],
        }];
        let out = generate(&jobs, &mock(rules, ""), &opts, None);
        assert_eq!((out.stats.total, out.stats.rejected_transport), (1, 1));
        assert!(out.stats.is_consistent());
    }

    #[test]
    fn missing_input_names_the_record() {
        let bad = record(TaskType::PointwiseEval, &[("answer", "x")]);
        let err = plan_jobs(&[pointwise_record("q"), bad], &PromptBuilder::default(), &DatagenOptions::default())
            .unwrap_err();
        assert_eq!(err.to_string(), "record 1: missing input `query_with_context`");
    }

    #[test]
    fn record_kinds() {
        assert_eq!(rag_record().kind(), Ok(JobKind::CiteRag));
        let q = record(TaskType::Citation, &[("task_prompt", "t"), ("generation", "g")]);
        assert_eq!(q.kind(), Ok(JobKind::CiteQuality));
        assert!(record(TaskType::PairwiseEval, &[]).kind().is_err());
    }
}
