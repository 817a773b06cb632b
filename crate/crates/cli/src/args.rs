use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};

/// Rating, explanation and citation tools for LLM auto-evaluation.
///
/// Exit codes: 0 success, 1 usage error, 2 validation failures present,
/// 3 backend or transport failure, 4 internal error.
#[derive(Debug, Parser)]
#[command(name = "rec", version)]
pub struct Cli {
    #[command(flatten)]
    pub global: GlobalArgs,
    #[command(subcommand)]
    pub command: Command,
}

/// Settings shared by every command. Each can also come from the
/// environment or the config file; flags win over env, env over file.
#[derive(Debug, Clone, Default, Args)]
pub struct GlobalArgs {
    /// Flat JSON config file.
    #[arg(long, global = true, env = "REC_CONFIG")]
    pub config: Option<PathBuf>,
    /// `http` or `mock:<builtin|script.json>`.
    #[arg(long, global = true, env = "REC_BACKEND")]
    pub backend: Option<String>,
    #[arg(long, global = true, env = "REC_SEED")]
    pub seed: Option<u64>,
    /// Citation matching: strict or normalized.
    #[arg(long, global = true, env = "REC_POLICY")]
    pub policy: Option<String>,
    /// Output format for rendered text: text or json.
    #[arg(long, global = true, env = "REC_FORMAT")]
    pub format: Option<String>,
    /// Directory whose template files replace the built-in ones.
    #[arg(long, global = true, env = "REC_TEMPLATE_DIR")]
    pub template_dir: Option<PathBuf>,
    #[arg(long, global = true, env = "REC_BASE_URL")]
    pub base_url: Option<String>,
    #[arg(long, global = true, env = "REC_MODEL_NAME")]
    pub model_name: Option<String>,
    #[arg(long, global = true, env = "REC_TIMEOUT_MS")]
    pub timeout_ms: Option<u64>,
    #[arg(long, global = true, env = "REC_MAX_RETRIES")]
    pub max_retries: Option<u32>,
    #[arg(long, global = true, env = "REC_PARALLELISM")]
    pub parallelism: Option<usize>,
    /// Append one JSON line per backend call to this file.
    #[arg(long, global = true, env = "REC_AUDIT_LOG")]
    pub audit_log: Option<PathBuf>,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Rate a generation on one metric, with cited explanation.
    Evaluate(EvaluateArgs),
    /// Cite retrieved chunks for a generated answer.
    Cite(CiteArgs),
    /// Check stored evaluator outputs against their contexts.
    Validate(ValidateArgs),
    /// Render a stored evaluator output.
    Render(RenderArgs),
    /// Score predictions against two annotators.
    Score(ScoreArgs),
    /// Pairwise judging: win rate and order bias.
    Judge(JudgeArgs),
    /// Generate and filter synthetic training data.
    Datagen(DatagenArgs),
}

#[derive(Debug, Args)]
pub struct EvaluateArgs {
    /// Task prompt the generation answered, including any conversation.
    #[arg(long)]
    pub context: PathBuf,
    #[arg(long)]
    pub generation: PathBuf,
    #[arg(long)]
    pub metric: String,
    #[arg(long, default_value = "inline-snippet")]
    pub mode: String,
    /// JSON sidecar with the raw reply, verification and rendering.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct CiteArgs {
    /// JSON array or JSONL of {"context_id", "body"}.
    #[arg(long)]
    pub chunks: PathBuf,
    #[arg(long)]
    pub answer: PathBuf,
    #[arg(long, default_value = "inline-snippet")]
    pub mode: String,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct ValidateArgs {
    /// JSONL of {"context_ref", "output", "answer"?, "mode"?}.
    #[arg(long)]
    pub records: PathBuf,
    /// JSON array or JSONL of {"context_id", "body"}.
    #[arg(long)]
    pub contexts: PathBuf,
}

#[derive(Debug, Args)]
pub struct RenderArgs {
    /// Raw evaluator reply.
    #[arg(long)]
    pub input: PathBuf,
    #[arg(long, default_value = "postfix-snippet")]
    pub mode: String,
    /// Generated answer; its presence selects RAG rendering.
    #[arg(long)]
    pub answer: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct ScoreArgs {
    #[arg(long)]
    pub pred: PathBuf,
    #[arg(long)]
    pub gold: PathBuf,
    /// Context bodies used to snap citations to full sentences.
    #[arg(long)]
    pub contexts: Option<PathBuf>,
    /// Match sentences by token F1 at this threshold instead of exactly.
    #[arg(long)]
    pub token_f1: Option<f64>,
}

#[derive(Debug, Args)]
pub struct JudgeArgs {
    /// JSONL of {"instruction", "chosen", "rejected"}.
    #[arg(long)]
    pub pairs: PathBuf,
    /// Judge every pair in both presentation orders.
    #[arg(long)]
    pub both_orders: bool,
}

#[derive(Debug, Args)]
pub struct DatagenArgs {
    /// JSONL of source records.
    #[arg(long)]
    pub input: PathBuf,
    /// pointwise, cite-quality or cite-rag.
    #[arg(long)]
    pub task: String,
    /// Comma-separated metrics for pointwise fan-out, e.g. f,if,coh,comp.
    #[arg(long)]
    pub metrics: Option<String>,
    #[arg(long, default_value = "inline-snippet")]
    pub rag_mode: String,
    #[arg(long, default_value_t = rec_core::datagen::DEFAULT_MAX_TOKENS)]
    pub max_tokens: usize,
    #[arg(long)]
    pub out: PathBuf,
    #[arg(long)]
    pub stats: Option<PathBuf>,
}
