use std::collections::HashMap;

use rec_core::metrics::{score, GoldRow, PredRow, ScoreOptions, SnippetMatching};

use crate::args::ScoreArgs;
use crate::error::{CliError, CliResult, Exit};
use crate::io::{print_json, read_contexts, read_rows};
use crate::settings::Settings;

pub fn run(args: ScoreArgs, settings: &Settings) -> CliResult {
    let preds: Vec<PredRow> = read_rows(&args.pred)?;
    let golds: Vec<GoldRow> = read_rows(&args.gold)?;
    let mut contexts = HashMap::new();
    if let Some(path) = &args.contexts {
        for doc in read_contexts(path)? {
            if let Some(id) = doc.context_id.clone() {
                contexts.insert(id, doc);
            }
        }
    }
    let matching = match args.token_f1 {
        None => SnippetMatching::Exact,
        Some(t) if (0.0..=1.0).contains(&t) => SnippetMatching::TokenF1 { threshold: t },
        Some(t) => return Err(CliError::usage(format!("--token-f1 must be in [0, 1], got {t}"))),
    };
    let opts = ScoreOptions {
        policy: settings.policy,
        matching,
    };
    let report = score(&preds, &golds, &contexts, opts).map_err(CliError::usage)?;
    print_json(&report);
    Ok(Exit::Success)
}
