use rec_core::datagen::{generate, plan_jobs, DatagenOptions, JobKind, Outcome, SourceRecord};
use rec_core::model::{CitationTask, MetricName};

use super::parse_mode;
use crate::args::DatagenArgs;
use crate::error::{CliError, CliResult, Exit};
use crate::io::{read_rows, write_json, write_lines};
use crate::settings::Settings;

fn parse_metrics(list: &str) -> CliResult<Vec<MetricName>> {
    let mut out = Vec::new();
    for part in list.split(',').map(str::trim).filter(|p| !p.is_empty()) {
        let m: MetricName = part.parse().map_err(CliError::usage)?;
        if !out.contains(&m) {
            out.push(m);
        }
    }
    if out.is_empty() {
        return Err(CliError::usage("--metrics lists no metric"));
    }
    Ok(out)
}

pub fn run(args: DatagenArgs, settings: &Settings) -> CliResult {
    let task: JobKind = args.task.parse().map_err(CliError::usage)?;
    let records: Vec<SourceRecord> = read_rows(&args.input)?;
    for (i, r) in records.iter().enumerate() {
        let kind = r.kind().map_err(|e| CliError::usage(format!("record {}: {e}", i + 1)))?;
        if kind != task {
            return Err(CliError::usage(format!(
                "record {} is a {} record but --task is {}",
                i + 1,
                serde_json::to_value(kind).map_err(CliError::internal)?.as_str().unwrap_or("?"),
                args.task
            )));
        }
    }
    let opts = DatagenOptions {
        policy: settings.policy,
        rag_mode: parse_mode(&args.rag_mode, CitationTask::Rag)?,
        metrics: match &args.metrics {
            Some(m) => parse_metrics(m)?,
            None => MetricName::ALL.to_vec(),
        },
        max_tokens: args.max_tokens,
        parallelism: settings.parallelism,
        seed: settings.seed,
    };
    let jobs = plan_jobs(&records, &settings.prompt_builder()?, &opts).map_err(CliError::usage)?;
    let gateway = settings.gateway()?;
    let out = generate(&jobs, gateway.as_ref(), &opts, Some(crate::cancel_flag()));

    for o in &out.outcomes {
        if let Outcome::Transport(e) = o {
            log::warn!("backend call failed: {e}");
        }
    }
    let stats = out.stats;
    let trailer = (stats.cancelled > 0).then(|| serde_json::json!({ "stats": stats }));
    write_lines(&args.out, &out.records, trailer.as_ref())?;
    if let Some(path) = &args.stats {
        write_json(path, &stats)?;
    }
    eprintln!(
        "total {} kept {} bad_json {} non_verbatim {} too_long {} transport {} cancelled {}",
        stats.total,
        stats.kept,
        stats.rejected_bad_json,
        stats.rejected_non_verbatim,
        stats.rejected_too_long,
        stats.rejected_transport,
        stats.cancelled
    );
    let all_transport = !jobs.is_empty() && stats.rejected_transport == stats.total;
    Ok(if stats.cancelled > 0 || all_transport {
        Exit::Backend
    } else {
        Exit::Success
    })
}
