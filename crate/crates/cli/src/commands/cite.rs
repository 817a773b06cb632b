use serde::Serialize;

use rec_core::model::{duplicate_context_ids, CitationTask};
use rec_core::render::{render_rag, RenderedText};
use rec_core::schema::{parse_rag_output, ValidationReport};
use rec_core::verify::{verify_rag_output, VerificationReport};

use super::{complete_one, emit_rendered, parse_mode};
use crate::args::CiteArgs;
use crate::error::{CliError, CliResult, Exit};
use crate::io::{read_contexts, read_text, write_json};
use crate::settings::Settings;

#[derive(Serialize)]
struct Sidecar {
    raw: String,
    parsed: Option<serde_json::Value>,
    validation: ValidationReport,
    verification: Option<VerificationReport>,
    rendered: Option<RenderedText>,
}

pub fn run(args: CiteArgs, settings: &Settings) -> CliResult {
    let mode = parse_mode(&args.mode, CitationTask::Rag)?;
    let chunks = read_contexts(&args.chunks)?;
    let dups = duplicate_context_ids(&chunks);
    if !dups.is_empty() {
        return Err(CliError::usage(format!("duplicate context ids: {}", dups.join(", "))));
    }
    let answer = read_text(&args.answer)?;
    let prompt = settings
        .prompt_builder()?
        .rag_cite(&chunks, &answer, mode)
        .map_err(CliError::usage)?;
    let gateway = settings.gateway()?;
    let raw = complete_one(gateway.as_ref(), &prompt, settings)?;

    let mut sidecar = Sidecar {
        raw,
        parsed: None,
        validation: ValidationReport::ok(),
        verification: None,
        rendered: None,
    };
    let exit = match parse_rag_output(&sidecar.raw, mode) {
        Err(e) => {
            log::error!("citation reply failed validation: {e}");
            sidecar.validation = e.report();
            Exit::Validation
        }
        Ok(out) => {
            sidecar.parsed = Some(serde_json::to_value(&out).map_err(CliError::internal)?);
            match verify_rag_output(&out, &chunks, &answer, settings.policy) {
                Err(e) => {
                    log::error!("{e}");
                    sidecar.validation = ValidationReport::from_violations(vec![
                        rec_core::model::Violation::new(
                            rec_core::model::ViolationCode::Invariant,
                            "citations",
                            e.to_string(),
                        ),
                    ]);
                    Exit::Validation
                }
                Ok(report) => {
                    let passes = report.passes();
                    for c in report.failing_citations() {
                        log::error!("citation {} is not in chunk {:?}: {:?}", c.index, c.context_id, c.snippet);
                    }
                    sidecar.verification = Some(report);
                    match render_rag(&out, &answer) {
                        Ok(rendered) => {
                            emit_rendered(&rendered, settings);
                            sidecar.rendered = Some(rendered);
                            if passes { Exit::Success } else { Exit::Validation }
                        }
                        Err(e) => {
                            log::error!("{e}");
                            Exit::Validation
                        }
                    }
                }
            }
        }
    };
    if let Some(path) = &args.out {
        write_json(path, &sidecar)?;
    }
    Ok(exit)
}
