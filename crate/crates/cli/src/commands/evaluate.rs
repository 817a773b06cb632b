use serde::Serialize;

use rec_core::model::{metric, CitationTask, ContextDocument, MetricName, SourceKind};
use rec_core::render::{render_quality, RenderedText};
use rec_core::schema::{parse_quality_output, ValidationReport};
use rec_core::verify::{verify_quality_output, VerificationReport};

use super::{complete_one, emit_rendered, parse_mode};
use crate::args::EvaluateArgs;
use crate::error::{CliError, CliResult, Exit};
use crate::io::{read_text, write_json};
use crate::settings::Settings;

#[derive(Serialize)]
struct Sidecar {
    raw: String,
    validation: ValidationReport,
    verification: Option<VerificationReport>,
    rendered: Option<RenderedText>,
}

pub fn run(args: EvaluateArgs, settings: &Settings) -> CliResult {
    let name: MetricName = args.metric.parse().map_err(CliError::usage)?;
    let mode = parse_mode(&args.mode, CitationTask::ContentQuality)?;
    let context = read_text(&args.context)?;
    let generation = read_text(&args.generation)?;
    let prompt = settings
        .prompt_builder()?
        .quality(&metric(name), &context, &generation)
        .map_err(CliError::usage)?;
    let gateway = settings.gateway()?;
    let raw = complete_one(gateway.as_ref(), &prompt, settings)?;

    let mut sidecar = Sidecar {
        raw,
        validation: ValidationReport::ok(),
        verification: None,
        rendered: None,
    };
    let exit = match parse_quality_output(&sidecar.raw) {
        Err(e) => {
            log::error!("evaluator reply failed validation: {e}");
            sidecar.validation = e.report();
            Exit::Validation
        }
        Ok(out) => {
            let doc = ContextDocument::new(context, SourceKind::TaskPrompt);
            let report = verify_quality_output(&out, &doc, settings.policy);
            let rendered = render_quality(&out, mode).map_err(CliError::internal)?;
            emit_rendered(&rendered, settings);
            for c in report.failing_citations() {
                log::error!("citation {} is not in the context: {:?}", c.index, c.snippet);
            }
            let exit = if report.passes() { Exit::Success } else { Exit::Validation };
            sidecar.verification = Some(report);
            sidecar.rendered = Some(rendered);
            exit
        }
    };
    if let Some(path) = &args.out {
        write_json(path, &sidecar)?;
    }
    Ok(exit)
}
