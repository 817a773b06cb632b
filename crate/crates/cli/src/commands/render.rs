use rec_core::model::CitationTask;
use rec_core::render::{render_quality, render_rag};
use rec_core::schema::{parse_quality_output, parse_rag_output, serialize_canonical};

use super::{emit_rendered, parse_mode};
use crate::args::RenderArgs;
use crate::error::{CliResult, Exit};
use crate::io::read_text;
use crate::settings::Settings;

pub fn run(args: RenderArgs, settings: &Settings) -> CliResult {
    let raw = read_text(&args.input)?;
    let rendered = match &args.answer {
        Some(path) => {
            let mode = parse_mode(&args.mode, CitationTask::Rag)?;
            let answer = read_text(path)?;
            parse_rag_output(&raw, mode).map(|out| render_rag(&out, &answer))
        }
        None => {
            let mode = parse_mode(&args.mode, CitationTask::ContentQuality)?;
            parse_quality_output(&raw).map(|out| render_quality(&out, mode))
        }
    };
    match rendered {
        Err(e) => {
            log::error!("{e}");
            eprintln!("{}", serialize_canonical(&e.report()).as_str());
            Ok(Exit::Validation)
        }
        Ok(Err(e)) => {
            log::error!("{e}");
            Ok(Exit::Validation)
        }
        Ok(Ok(r)) => {
            emit_rendered(&r, settings);
            Ok(Exit::Success)
        }
    }
}
