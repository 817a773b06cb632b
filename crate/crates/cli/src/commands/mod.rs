mod cite;
mod datagen;
mod evaluate;
mod judge;
mod render;
mod score;
mod validate;

use rec_core::gateway::{CompletionRequest, Gateway};
use rec_core::model::{CitationMode, CitationTask};
use rec_core::prompt::PromptText;
use rec_core::render::RenderedText;

use crate::args::Command;
use crate::error::{CliError, CliResult};
use crate::settings::Settings;

pub fn run(command: Command, settings: &Settings) -> CliResult {
    match command {
        Command::Evaluate(a) => evaluate::run(a, settings),
        Command::Cite(a) => cite::run(a, settings),
        Command::Validate(a) => validate::run(a, settings),
        Command::Render(a) => render::run(a, settings),
        Command::Score(a) => score::run(a, settings),
        Command::Judge(a) => judge::run(a, settings),
        Command::Datagen(a) => datagen::run(a, settings),
    }
}

fn parse_mode(s: &str, task: CitationTask) -> CliResult<CitationMode> {
    let mode: CitationMode = s.parse().map_err(CliError::usage)?;
    if !mode.valid_for(task) {
        return Err(CliError::usage(format!(
            "mode {mode} is not available for this task (content-quality supports postfix-snippet and inline-snippet)"
        )));
    }
    Ok(mode)
}

/// One blocking completion; backend failures map to exit code 3.
fn complete_one(gateway: &dyn Gateway, prompt: &PromptText, settings: &Settings) -> CliResult<String> {
    let req = CompletionRequest::from_prompt(prompt).with_seed(settings.seed);
    gateway
        .complete(&req)
        .map(|r| r.text)
        .map_err(CliError::backend)
}

fn emit_rendered(rendered: &RenderedText, settings: &Settings) {
    for w in &rendered.warnings {
        log::warn!("{w}");
    }
    println!("{}", rendered.format(settings.format));
}
