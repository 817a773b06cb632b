mod args;
mod commands;
mod error;
mod io;
mod settings;

use std::sync::atomic::{AtomicBool, Ordering};

use clap::error::ErrorKind;
use clap::Parser;

use args::Cli;
use error::Exit;
use settings::Settings;

static CANCEL: AtomicBool = AtomicBool::new(false);

/// Set once on SIGINT; batch work stops starting new requests.
pub fn cancel_flag() -> &'static AtomicBool {
    &CANCEL
}

fn main() {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn"))
        .format_timestamp(None)
        .init();
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => Exit::Success,
                _ => Exit::Usage,
            };
            let _ = e.print();
            std::process::exit(code.code());
        }
    };
    if let Err(e) = ctrlc::set_handler(|| CANCEL.store(true, Ordering::SeqCst)) {
        log::warn!("cannot install interrupt handler: {e}");
    }
    let code = match Settings::resolve(&cli.global).and_then(|s| commands::run(cli.command, &s)) {
        Ok(exit) => exit,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit
        }
    };
    std::process::exit(code.code());
}
