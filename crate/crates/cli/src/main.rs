//! Binary entry point: parse, dispatch, and map harness errors onto the
//! documented exit codes (0 success, 2 configuration error, 3 numeric
//! failure in every run).

use atomrl_cli::args::Cli;
use atomrl_cli::commands;
use clap::Parser;
use std::process::ExitCode;

fn main() -> ExitCode {
    let cli = Cli::parse();
    match commands::run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {}", e.message);
            ExitCode::from(e.code)
        }
    }
}
