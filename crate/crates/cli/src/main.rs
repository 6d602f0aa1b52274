//! `modefuse` command-line front end.
//!
//! Exit codes: 0 success, 2 usage, 3 validation, 4 data, 5 runtime.

mod args;
mod commands;

use std::process::ExitCode;

use clap::Parser;
use modefuse::{Error, ErrorCategory};

use args::{Cli, Command};

const EXIT_USAGE: u8 = 2;
const EXIT_VALIDATION: u8 = 3;
const EXIT_DATA: u8 = 4;
const EXIT_RUNTIME: u8 = 5;

fn exit_code(e: &Error) -> u8 {
    match e.category() {
        ErrorCategory::Validation => EXIT_VALIDATION,
        ErrorCategory::Data => EXIT_DATA,
        ErrorCategory::Runtime => EXIT_RUNTIME,
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { EXIT_USAGE } else { 0 });
        }
    };
    let ctx = commands::Context {
        seed: cli.seed,
        out: cli.out,
        quiet: cli.quiet,
    };
    let result = match cli.command {
        Command::Run(a) => commands::run(&ctx, a),
        Command::Fuse(a) => commands::fuse(&ctx, a),
        Command::Metrics(a) => commands::metrics(&ctx, a),
        Command::Split(a) => commands::split(&ctx, a),
        Command::Synth(a) => commands::synth(&ctx, a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(exit_code(&e))
        }
    }
}
