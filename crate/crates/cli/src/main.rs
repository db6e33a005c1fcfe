//! `ebicert`: certify, sweep, brute-force, seesaw and sample from the
//! command line. Exit status is 0 whenever the computation ran, whatever the
//! certification outcome; 2 for configuration errors, 3 for I/O errors.

mod commands;
mod config;
mod error;
mod output;

use std::process::ExitCode;

use clap::Parser;

use commands::Output;
use config::{build, merge, Flags, RunConfig};
use error::CliError;
use output::{now_unix, write_atomic};

fn execute(cfg: &RunConfig) -> Result<(), CliError> {
    let text = match commands::run(cfg)? {
        Output::Report(report) => report.render(now_unix()),
        Output::Counts(record) => record.to_string(),
    };
    match &cfg.out {
        Some(path) => write_atomic(path, &text),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

fn main() -> ExitCode {
    let flags = Flags::parse();
    let result = merge(&flags).and_then(|m| build(&m)).and_then(|cfg| execute(&cfg));
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("ebicert: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
