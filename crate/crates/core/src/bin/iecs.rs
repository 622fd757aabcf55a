use std::process::ExitCode;

use clap::Parser;
use iecs::cli::{exit_code, run, Cli};

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) => {
            eprintln!("iecs: {err}");
            ExitCode::from(exit_code(&err))
        }
    }
}
