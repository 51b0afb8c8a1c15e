//! `rdtm` command-line front end.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

mod args;
mod demo;
mod embed;
mod error;
mod io;
mod reach;
mod simulate;
mod sweep;
mod tm;

use std::io::Write;
use std::process::ExitCode;

use clap::Parser;

use args::{Cli, Command};
use error::CliError;

fn run(cli: Cli) -> Result<serde_json::Value, CliError> {
    let out = io::Output::new(&cli.global)?;
    match cli.command {
        Command::Embed(a) => embed::run(&a, cli.global.seed, &out),
        Command::Simulate(a) => simulate::run(&a, &out),
        Command::SweepError(a) => sweep::run(&a, &cli.global, &out),
        Command::SelectStepSize(a) => sweep::select(&a, &out),
        Command::Reach(a) => reach::run(&a, &out),
        Command::Tm(a) => tm::run(&a, &cli.global, &out),
        Command::DemoLorenz(a) => demo::run(&a, &out),
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            use clap::error::ErrorKind;
            if matches!(e.kind(), ErrorKind::DisplayHelp | ErrorKind::DisplayVersion) {
                let _ = e.print();
                return ExitCode::SUCCESS;
            }
            let err = CliError::Usage(e.to_string());
            eprintln!("{}", err.to_json());
            return ExitCode::from(err.exit_code());
        }
    };
    match run(cli) {
        Ok(summary) => {
            let text = serde_json::to_string_pretty(&summary).expect("summary serializes");
            // A closed pipe is not a failure of the command.
            let _ = writeln!(std::io::stdout(), "{text}");
            ExitCode::SUCCESS
        }
        Err(err) => {
            eprintln!("{}", err.to_json());
            ExitCode::from(err.exit_code())
        }
    }
}
