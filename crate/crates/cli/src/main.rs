mod cli;
mod commands;
mod manifest;

use std::process::ExitCode;

use clap::error::ErrorKind;
use clap::Parser;

use crate::cli::{Cli, Command, OutputArgs};
use crate::commands::{CliError, Outcome, EXIT_USAGE};

fn run(cli: &Cli) -> Result<(Outcome, &OutputArgs), CliError> {
    Ok(match &cli.command {
        Command::Simulate(a) => (commands::simulate(a)?, &a.output),
        Command::Scan(a) => (commands::scan_cmd(a)?, &a.output),
        Command::Check(a) => (commands::check(a)?, &a.output),
        Command::Oracle(a) => (commands::oracle(a)?, &a.output),
        Command::Trajectory(a) => (commands::trajectory(a)?, &a.output),
        Command::Export(a) => (commands::export(a)?, &a.output),
    })
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => ExitCode::SUCCESS,
                _ => ExitCode::from(EXIT_USAGE as u8),
            };
        }
    };
    match run(&cli) {
        Ok((outcome, out)) => {
            if let Err(e) = commands::write_output(out, &outcome.body) {
                eprintln!("error: {}", e.message);
                return ExitCode::from(e.code as u8);
            }
            if let Some(note) = outcome.note {
                eprintln!("error: {note}");
            }
            ExitCode::from(outcome.code as u8)
        }
        Err(e) => {
            eprintln!("error: {}", e.message);
            ExitCode::from(e.code as u8)
        }
    }
}
