mod args;
mod commands;

use std::process::ExitCode;

use clap::error::ErrorKind;
use clap::Parser;

use crate::args::{Cli, Command};

/// Failure classes with stable exit codes.
#[derive(Debug)]
pub enum Failure {
    /// Bad flags, unreadable or malformed input (exit 1).
    Input(anyhow::Error),
    /// The algorithm ran but did not succeed (exit 2).
    Algorithm(anyhow::Error),
}

impl Failure {
    fn code(&self) -> u8 {
        match self {
            Failure::Input(_) => 1,
            Failure::Algorithm(_) => 2,
        }
    }
}

impl<E: Into<anyhow::Error>> From<E> for Failure {
    fn from(e: E) -> Self {
        Failure::Input(e.into())
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => ExitCode::SUCCESS,
                _ => ExitCode::from(1),
            };
        }
    };
    let result = match &cli.command {
        Command::Synth(a) => commands::synth(a),
        Command::Decompose(a) => commands::decompose(a),
        Command::Deconvolve(a) => commands::mixture(a, false),
        Command::Gmm(a) => commands::mixture(a, true),
        Command::Eval(a) => commands::eval(a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            let (Failure::Input(e) | Failure::Algorithm(e)) = &f;
            eprintln!("error: {e:#}");
            ExitCode::from(f.code())
        }
    }
}
