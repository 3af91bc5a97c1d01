mod args;
mod commands;
mod input;
mod report;

use std::process::ExitCode;

use clap::Parser;

use args::{Cli, Command};

/// Exit statuses.
pub const EXIT_FAILURE: u8 = 1;
pub const EXIT_USAGE: u8 = 2;
pub const EXIT_NO_CONVERGENCE: u8 = 3;
pub const EXIT_CLAIM_FAILED: u8 = 4;

#[derive(Debug)]
pub struct CliError {
    pub code: u8,
    pub message: String,
}

impl CliError {
    /// A closed stdout (e.g. piped into `head`) ends the run quietly.
    fn closed_pipe() -> Self {
        Self {
            code: 0,
            message: String::new(),
        }
    }

    pub fn usage(message: impl Into<String>) -> Self {
        Self {
            code: EXIT_USAGE,
            message: message.into(),
        }
    }
}

impl From<rcassoc::Error> for CliError {
    fn from(e: rcassoc::Error) -> Self {
        use rcassoc::Error as E;
        let code = match e {
            E::Parse { .. }
            | E::Dimension(_)
            | E::Spec(_)
            | E::Domain(_)
            | E::CutOutOfRange { .. } => EXIT_USAGE,
            E::NoConvergence { .. } => EXIT_NO_CONVERGENCE,
            _ => EXIT_FAILURE,
        };
        Self {
            code,
            message: e.to_string(),
        }
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        if e.kind() == std::io::ErrorKind::BrokenPipe {
            return Self::closed_pipe();
        }
        Self::usage(e.to_string())
    }
}

impl From<serde_json::Error> for CliError {
    fn from(e: serde_json::Error) -> Self {
        if e.io_error_kind() == Some(std::io::ErrorKind::BrokenPipe) {
            return Self::closed_pipe();
        }
        Self {
            code: EXIT_FAILURE,
            message: e.to_string(),
        }
    }
}

impl From<csv::Error> for CliError {
    fn from(e: csv::Error) -> Self {
        if let csv::ErrorKind::Io(io) = e.kind() {
            if io.kind() == std::io::ErrorKind::BrokenPipe {
                return Self::closed_pipe();
            }
        }
        Self {
            code: EXIT_FAILURE,
            message: e.to_string(),
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Fit(a) => commands::fit(&a),
        Command::Sweep(a) => commands::sweep(&a),
        Command::Reconstruct(a) => commands::reconstruct(&a),
        Command::Check(a) => commands::check(&a),
        Command::Counterexamples(a) => commands::counterexamples(&a),
    };
    match result {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            if !e.message.is_empty() {
                eprintln!("error: {}", e.message);
            }
            ExitCode::from(e.code)
        }
    }
}
