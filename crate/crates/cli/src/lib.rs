//! Command-line front end for the pilot-wave simulator.
//!
//! Every run resolves one experiment configuration (defaults, then an
//! optional TOML file, then per-field flags), executes a single subcommand,
//! and writes CSV files plus a manifest into the output directory. All
//! randomness derives from the configured seed, so reruns with the same
//! arguments produce byte-identical data files regardless of worker count.

pub mod args;
pub mod commands;
pub mod output;

pub use args::{Cli, Command, FieldOverrides};
pub use commands::{execute, CliError};

use clap::error::ErrorKind;
use clap::Parser;

/// Parse arguments from the environment, run, and map the result onto the
/// process exit code: 0 success, 1 rejected input, 2 runtime failure.
pub fn run() -> i32 {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => 0,
                _ => 1,
            };
            let _ = e.print();
            return code;
        }
    };
    match execute(&cli) {
        Ok(()) => 0,
        Err(CliError::Validation(msg)) => {
            eprintln!("error: {msg}");
            1
        }
        Err(CliError::Runtime(msg)) => {
            eprintln!("error: {msg}");
            2
        }
    }
}
