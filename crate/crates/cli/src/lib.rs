//! Command-line front end.
//!
//! Exit codes are a stable contract: 0 success, 1 validation or
//! configuration error, 2 I/O error.

pub mod commands;
pub mod output;
pub mod resolve;

use std::ffi::OsString;

use clap::Parser;
use intervene_core::Error;

pub use commands::{Cli, Command, DecisionRow};
pub use output::RunManifest;

pub const EXIT_OK: i32 = 0;
pub const EXIT_INVALID: i32 = 1;
pub const EXIT_IO: i32 = 2;

pub fn exit_code(e: &Error) -> i32 {
    if e.is_io() {
        EXIT_IO
    } else {
        EXIT_INVALID
    }
}

/// Parses `args` (program name first) and runs the command.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            // clap reports usage errors with code 2, which here means I/O
            let code = if e.use_stderr() { EXIT_INVALID } else { EXIT_OK };
            let _ = e.print();
            return code;
        }
    };
    match commands::execute(cli) {
        Ok(()) => EXIT_OK,
        Err(e) => {
            eprintln!("error: {e}");
            exit_code(&e)
        }
    }
}
