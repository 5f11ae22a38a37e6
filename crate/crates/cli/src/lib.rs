//! Command-line front end of `hypmin`: argument parsing, persistence of
//! fields, profiles and reports, and SVG plots.

// Parameter checks are written `!(x > 0.0)` so that NaN is rejected too.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod commands;
pub mod io;
pub mod plot;

use std::ffi::OsString;

use clap::Parser;

pub use commands::{Cli, CliError, Command, RunConfig, EXIT_OK, EXIT_SOLVER, EXIT_USAGE, EXIT_VERDICT};

/// Parses `argv` (program name first), runs the command and returns the
/// exit code. Diagnostics go to stderr.
pub fn run<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_USAGE } else { EXIT_OK };
            let _ = e.print();
            return code;
        }
    };
    match commands::execute(&cli.command) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("hypmin: {e}");
            e.exit_code()
        }
    }
}
