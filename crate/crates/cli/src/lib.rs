//! `qualpert` command-line front end.
//!
//! Exit codes: 0 success, 1 the analysis found a failure (an MFCQ `Fails`
//! verdict, a non-converged solve, an infeasible or stalled homotopy level),
//! 2 usage, parse or input errors.

pub mod commands;
pub mod document;

use std::ffi::OsString;
use std::io::Write;

use clap::Parser;

pub use document::{parse_problem, parse_problem_file, DocumentError, ProblemDocument};

pub const EXIT_OK: i32 = 0;
pub const EXIT_FINDINGS: i32 = 1;
pub const EXIT_USAGE: i32 = 2;

pub fn run<I, T>(args: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match commands::Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_USAGE } else { EXIT_OK };
            let _ = if e.use_stderr() {
                write!(err, "{}", e.render())
            } else {
                write!(out, "{}", e.render())
            };
            return code;
        }
    };
    match commands::dispatch(&cli, out) {
        Ok(false) => EXIT_OK,
        Ok(true) => EXIT_FINDINGS,
        Err(e) => {
            let _ = writeln!(err, "error: {e}");
            EXIT_USAGE
        }
    }
}
