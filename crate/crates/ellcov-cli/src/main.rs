//! `ellcov` binary entry point: parse arguments, dispatch, map exit codes.
//!
//! Exit codes: `0` success, `1` input or validation error, `2` estimate
//! finished without converging (the result is still written).

use clap::Parser;
use ellcov_cli::commands::{dispatch, Cli};

fn main() {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            // --help and --version are successes; any usage problem is an
            // input error, not the non-convergence code clap would use.
            let code = if e.exit_code() == 0 { 0 } else { 1 };
            let _ = e.print();
            std::process::exit(code);
        }
    };
    match dispatch(cli) {
        Ok(code) => std::process::exit(code),
        Err(err) => {
            eprintln!("error: {}", err.message);
            std::process::exit(err.code);
        }
    }
}
