//! `strata`: allocation, finishing-time analytics, simulation and an
//! end-to-end demo for layered coded computation.
//!
//! Exit codes: 0 success, 1 usage error, 2 invalid input or infeasible
//! request, 3 numerical failure.

// `!(x > 0.0)` style checks are deliberate: they also reject NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

mod args;
mod commands;
mod config;
mod demo;

use std::process::ExitCode;

use clap::Parser;

use args::{Cli, Command};

/// Bad or missing flags, reported with exit code 1.
#[derive(Debug)]
pub struct UsageError(pub String);

impl std::fmt::Display for UsageError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::error::Error for UsageError {}

fn exit_code(err: &anyhow::Error) -> u8 {
    if err.downcast_ref::<UsageError>().is_some() {
        return 1;
    }
    for cause in err.chain() {
        if let Some(e) = cause.downcast_ref::<strata_core::Error>() {
            return e.exit_code() as u8;
        }
    }
    2
}

fn run(cli: Cli) -> anyhow::Result<()> {
    match &cli.command {
        Command::Optimize(a) => commands::optimize(a),
        Command::Cdf(a) => commands::cdf(a),
        Command::Expected(a) => commands::expected(a),
        Command::Exponents(a) => commands::exponents(a),
        Command::Simulate(a) => commands::simulate(a),
        Command::Demo(a) => demo::demo(a),
        Command::Bench(a) => commands::bench(a),
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 1 } else { 0 });
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(exit_code(&e))
        }
    }
}
