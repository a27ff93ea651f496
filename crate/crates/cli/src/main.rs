//! `vmpc`: command-line driver for simulation, extraction and analysis.
//!
//! Exit status: 0 success, 1 tolerance exceeded or self-test failure,
//! 2 usage or configuration error, 3 I/O or parse error.

mod args;
mod commands;
mod selftest;

use std::process::ExitCode;

use clap::Parser;

use args::{Cli, Command};

fn main() -> ExitCode {
    let cli = Cli::parse();
    let level = match cli.verbose {
        0 => log::LevelFilter::Warn,
        1 => log::LevelFilter::Info,
        _ => log::LevelFilter::Debug,
    };
    env_logger::Builder::new().filter_level(level).parse_default_env().init();
    let result = match &cli.command {
        Command::Simulate(a) => commands::simulate(a),
        Command::Extract(a) => commands::extract(a),
        Command::Analyze(a) => commands::analyze(a),
        Command::Roundtrip(a) => commands::roundtrip(a),
        Command::SelfTest(a) => Ok(selftest::self_test(a)),
    };
    match result {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(commands::exit_code(&e))
        }
    }
}
