use std::process::ExitCode;

use clap::Parser;
use mefsc::bench::{exit_code, run_and_emit, Cli, Command, RunConfig, WORKERS_ENV};

fn main() -> ExitCode {
    let Command::Run(args) = Cli::parse().command;
    let env = std::env::var(WORKERS_ENV).ok();
    let result = RunConfig::resolve(&args, env.as_deref()).and_then(|cfg| run_and_emit(&cfg));
    if let Err(e) = &result {
        eprintln!("mefsc: {e}");
    }
    ExitCode::from(exit_code(&result) as u8)
}
