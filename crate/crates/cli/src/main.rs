mod args;
mod commands;
mod output;

use std::fs;
use std::process::ExitCode;

use clap::Parser;

use maxstream_core::Executor;

use args::{Cli, Command};
use commands::{load_model_config, CmdResult, Context};

const USAGE_ERROR: u8 = 2;
const VERIFICATION_FAILED: u8 = 1;

fn thread_count(flag: usize) -> Result<usize, String> {
    match std::env::var("MAXSTREAM_THREADS") {
        Ok(v) if !v.trim().is_empty() => {
            v.trim().parse().map_err(|_| format!("MAXSTREAM_THREADS must be a non-negative integer, got {v:?}"))
        }
        _ => Ok(flag),
    }
}

fn run(cli: &Cli) -> CmdResult {
    let g = &cli.global;
    let threads = thread_count(g.threads)?;
    let exec = Executor::with_threads(threads).map_err(|e| e.to_string())?;
    let config = g.config.as_deref().map(load_model_config).transpose()?;
    let ctx = Context { seed: g.seed, format: g.format, config, timings: g.timings, exec };
    match &cli.command {
        Command::Simulate(a) => commands::simulate(&ctx, a),
        Command::Metric(a) => commands::metric(&ctx, a),
        Command::Oscillation(a) => commands::oscillation(&ctx, a),
        Command::Verify(c) => commands::verify(&ctx, c),
        Command::Estimate(c) => commands::estimate(&ctx, c),
        Command::Garch(c) => commands::garch(&ctx, c),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let output = match run(&cli) {
        Ok(o) => o,
        Err(msg) => {
            eprintln!("error: {msg}");
            return ExitCode::from(USAGE_ERROR);
        }
    };
    match &cli.global.out {
        Some(path) => {
            if let Err(e) = fs::write(path, &output.text) {
                eprintln!("error: cannot write {}: {e}", path.display());
                return ExitCode::from(USAGE_ERROR);
            }
        }
        None => print!("{}", output.text),
    }
    if output.pass {
        ExitCode::SUCCESS
    } else {
        eprintln!("verification failed");
        ExitCode::from(VERIFICATION_FAILED)
    }
}
