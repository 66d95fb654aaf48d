mod args;
mod commands;
mod config;
mod failure;
mod outputs;

use std::process::ExitCode;

use clap::Parser;

use failure::{Failure, Outcome};

/// Caps rayon's worker count from `THZ_THREADS`.
fn configure_threads() -> Outcome {
    let Ok(value) = std::env::var("THZ_THREADS") else {
        return Ok(());
    };
    let n: usize = value
        .trim()
        .parse()
        .ok()
        .filter(|&n| n > 0)
        .ok_or_else(|| Failure::usage(format!("THZ_THREADS must be a positive integer, got `{value}`")))?;
    rayon::ThreadPoolBuilder::new()
        .num_threads(n)
        .build_global()
        .map_err(|e| Failure::usage(format!("THZ_THREADS: {e}")))
}

fn main() -> ExitCode {
    let cli = args::Cli::parse();
    match configure_threads().and_then(|()| commands::run(cli)) {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("error: {f}");
            ExitCode::from(f.code)
        }
    }
}
