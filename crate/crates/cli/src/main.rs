mod args;
mod commands;
mod config;
mod error;
mod output;

use std::process::ExitCode;

use clap::Parser;

use crate::args::{Cli, Command};
use crate::config::Resolver;
use crate::error::{CliError, CliResult};

fn run(cli: Cli) -> CliResult<()> {
    let cfg = Resolver::load(cli.common.config.as_deref())?;
    if let Some(n) = cfg.get(cli.common.threads, "threads")? {
        if n == 0 {
            return Err(CliError::usage("--threads must be at least 1"));
        }
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .map_err(|e| CliError::usage(format!("cannot size the thread pool: {e}")))?;
    }
    let common = &cli.common;
    let table = match &cli.command {
        Command::Stability(a) => commands::stability::run(common, a, &cfg)?,
        Command::Converge(a) => commands::converge::run(common, a, &cfg)?,
        Command::Price(a) => commands::price::run(common, a, &cfg)?,
        Command::Solve(a) => commands::solve::run(common, a, &cfg)?,
        Command::ModeDecay(a) => commands::mode_decay::run(common, a, &cfg)?,
    };
    let out = cfg.get(common.out.clone(), "out")?;
    let json = cfg.flag(common.json, "json")?;
    cfg.get::<String>(None, "config")?;
    cfg.finish()?;
    table.emit(out.as_deref(), json)?;
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
