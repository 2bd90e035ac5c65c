mod args;
mod commands;
mod input;
mod output;

use std::process::ExitCode;

use clap::{CommandFactory, Parser};
use serde_json::json;

use args::{Cli, Command};
use commands::Ctx;
use output::ManifestBuilder;

/// Failure of a command: bad invocation (exit 2) or runtime error (exit 1).
#[derive(Debug)]
pub enum CliError {
    Usage(String),
    Run(binfar_core::Error),
}

impl From<binfar_core::Error> for CliError {
    fn from(e: binfar_core::Error) -> Self {
        CliError::Run(e)
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Run(e.into())
    }
}

fn command_name(cmd: &Command) -> &'static str {
    match cmd {
        Command::Ingest(_) => "ingest",
        Command::SelectFactors(_) => "select-factors",
        Command::Fit(_) => "fit",
        Command::Bootstrap(_) => "bootstrap",
        Command::Simulate(_) => "simulate",
        Command::Backtest(_) => "backtest",
        Command::Roc(_) => "roc",
    }
}

fn init_logging(cli: &Cli) {
    let level = match (cli.quiet, cli.verbose) {
        (true, _) => "error",
        (false, 0) => "warn",
        (false, 1) => "info",
        _ => "debug",
    };
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or(level))
        .target(env_logger::Target::Stderr)
        .init();
}

fn run(cli: &Cli, argv: Vec<String>) -> Result<(), CliError> {
    if let Some(n) = cli.threads {
        if n == 0 {
            return Err(CliError::Usage("--threads must be at least 1".into()));
        }
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .map_err(|e| CliError::Run(binfar_core::Error::InvalidArgument(e.to_string())))?;
    }
    let mut ctx = Ctx {
        format: cli.format,
        manifest: ManifestBuilder::new(command_name(&cli.command), argv, rayon::current_num_threads()),
    };
    commands::dispatch(&cli.command, &mut ctx)
}

fn main() -> ExitCode {
    let argv: Vec<String> = std::env::args().collect();
    let cli = match Cli::try_parse_from(&argv) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { ExitCode::from(2) } else { ExitCode::SUCCESS };
        }
    };
    init_logging(&cli);
    match run(&cli, argv) {
        Ok(()) => ExitCode::SUCCESS,
        Err(CliError::Usage(msg)) => {
            let _ = Cli::command().error(clap::error::ErrorKind::ArgumentConflict, msg).print();
            ExitCode::from(2)
        }
        Err(CliError::Run(e)) => {
            eprintln!("{}", json!({ "error": e.kind(), "message": e.to_string() }));
            ExitCode::from(1)
        }
    }
}
