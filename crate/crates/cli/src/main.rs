mod args;
mod commands;
mod provenance;

use std::process::ExitCode;

use clap::Parser;
use coherence_core::Error;

use args::{Cli, Command};

/// Failure of a command, mapped onto the process exit code.
#[derive(Debug)]
pub enum CliError {
    Core(Error),
    Usage(String),
    NotConverged(String),
}

impl From<Error> for CliError {
    fn from(e: Error) -> Self {
        CliError::Core(e)
    }
}

impl std::fmt::Display for CliError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            CliError::Core(e) => write!(f, "{e}"),
            CliError::Usage(msg) => write!(f, "{msg}"),
            CliError::NotConverged(msg) => write!(f, "fit did not converge: {msg}"),
        }
    }
}

impl CliError {
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Usage(_) => 2,
            CliError::NotConverged(_) => 4,
            CliError::Core(e) => match e {
                Error::Io { .. } => 1,
                Error::Config { .. } | Error::ResourceGuard(_) => 2,
                Error::DegenerateFit(_) | Error::NoMaximum | Error::Integrator(_) => 4,
                _ => 3,
            },
        }
    }
}

pub type CliResult<T> = std::result::Result<T, CliError>;

fn init_threads(flag: Option<usize>) -> CliResult<()> {
    let n = match flag {
        Some(n) => Some(n),
        None => match std::env::var("COHERENCE_THREADS") {
            Ok(v) if !v.trim().is_empty() => Some(v.trim().parse::<usize>().map_err(|_| {
                CliError::Usage(format!(
                    "COHERENCE_THREADS must be a positive integer, got `{v}`"
                ))
            })?),
            _ => None,
        },
    };
    if let Some(n) = n {
        if n == 0 {
            return Err(CliError::Usage("thread count must be positive".into()));
        }
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .map_err(|e| CliError::Usage(format!("cannot start thread pool: {e}")))?;
    }
    Ok(())
}

fn run(cli: Cli) -> CliResult<()> {
    init_threads(cli.threads)?;
    match cli.command {
        Command::Simulate(a) => commands::simulate(&a),
        Command::Correlate(a) => commands::correlate(&a),
        Command::Fit(a) => commands::fit(&a),
        Command::Report(a) => commands::report(&a),
    }
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
