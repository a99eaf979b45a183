//! Command-line front end: reads a JSON config describing a Young tuple and
//! writes JSON reports, CSV boundary samples and SVG figures.
//!
//! Exit codes: 0 when every checked invariant holds, 1 for usage and config
//! errors, 2 when a computation fails or an invariant is violated.

pub mod commands;
pub mod config;
pub mod render;

use std::ffi::OsString;
use std::io::Write;
use std::path::PathBuf;

use clap::Parser;

pub use commands::{execute, Command, Output};
pub use config::{load, LabConfig, LoadedConfig};

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),
    #[error("{0}")]
    Config(String),
    #[error("{0}")]
    Unsupported(String),
    #[error("{0}")]
    Io(String),
    #[error(transparent)]
    Compute(#[from] orlicz_capacity::Error),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Compute(_) => 2,
            _ => 1,
        }
    }
}

#[derive(Debug, Parser)]
#[command(name = "lab", version, about = "Capacities, volumes and ball embeddings for Orlicz-ball products")]
pub struct Cli {
    #[arg(value_enum)]
    pub command: Command,
    /// JSON config file.
    #[arg(long)]
    pub config: PathBuf,
    /// Output path; the report goes to stdout when absent.
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Overrides the seed in the config.
    #[arg(long)]
    pub seed: Option<u64>,
}

/// Parses `args`, runs the command and returns the process exit code.
pub fn run<I, T>(args: I, stdout: &mut dyn Write, stderr: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let text = e.render().to_string();
            let _ = if code == 0 {
                stdout.write_all(text.as_bytes())
            } else {
                stderr.write_all(text.as_bytes())
            };
            return code;
        }
    };
    match run_cli(&cli, stdout) {
        Ok(true) => 0,
        Ok(false) => {
            let _ = writeln!(stderr, "lab {}: invariant check failed", cli.command.name());
            2
        }
        Err(e) => {
            let _ = writeln!(stderr, "lab {}: {e}", cli.command.name());
            e.exit_code()
        }
    }
}

fn run_cli(cli: &Cli, stdout: &mut dyn Write) -> Result<bool, CliError> {
    let cfg = load(&cli.config)?;
    let seed = cli.seed.unwrap_or(cfg.config.seed);
    let out = cli.out.clone().or_else(|| cfg.config.out.clone());
    let output = execute(cli.command, &cfg, seed, out.as_deref())?;

    let write = |path: &PathBuf, text: &str| {
        std::fs::write(path, text).map_err(|e| CliError::Io(format!("cannot write {}: {e}", path.display())))
    };
    for (path, text) in &output.files {
        write(path, text)?;
    }
    match (&out, cli.command) {
        (Some(path), c) if c != Command::Plot => write(path, &output.json)?,
        _ => stdout
            .write_all(output.json.as_bytes())
            .map_err(|e| CliError::Io(format!("cannot write report: {e}")))?,
    }
    Ok(output.pass)
}
