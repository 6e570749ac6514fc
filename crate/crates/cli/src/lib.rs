//! `icy` command-line driver.
//!
//! Every command writes a JSON manifest next to its outputs that records
//! the full effective invocation; `icy replay` reruns it.
//!
//! Exit codes: 0 success, 2 usage or configuration error, 3 generation or
//! benchmark failure.

pub mod args;
mod commands;
pub mod manifest;

use thiserror::Error;

pub use args::{Cli, Command};
pub use commands::execute;
pub use manifest::{manifest_path, Manifest};

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),
    #[error("{0:#}")]
    Failure(anyhow::Error),
}

impl CliError {
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Usage(_) => 2,
            CliError::Failure(_) => 3,
        }
    }
}

pub type Result<T> = std::result::Result<T, CliError>;

pub fn run(cli: Cli) -> Result<()> {
    if cli.rng_id != icy_core::rng::RNG_ID {
        return Err(CliError::Usage(format!(
            "unsupported rng id `{}` (this build provides `{}`)",
            cli.rng_id,
            icy_core::rng::RNG_ID
        )));
    }
    execute(cli.command)
}
