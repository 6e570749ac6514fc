use std::fs;
use std::path::{Path, PathBuf};

use anyhow::Context;
use serde::{Deserialize, Serialize};

use crate::args::Command;
use crate::{CliError, Result};

pub const MANIFEST_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Manifest {
    pub format_version: u32,
    pub icy_version: String,
    pub rng_id: String,
    /// Effective settings, defaults included.
    pub invocation: Command,
    pub outputs: Vec<PathBuf>,
}

/// `<out>/manifest.json` for directory outputs, `<out>.manifest.json` otherwise.
pub fn manifest_path(cmd: &Command) -> PathBuf {
    match cmd {
        Command::Bench(a) | Command::Fixedstep(a) => a.out.join("manifest.json"),
        Command::Gen(a) => sibling(&a.out),
        Command::Metrics(a) => sibling(&a.out),
        Command::Gradcheck(a) => sibling(&a.out),
        Command::ExportGame(a) => sibling(&a.out),
        Command::Replay(a) => a.manifest.clone(),
    }
}

fn sibling(out: &Path) -> PathBuf {
    let mut name = out.file_name().unwrap_or_default().to_os_string();
    name.push(".manifest.json");
    out.with_file_name(name)
}

impl Manifest {
    pub fn new(invocation: Command, outputs: Vec<PathBuf>) -> Self {
        Manifest {
            format_version: MANIFEST_VERSION,
            icy_version: env!("CARGO_PKG_VERSION").to_string(),
            rng_id: icy_core::rng::RNG_ID.to_string(),
            invocation,
            outputs,
        }
    }

    pub fn write(&self) -> Result<PathBuf> {
        let path = manifest_path(&self.invocation);
        let text = serde_json::to_string_pretty(self).expect("manifest serializes");
        fs::write(&path, text + "\n")
            .with_context(|| format!("writing {}", path.display()))
            .map_err(CliError::Failure)?;
        Ok(path)
    }

    pub fn load(path: &Path) -> Result<Manifest> {
        let text = fs::read_to_string(path)
            .map_err(|e| CliError::Usage(format!("cannot read manifest {}: {e}", path.display())))?;
        serde_json::from_str(&text).map_err(|e| CliError::Usage(format!("bad manifest {}: {e}", path.display())))
    }
}
