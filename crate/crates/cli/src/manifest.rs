use std::path::{Path, PathBuf};
use std::time::{SystemTime, UNIX_EPOCH};

use plsr_core::formats::{read_to_string, write_json};
use serde::{Deserialize, Serialize};

use crate::args::Command;
use crate::error::{CliError, CliResult};

pub const MANIFEST_FORMAT: &str = "plsr-run";

/// Record of one command execution: the fully resolved arguments, what was
/// read and written, and when.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RunManifest {
    pub format: String,
    pub tool_version: String,
    pub command: Command,
    pub seed: Option<u64>,
    pub inputs: Vec<PathBuf>,
    pub outputs: Vec<PathBuf>,
    pub started_unix_s: f64,
    pub finished_unix_s: f64,
}

pub fn unix_now() -> f64 {
    SystemTime::now()
        .duration_since(UNIX_EPOCH)
        .map(|d| d.as_secs_f64())
        .unwrap_or(0.0)
}

impl RunManifest {
    pub fn new(command: &Command, seed: Option<u64>, started_unix_s: f64) -> Self {
        Self {
            format: MANIFEST_FORMAT.to_string(),
            tool_version: env!("CARGO_PKG_VERSION").to_string(),
            command: command.clone(),
            seed,
            inputs: Vec::new(),
            outputs: Vec::new(),
            started_unix_s,
            finished_unix_s: started_unix_s,
        }
    }

    pub fn write(mut self, path: &Path) -> CliResult<()> {
        self.finished_unix_s = unix_now();
        write_json(path, &self)?;
        Ok(())
    }

    pub fn read(path: &Path) -> CliResult<Self> {
        let text = read_to_string(path)?;
        let manifest: RunManifest = serde_json::from_str(&text)
            .map_err(|e| CliError::Data(format!("{}: {e}", path.display())))?;
        if manifest.format != MANIFEST_FORMAT {
            return Err(CliError::Data(format!(
                "{}: not a run manifest (format {:?})",
                path.display(),
                manifest.format
            )));
        }
        Ok(manifest)
    }
}
