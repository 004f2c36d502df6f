//! Run manifests: everything needed to reproduce a command's outputs.

use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::args::Command;
use crate::error::CliError;
use crate::output::{json_bytes, write_atomic};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub command: String,
    pub tool_version: String,
    pub inputs: Vec<PathBuf>,
    pub seed: Option<u64>,
    pub rng: String,
    /// Effective flag values, replayable as-is.
    pub invocation: Command,
    pub outputs: Vec<PathBuf>,
}

impl RunManifest {
    pub fn new(invocation: &Command, outputs: Vec<PathBuf>) -> Self {
        let mut inv = invocation.clone();
        Self {
            command: invocation.name().to_string(),
            tool_version: env!("CARGO_PKG_VERSION").to_string(),
            inputs: inv.inputs_mut().into_iter().map(|p| p.clone()).collect(),
            seed: invocation.seed(),
            rng: chartpulse::simulation::RNG_ID.to_string(),
            invocation: inv,
            outputs,
        }
    }

    pub fn write(&self, path: &Path) -> Result<(), CliError> {
        write_atomic(path, &json_bytes(self))
    }

    pub fn read(path: &Path) -> Result<Self, CliError> {
        let text = fs::read_to_string(path).map_err(|e| CliError::data(path.display(), e))?;
        let manifest: RunManifest =
            serde_json::from_str(&text).map_err(|e| CliError::data(path.display(), e))?;
        if manifest.tool_version != env!("CARGO_PKG_VERSION") {
            eprintln!(
                "warning: manifest written by version {}, replaying with {}",
                manifest.tool_version,
                env!("CARGO_PKG_VERSION")
            );
        }
        Ok(manifest)
    }
}
