//! Run manifests and replay checks. Every output file is listed with its
//! SHA-256; timestamps and thread counts are recorded but never digested.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::output::sha256_hex;
use crate::{CliError, Result};

pub const MANIFEST_FILE: &str = "manifest.json";

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct SeedTask {
    pub task: String,
    pub seed: u64,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct OutputDigest {
    pub file: String,
    pub sha256: String,
    pub bytes: u64,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct RunManifest {
    /// SHA-256 of the config re-serialized in canonical form.
    pub config_hash: String,
    pub code_version: String,
    pub kind: String,
    /// Unix seconds.
    pub started_at: u64,
    pub finished_at: u64,
    pub seed_offset: u64,
    pub threads: usize,
    pub seed_ledger: Vec<SeedTask>,
    /// In write order.
    pub outputs: Vec<OutputDigest>,
}

impl RunManifest {
    /// Digests of the outputs only; equal across replays of the same config.
    pub fn output_digests(&self) -> Vec<(&str, &str)> {
        self.outputs.iter().map(|o| (o.file.as_str(), o.sha256.as_str())).collect()
    }
}

pub fn code_version() -> String {
    format!("ergolab {}", env!("CARGO_PKG_VERSION"))
}

pub fn read_manifest(dir: &Path) -> Result<RunManifest> {
    if !dir.is_dir() {
        return Err(CliError::Replay(format!("missing output directory {}", dir.display())));
    }
    let path = dir.join(MANIFEST_FILE);
    let text = std::fs::read_to_string(&path)
        .map_err(|_| CliError::Replay(format!("missing manifest {}", path.display())))?;
    serde_json::from_str(&text).map_err(|e| CliError::Replay(format!("unreadable manifest {}: {e}", path.display())))
}

/// Recomputes every listed digest; fails listing missing and changed files.
pub fn replay_check(manifest: &RunManifest, dir: &Path) -> Result<()> {
    if !dir.is_dir() {
        return Err(CliError::Replay(format!("missing output directory {}", dir.display())));
    }
    let mut missing = Vec::new();
    let mut changed = Vec::new();
    for out in &manifest.outputs {
        match std::fs::read(dir.join(&out.file)) {
            Err(_) => missing.push(out.file.clone()),
            Ok(bytes) if sha256_hex(&bytes) != out.sha256 || bytes.len() as u64 != out.bytes => {
                changed.push(out.file.clone())
            }
            Ok(_) => {}
        }
    }
    let mut problems = Vec::new();
    if !missing.is_empty() {
        problems.push(format!("missing: {}", missing.join(", ")));
    }
    if !changed.is_empty() {
        problems.push(format!("digest mismatch: {}", changed.join(", ")));
    }
    if problems.is_empty() {
        Ok(())
    } else {
        Err(CliError::Replay(problems.join("; ")))
    }
}
