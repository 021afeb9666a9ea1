use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use shc_core::Dataset;

use crate::args::Command;
use crate::error::CliError;

/// Everything needed to reproduce a run and check that it did.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RunManifest {
    pub tool: String,
    pub command: Command,
    pub seed: u64,
    pub dataset: Fingerprint,
    pub outputs: Vec<OutputRecord>,
    pub wall_time_secs: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Fingerprint {
    pub name: String,
    pub n: usize,
    pub m: usize,
    pub labelled: bool,
    pub sha256: String,
}

impl Fingerprint {
    /// Hash over the shape, the coordinates as little-endian `f64` and the
    /// labels as little-endian `u64`.
    pub fn of(data: &Dataset) -> Self {
        let mut h = Sha256::new();
        h.update((data.n() as u64).to_le_bytes());
        h.update((data.m() as u64).to_le_bytes());
        for c in data.coords() {
            h.update(c.to_le_bytes());
        }
        if let Some(labels) = data.labels() {
            for &l in labels {
                h.update((l as u64).to_le_bytes());
            }
        }
        Self {
            name: data.name().to_string(),
            n: data.n(),
            m: data.m(),
            labelled: data.labels().is_some(),
            sha256: hex::encode(h.finalize()),
        }
    }
}

/// One produced output; `path` is `None` for text printed to stdout.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OutputRecord {
    pub role: String,
    pub path: Option<PathBuf>,
    pub bytes: usize,
    pub sha256: String,
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

impl RunManifest {
    pub fn read(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
        Ok(serde_json::from_str(&text)?)
    }

    pub fn write(&self, path: &Path) -> Result<(), CliError> {
        let mut text = serde_json::to_string_pretty(self)?;
        text.push('\n');
        std::fs::write(path, text).map_err(|e| CliError::io(path, e))
    }
}
