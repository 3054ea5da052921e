//! Provenance record attached to every artifact the CLI writes.

use crate::error::{Error, Result};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use std::collections::BTreeMap;
use std::path::Path;
use std::time::{Instant, SystemTime, UNIX_EPOCH};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub tool: String,
    pub tool_version: String,
    pub command: String,
    /// Fully resolved options (defaults filled in).
    pub config: serde_json::Value,
    #[serde(default)]
    pub seeds: BTreeMap<String, u64>,
    /// Input path → SHA-256 hex digest.
    #[serde(default)]
    pub input_digests: BTreeMap<String, String>,
    pub threads: usize,
    /// Seconds since the Unix epoch at start.
    pub started_at: u64,
    pub wall_time_s: f64,
}

/// Collects manifest fields while a command runs.
#[derive(Debug)]
pub struct ManifestBuilder {
    manifest: RunManifest,
    start: Instant,
}

impl ManifestBuilder {
    pub fn new(command: impl Into<String>, config: serde_json::Value, threads: usize) -> Self {
        let started_at = SystemTime::now()
            .duration_since(UNIX_EPOCH)
            .map(|d| d.as_secs())
            .unwrap_or(0);
        ManifestBuilder {
            manifest: RunManifest {
                tool: env!("CARGO_PKG_NAME").to_string(),
                tool_version: env!("CARGO_PKG_VERSION").to_string(),
                command: command.into(),
                config,
                seeds: BTreeMap::new(),
                input_digests: BTreeMap::new(),
                threads,
                started_at,
                wall_time_s: 0.0,
            },
            start: Instant::now(),
        }
    }

    pub fn seed(&mut self, name: &str, seed: u64) -> &mut Self {
        self.manifest.seeds.insert(name.to_string(), seed);
        self
    }

    /// Records the digest of an input file.
    pub fn input(&mut self, path: &Path) -> Result<&mut Self> {
        let bytes = std::fs::read(path).map_err(|source| Error::Io {
            path: path.to_path_buf(),
            source,
        })?;
        self.manifest
            .input_digests
            .insert(path.display().to_string(), sha256_hex(&bytes));
        Ok(self)
    }

    /// Snapshot with the elapsed wall time filled in.
    pub fn finish(&self) -> RunManifest {
        let mut m = self.manifest.clone();
        m.wall_time_s = self.start.elapsed().as_secs_f64();
        m
    }
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    Sha256::digest(bytes).iter().map(|b| format!("{b:02x}")).collect()
}

/// `<out>.manifest.json` next to an artifact.
pub fn sidecar_path(out: &Path) -> std::path::PathBuf {
    let mut s = out.as_os_str().to_os_string();
    s.push(".manifest.json");
    s.into()
}
