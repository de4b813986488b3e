//! The run manifest: a ledger of what each stage consumed and produced.
//!
//! Every stage records the digests of its inputs and outputs plus the config
//! hash it ran under. That makes reruns cheap (matching work is skipped with
//! a "reused" status) and tampering loud (an artifact whose bytes no longer
//! match its recorded digest stops the run instead of corrupting it).
//!
//! This file is the one place in the pipeline where wall-clock timestamps are
//! allowed. Artifacts proper stay timestamp-free so identical runs stay
//! byte-identical.

use eib_core::checkpoint::sha256_hex;
use eib_core::error::{CoreError, Result};
use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;
use std::path::Path;
use std::time::{SystemTime, UNIX_EPOCH};

pub const RUN_MANIFEST_SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StageEntry {
    /// "completed" for fresh work, "reused" when a previous result stood.
    pub status: String,
    /// Config digest the stage ran under.
    pub config_digest: String,
    pub started_unix_ms: u64,
    pub finished_unix_ms: u64,
    /// Input path (relative to the run dir where possible) to sha256.
    pub inputs: BTreeMap<String, String>,
    /// Output path to sha256. Every file a stage writes appears here.
    pub outputs: BTreeMap<String, String>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunManifest {
    pub schema_version: u32,
    /// Digest of the most recent effective config.
    pub config_digest: String,
    /// Crate versions that produced the artifacts.
    pub versions: BTreeMap<String, String>,
    pub stages: BTreeMap<String, StageEntry>,
}

impl RunManifest {
    pub fn new(config_digest: String) -> Self {
        let mut versions = BTreeMap::new();
        versions.insert("eib-cli".into(), env!("CARGO_PKG_VERSION").into());
        versions.insert("eib-core".into(), eib_core::VERSION.into());
        versions.insert("eib-metrics".into(), eib_metrics::VERSION.into());
        versions.insert("eib-mixexpl".into(), eib_mixexpl::VERSION.into());
        versions.insert("eib-prompt".into(), eib_prompt::VERSION.into());
        Self {
            schema_version: RUN_MANIFEST_SCHEMA_VERSION,
            config_digest,
            versions,
            stages: BTreeMap::new(),
        }
    }

    /// Loads the manifest if present, otherwise starts a fresh one. The
    /// stored top-level digest is replaced by the current config's; per-stage
    /// digests keep their original values so reuse checks still work.
    pub fn load_or_new(path: &Path, config_digest: &str) -> Result<Self> {
        if !path.exists() {
            return Ok(Self::new(config_digest.to_string()));
        }
        let text = std::fs::read_to_string(path)?;
        let mut manifest: RunManifest = serde_json::from_str(&text).map_err(|e| {
            CoreError::Config(format!("unreadable run manifest {}: {e}", path.display()))
        })?;
        if manifest.schema_version != RUN_MANIFEST_SCHEMA_VERSION {
            return Err(CoreError::Config(format!(
                "run manifest schema {} unsupported (expected {})",
                manifest.schema_version, RUN_MANIFEST_SCHEMA_VERSION
            )));
        }
        manifest.config_digest = config_digest.to_string();
        Ok(manifest)
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        if let Some(parent) = path.parent() {
            std::fs::create_dir_all(parent)?;
        }
        let mut bytes = serde_json::to_vec_pretty(self)?;
        bytes.push(b'\n');
        std::fs::write(path, bytes)?;
        Ok(())
    }
}

pub fn now_unix_ms() -> u64 {
    SystemTime::now()
        .duration_since(UNIX_EPOCH)
        .map(|d| d.as_millis() as u64)
        .unwrap_or(0)
}

/// Digest of one file's bytes.
pub fn digest_file(path: &Path) -> Result<String> {
    if !path.exists() {
        return Err(CoreError::MissingInput(path.to_path_buf()));
    }
    let bytes = std::fs::read(path)?;
    Ok(sha256_hex(&bytes))
}

/// Digests a list of files keyed by their path rendered relative to `root`
/// when possible, absolute otherwise.
pub fn digest_files(root: &Path, paths: &[std::path::PathBuf]) -> Result<BTreeMap<String, String>> {
    let mut out = BTreeMap::new();
    for path in paths {
        let key = path
            .strip_prefix(root)
            .map(|p| p.to_string_lossy().into_owned())
            .unwrap_or_else(|_| path.to_string_lossy().into_owned());
        out.insert(key, digest_file(path)?);
    }
    Ok(out)
}
