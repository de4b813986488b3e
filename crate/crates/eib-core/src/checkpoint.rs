//! Checkpoints are directories with four files:
//!
//! - `weights.bin`: all parameters. Layout: magic `EIBW`, u32 version, u64
//!   entry count, then per entry a u32 name length, the UTF-8 name, u32 rows,
//!   u32 cols, u8 trainable flag, and rows*cols f64 little-endian values.
//! - `config.json`: model and train configuration snapshot.
//! - `vocab.json`: the closed vocabulary.
//! - `manifest.json`: schema version, sha-256 digests of the other files,
//!   parameter count, and the best validation breakdown if one exists.
//!
//! Loading verifies every digest before touching the payload, so a tampered
//! or truncated file fails with a digest error rather than garbage weights.
//! Values travel as f64 regardless of the in-memory scalar type; an f64
//! round trip is bit-exact.

use crate::error::{CoreError, Result};
use crate::loss::LossBreakdown;
use crate::model::{EibModel, ModelConfig};
use crate::tensor::Tensor;
use crate::tokenizer::Vocab;
use crate::train::TrainConfig;
use crate::Scalar;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use std::collections::BTreeMap;
use std::io::Read;
use std::path::Path;

const WEIGHTS_MAGIC: &[u8; 4] = b"EIBW";
const WEIGHTS_VERSION: u32 = 1;
pub const MANIFEST_SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CheckpointManifest {
    pub schema_version: u32,
    pub param_count: usize,
    pub trainable_param_count: usize,
    pub files: BTreeMap<String, String>,
    pub last_validation: Option<LossBreakdown>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct ConfigSnapshot {
    schema_version: u32,
    model: ModelConfig,
    train: TrainConfig,
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    let mut h = Sha256::new();
    h.update(bytes);
    format!("{:x}", h.finalize())
}

pub fn save_checkpoint<F: Scalar>(
    dir: &Path,
    model: &EibModel<F>,
    train_cfg: &TrainConfig,
    last_validation: Option<&LossBreakdown>,
) -> Result<()> {
    std::fs::create_dir_all(dir)?;

    let weights = encode_weights(model);
    let config = serde_json::to_vec_pretty(&ConfigSnapshot {
        schema_version: MANIFEST_SCHEMA_VERSION,
        model: model.cfg.clone(),
        train: train_cfg.clone(),
    })?;
    let vocab = serde_json::to_vec_pretty(&model.vocab)?;

    let mut files = BTreeMap::new();
    for (name, bytes) in [
        ("weights.bin", &weights),
        ("config.json", &config),
        ("vocab.json", &vocab),
    ] {
        std::fs::write(dir.join(name), bytes)?;
        files.insert(name.to_string(), sha256_hex(bytes));
    }
    let manifest = CheckpointManifest {
        schema_version: MANIFEST_SCHEMA_VERSION,
        param_count: model.params.count(false),
        trainable_param_count: model.params.count(true),
        files,
        last_validation: last_validation.copied(),
    };
    std::fs::write(
        dir.join("manifest.json"),
        serde_json::to_vec_pretty(&manifest)?,
    )?;
    Ok(())
}

pub fn read_manifest(dir: &Path) -> Result<CheckpointManifest> {
    let path = dir.join("manifest.json");
    if !path.exists() {
        return Err(CoreError::MissingInput(path));
    }
    let manifest: CheckpointManifest = serde_json::from_slice(&std::fs::read(&path)?)?;
    if manifest.schema_version != MANIFEST_SCHEMA_VERSION {
        return Err(CoreError::Checkpoint(format!(
            "unsupported manifest schema version {}",
            manifest.schema_version
        )));
    }
    Ok(manifest)
}

/// Reads the manifest and verifies the digest of every listed file.
pub fn verify_checkpoint(dir: &Path) -> Result<CheckpointManifest> {
    let manifest = read_manifest(dir)?;
    for (name, expected) in &manifest.files {
        let path = dir.join(name);
        if !path.exists() {
            return Err(CoreError::MissingInput(path));
        }
        let actual = sha256_hex(&std::fs::read(&path)?);
        if &actual != expected {
            return Err(CoreError::DigestMismatch {
                path: path.display().to_string(),
                expected: expected.clone(),
                actual,
            });
        }
    }
    Ok(manifest)
}

pub fn load_checkpoint<F: Scalar>(
    dir: &Path,
) -> Result<(EibModel<F>, TrainConfig, CheckpointManifest)> {
    let manifest = verify_checkpoint(dir)?;
    let snapshot: ConfigSnapshot =
        serde_json::from_slice(&std::fs::read(dir.join("config.json"))?)?;
    let vocab: Vocab = serde_json::from_slice(&std::fs::read(dir.join("vocab.json"))?)?;
    // Seed zero here is irrelevant: every parameter is overwritten below.
    let mut model = EibModel::<F>::new(snapshot.model, vocab, 0)?;
    decode_weights(&std::fs::read(dir.join("weights.bin"))?, &mut model)?;
    Ok((model, snapshot.train, manifest))
}

fn encode_weights<F: Scalar>(model: &EibModel<F>) -> Vec<u8> {
    let mut out = Vec::new();
    out.extend_from_slice(WEIGHTS_MAGIC);
    out.extend_from_slice(&WEIGHTS_VERSION.to_le_bytes());
    let entries: Vec<_> = model.params.entries().collect();
    out.extend_from_slice(&(entries.len() as u64).to_le_bytes());
    for e in entries {
        let name = e.name.as_bytes();
        out.extend_from_slice(&(name.len() as u32).to_le_bytes());
        out.extend_from_slice(name);
        out.extend_from_slice(&(e.value.rows() as u32).to_le_bytes());
        out.extend_from_slice(&(e.value.cols() as u32).to_le_bytes());
        out.push(u8::from(e.trainable));
        for v in e.value.data() {
            out.extend_from_slice(&v.to_f64().expect("weight as f64").to_le_bytes());
        }
    }
    out
}

fn decode_weights<F: Scalar>(bytes: &[u8], model: &mut EibModel<F>) -> Result<()> {
    let bad = |msg: &str| CoreError::Checkpoint(format!("weights.bin: {msg}"));
    let mut r = bytes;
    let mut take = |n: usize| -> Result<Vec<u8>> {
        if r.len() < n {
            return Err(bad("unexpected end of file"));
        }
        let mut buf = vec![0u8; n];
        r.read_exact(&mut buf)?;
        Ok(buf)
    };
    if take(4)? != WEIGHTS_MAGIC {
        return Err(bad("bad magic"));
    }
    let version = u32::from_le_bytes(take(4)?.try_into().unwrap());
    if version != WEIGHTS_VERSION {
        return Err(bad(&format!("unsupported version {version}")));
    }
    let count = u64::from_le_bytes(take(8)?.try_into().unwrap()) as usize;

    let mut loaded: BTreeMap<String, Tensor<F>> = BTreeMap::new();
    for _ in 0..count {
        let name_len = u32::from_le_bytes(take(4)?.try_into().unwrap()) as usize;
        let name = String::from_utf8(take(name_len)?).map_err(|_| bad("non-utf8 name"))?;
        let rows = u32::from_le_bytes(take(4)?.try_into().unwrap()) as usize;
        let cols = u32::from_le_bytes(take(4)?.try_into().unwrap()) as usize;
        let _trainable = take(1)?[0];
        let raw = take(rows * cols * 8)?;
        let data: Vec<F> = raw
            .chunks_exact(8)
            .map(|c| crate::sc(f64::from_le_bytes(c.try_into().unwrap())))
            .collect();
        loaded.insert(name, Tensor::new(rows, cols, data));
    }
    if !r.is_empty() {
        return Err(bad("trailing bytes"));
    }

    let names: Vec<String> = model.params.entries().map(|e| e.name.clone()).collect();
    if names.len() != loaded.len() {
        return Err(bad(&format!(
            "expected {} parameters, found {}",
            names.len(),
            loaded.len()
        )));
    }
    for name in names {
        let id = model.params.by_name(&name).expect("name from iteration");
        let tensor = loaded
            .remove(&name)
            .ok_or_else(|| bad(&format!("missing parameter {name}")))?;
        if tensor.shape() != model.params.value(id).shape() {
            return Err(bad(&format!("shape mismatch for {name}")));
        }
        *model.params.value_mut(id) = tensor;
    }
    Ok(())
}
