//! Pipeline configuration: one TOML file describing every stage of a run.
//!
//! Resolution order for any setting is command-line flag, then config file,
//! then built-in default. The effective config (after flags are applied) is
//! what gets hashed into the run manifest, so two invocations that resolve to
//! the same settings share stage results regardless of how they were spelled.

use eib_core::decode::DecodeConfig;
use eib_core::error::{CoreError, Result};
use eib_core::lm::LmShape;
use eib_core::model::ModelConfig;
use eib_core::train::TrainConfig;
use serde::{Deserialize, Serialize};
use std::path::{Path, PathBuf};

fn default_seed() -> u64 {
    42
}

fn default_template() -> String {
    "qa_because".into()
}

fn default_backend() -> String {
    "fixture".into()
}

fn default_model() -> ModelConfig {
    let lm = LmShape {
        layers: 2,
        d_model: 32,
        n_heads: 4,
        ff_mult: 2,
        max_seq_len: 128,
    };
    ModelConfig {
        encoder: lm.clone(),
        preservation: lm.clone(),
        generator: lm,
        bottleneck_k: 16,
        bottleneck_hidden: 32,
        encoder_max_len: 64,
        templates: Default::default(),
    }
}

pub const BACKEND_NAMES: [&str; 3] = ["fixture", "local", "remote"];

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PipelineConfig {
    /// Root seed for the whole run. Every stage derives its own streams.
    #[serde(default = "default_seed")]
    pub seed: u64,
    /// Where run artifacts go. The --out-dir flag takes precedence.
    #[serde(default)]
    pub out_dir: Option<PathBuf>,
    /// Source explanation files for build-data, JSONL with one
    /// sample/explanation pair per line.
    #[serde(default)]
    pub sources: Vec<PathBuf>,
    /// Optional train/valid/test ratios. Defaults to the corpus layer's plan.
    #[serde(default)]
    pub ratios: Option<[f64; 3]>,
    /// Directory with replacement lexicon files; bundled lists when unset.
    #[serde(default)]
    pub lexicon_dir: Option<PathBuf>,
    /// Built-in prompt template name for the prompt stage.
    #[serde(default = "default_template")]
    pub template: String,
    /// Candidate backend: "fixture", "local" or "remote".
    #[serde(default = "default_backend")]
    pub backend: String,
    /// Replay file for the fixture backend.
    #[serde(default)]
    pub prompt_fixtures: Option<PathBuf>,
    /// Optional JSONL sidecar of external judge scores, folded into the
    /// evaluation report by id.
    #[serde(default)]
    pub external_scores: Option<PathBuf>,
    #[serde(default = "default_model")]
    pub model: ModelConfig,
    #[serde(default)]
    pub train: TrainConfig,
    #[serde(default)]
    pub decode: DecodeConfig,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        Self {
            seed: default_seed(),
            out_dir: None,
            sources: Vec::new(),
            ratios: None,
            lexicon_dir: None,
            template: default_template(),
            backend: default_backend(),
            prompt_fixtures: None,
            external_scores: None,
            model: default_model(),
            train: TrainConfig::default(),
            decode: DecodeConfig::default(),
        }
    }
}

impl PipelineConfig {
    /// Reads a TOML config file. Unknown keys are rejected so typos fail
    /// loudly instead of silently falling back to defaults.
    pub fn load(path: &Path) -> Result<Self> {
        if !path.exists() {
            return Err(CoreError::MissingInput(path.to_path_buf()));
        }
        let text = std::fs::read_to_string(path)?;
        let cfg: PipelineConfig = toml::from_str(&text)
            .map_err(|e| CoreError::Config(format!("{}: {e}", path.display())))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        if !eib_prompt::builtin_names().contains(&self.template.as_str()) {
            return Err(CoreError::Config(format!(
                "unknown template {:?}; built-ins are {:?}",
                self.template,
                eib_prompt::builtin_names()
            )));
        }
        if !BACKEND_NAMES.contains(&self.backend.as_str()) {
            return Err(CoreError::Config(format!(
                "unknown backend {:?}; expected one of {BACKEND_NAMES:?}",
                self.backend
            )));
        }
        self.model.validate()?;
        self.train.validate()?;
        self.decode.validate()?;
        Ok(())
    }

    /// Hash of the effective config. Stage reuse is keyed on this value.
    pub fn digest(&self) -> String {
        let bytes = serde_json::to_vec(self).expect("config serializes");
        eib_core::checkpoint::sha256_hex(&bytes)
    }

    /// Root directory for run artifacts once flags and defaults are applied.
    pub fn resolved_out_dir(&self) -> PathBuf {
        self.out_dir.clone().unwrap_or_else(|| PathBuf::from("eib-run"))
    }
}

/// Fixed locations of every artifact inside the run directory.
#[derive(Debug, Clone)]
pub struct RunPaths {
    pub root: PathBuf,
}

impl RunPaths {
    pub fn new(root: PathBuf) -> Self {
        Self { root }
    }

    pub fn data_dir(&self) -> PathBuf {
        self.root.join("data")
    }

    pub fn split(&self, name: &str) -> PathBuf {
        self.data_dir().join(format!("{name}.jsonl"))
    }

    pub fn build_manifest(&self) -> PathBuf {
        self.data_dir().join("build_manifest.json")
    }

    pub fn checkpoint_dir(&self) -> PathBuf {
        self.root.join("checkpoint")
    }

    pub fn train_log(&self) -> PathBuf {
        self.root.join("logs").join("train_log.jsonl")
    }

    pub fn candidates(&self) -> PathBuf {
        self.root.join("candidates.jsonl")
    }

    pub fn refined(&self) -> PathBuf {
        self.root.join("refined.jsonl")
    }

    pub fn report(&self) -> PathBuf {
        self.root.join("report.json")
    }

    pub fn run_manifest(&self) -> PathBuf {
        self.root.join("run_manifest.json")
    }
}
