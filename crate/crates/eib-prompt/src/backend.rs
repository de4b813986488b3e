//! Candidate-generation backends and the shared entry point over them.
//!
//! Three backends hide behind [`BackendHandle`]: canned fixtures for
//! deterministic tests and offline runs, a local tiny language model decoding
//! from a checkpoint, and a remote HTTP API for anyone with a real prompt
//! model. [`generate_candidates`] wraps whichever backend with validation and
//! completion cleanup, so callers always receive non-empty explanation texts.

use std::path::Path;
use std::time::Duration;

use eib_core::checkpoint::load_checkpoint;
use eib_core::decode::{DecodeConfig, Strategy};
use eib_core::error::{CoreError, Result};
use eib_core::model::LmKind;
use eib_core::refine::decode_tokens;
use eib_core::seed::stream_rng;
use eib_core::text::{normalize_ws, ExplanationText};
use eib_core::Model64;
use serde::{Deserialize, Serialize};

use crate::fixture::FixtureBackend;
use crate::postprocess::{clean_completion, prompt_connective};

/// Environment variable naming the remote backend's HTTP endpoint.
pub const REMOTE_ENDPOINT_ENV: &str = "EIB_REMOTE_ENDPOINT";
/// Environment variable holding the bearer token for the remote backend,
/// optional for endpoints that need no auth.
pub const REMOTE_API_KEY_ENV: &str = "EIB_REMOTE_API_KEY";

pub enum BackendHandle {
    Fixture(FixtureBackend),
    LocalTiny(Box<LocalTinyBackend>),
    Remote(RemoteBackend),
}

impl BackendHandle {
    pub fn kind(&self) -> &'static str {
        match self {
            BackendHandle::Fixture(_) => "fixture",
            BackendHandle::LocalTiny(_) => "local-tiny",
            BackendHandle::Remote(_) => "remote",
        }
    }

    fn complete(&self, prompt: &str, cfg: &DecodeConfig) -> Result<Vec<String>> {
        match self {
            BackendHandle::Fixture(b) => b.complete(prompt, cfg.num_candidates),
            BackendHandle::LocalTiny(b) => b.complete(prompt, cfg),
            BackendHandle::Remote(b) => b.complete(prompt, cfg),
        }
    }
}

/// Asks the backend for raw completions and turns them into cleaned
/// candidates: echoes of the prompt are stripped, text after the first blank
/// line is dropped, and a duplicated leading connective is removed.
///
/// With the top-p strategy the first candidate is the greedy one; sampled
/// candidates follow. A candidate that is empty after cleanup is an error,
/// not a silent omission, so downstream files always hold one candidate per
/// requested slot.
pub fn generate_candidates(
    prompt: &str,
    backend: &BackendHandle,
    cfg: &DecodeConfig,
) -> Result<Vec<ExplanationText>> {
    cfg.validate()?;
    if normalize_ws(prompt).is_empty() {
        return Err(CoreError::EmptyText("prompt".into()));
    }
    let raw = backend.complete(prompt, cfg)?;
    if raw.len() < cfg.num_candidates {
        return Err(CoreError::Config(format!(
            "{} backend returned {} completions, {} were requested",
            backend.kind(),
            raw.len(),
            cfg.num_candidates
        )));
    }
    let connective = prompt_connective(prompt);
    raw.into_iter()
        .take(cfg.num_candidates)
        .enumerate()
        .map(|(i, completion)| {
            let cleaned = clean_completion(prompt, connective.as_deref(), &completion);
            ExplanationText::new(&cleaned).map_err(|_| {
                CoreError::EmptyText(format!(
                    "candidate {i} from the {} backend is empty after cleanup",
                    backend.kind()
                ))
            })
        })
        .collect()
}

/// Unconditional decoding from the checkpointed preservation language model:
/// the prompt becomes the token context and the model continues it. A stand-in
/// for the large prompting models this system does not bundle.
pub struct LocalTinyBackend {
    model: Model64,
}

impl LocalTinyBackend {
    pub fn load(checkpoint_dir: &Path) -> Result<Self> {
        let (model, _train_cfg, _manifest) = load_checkpoint::<f64>(checkpoint_dir)?;
        Ok(Self { model })
    }

    pub fn from_model(model: Model64) -> Self {
        Self { model }
    }

    fn complete(&self, prompt: &str, cfg: &DecodeConfig) -> Result<Vec<String>> {
        let lm_max = self.model.preservation.shape.max_seq_len;
        // Keep the prompt tail: the tokens nearest the continuation carry the
        // connective and the sample text, the head is boilerplate.
        let reserve = cfg.max_len.min(lm_max / 2).max(1);
        let budget = lm_max.saturating_sub(1 + reserve).max(1);
        let mut ctx = self.model.vocab.encode(prompt);
        if ctx.len() > budget {
            ctx.drain(..ctx.len() - budget);
        }
        let mut out = Vec::with_capacity(cfg.num_candidates);
        for i in 0..cfg.num_candidates {
            let strategy = match (cfg.strategy, i) {
                (Strategy::TopP, 0) => Strategy::Greedy,
                (s, _) => s,
            };
            let step_cfg = DecodeConfig {
                strategy,
                ..cfg.clone()
            };
            let mut rng = stream_rng(cfg.seed, "prompt-candidate", i as u64);
            let ids = decode_tokens(
                &self.model,
                LmKind::Preservation,
                None,
                &ctx,
                &step_cfg,
                &mut rng,
            );
            out.push(self.model.vocab.decode(&ids)?);
        }
        Ok(out)
    }
}

/// A JSON-over-HTTP backend. The endpoint comes from `EIB_REMOTE_ENDPOINT`
/// and an optional bearer token from `EIB_REMOTE_API_KEY`. The request body
/// mirrors [`DecodeConfig`] plus the prompt; the response must be
/// `{"candidates": [...]}`.
pub struct RemoteBackend {
    endpoint: String,
    api_key: Option<String>,
    timeout: Duration,
    max_attempts: u32,
}

#[derive(Serialize)]
struct RemoteRequest<'a> {
    prompt: &'a str,
    strategy: Strategy,
    top_p: f64,
    num_candidates: usize,
    max_len: usize,
    seed: u64,
}

#[derive(Deserialize)]
struct RemoteResponse {
    candidates: Vec<String>,
}

impl RemoteBackend {
    pub fn from_env() -> Result<Self> {
        let endpoint = std::env::var(REMOTE_ENDPOINT_ENV).map_err(|_| {
            CoreError::Config(format!(
                "remote backend selected but {REMOTE_ENDPOINT_ENV} is not set"
            ))
        })?;
        Ok(Self::new(
            endpoint,
            std::env::var(REMOTE_API_KEY_ENV).ok(),
            Duration::from_secs(30),
            3,
        ))
    }

    pub fn new(
        endpoint: String,
        api_key: Option<String>,
        timeout: Duration,
        max_attempts: u32,
    ) -> Self {
        Self {
            endpoint,
            api_key,
            timeout,
            max_attempts: max_attempts.max(1),
        }
    }

    fn complete(&self, prompt: &str, cfg: &DecodeConfig) -> Result<Vec<String>> {
        let client = reqwest::blocking::Client::builder()
            .timeout(self.timeout)
            .build()
            .map_err(|e| CoreError::Config(format!("cannot build http client: {e}")))?;
        let body = RemoteRequest {
            prompt,
            strategy: cfg.strategy,
            top_p: cfg.top_p,
            num_candidates: cfg.num_candidates,
            max_len: cfg.max_len,
            seed: cfg.seed,
        };
        let mut last_err = String::new();
        for _attempt in 0..self.max_attempts {
            let mut req = client.post(&self.endpoint).json(&body);
            if let Some(key) = &self.api_key {
                req = req.bearer_auth(key);
            }
            match req
                .send()
                .and_then(reqwest::blocking::Response::error_for_status)
                .and_then(|r| r.json::<RemoteResponse>())
            {
                Ok(resp) => return Ok(resp.candidates),
                Err(e) => last_err = e.to_string(),
            }
        }
        Err(CoreError::Io(std::io::Error::new(
            std::io::ErrorKind::TimedOut,
            format!(
                "remote backend {} failed after {} attempts: {last_err}",
                self.endpoint, self.max_attempts
            ),
        )))
    }
}
