//! Decoding strategies: greedy argmax and nucleus (top-p) sampling.

use crate::Scalar;
use rand::Rng;
use rand_chacha::ChaCha12Rng;
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Strategy {
    Greedy,
    TopP,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DecodeConfig {
    #[serde(default = "default_strategy")]
    pub strategy: Strategy,
    /// Nucleus mass for top-p sampling.
    #[serde(default = "default_top_p")]
    pub top_p: f64,
    #[serde(default = "default_max_len")]
    pub max_len: usize,
    #[serde(default = "default_candidates")]
    pub num_candidates: usize,
    #[serde(default)]
    pub seed: u64,
}

fn default_strategy() -> Strategy {
    Strategy::Greedy
}
fn default_top_p() -> f64 {
    0.9
}
fn default_max_len() -> usize {
    64
}
fn default_candidates() -> usize {
    1
}

impl Default for DecodeConfig {
    fn default() -> Self {
        Self {
            strategy: default_strategy(),
            top_p: default_top_p(),
            max_len: default_max_len(),
            num_candidates: default_candidates(),
            seed: 0,
        }
    }
}

impl DecodeConfig {
    pub fn validate(&self) -> crate::error::Result<()> {
        if !(self.top_p > 0.0 && self.top_p <= 1.0) {
            return Err(crate::CoreError::Config(format!(
                "top_p must be in (0, 1], got {}",
                self.top_p
            )));
        }
        if self.max_len == 0 || self.num_candidates == 0 {
            return Err(crate::CoreError::Config(
                "max_len and num_candidates must be positive".into(),
            ));
        }
        Ok(())
    }
}

/// Argmax with ties broken toward the lowest index, so greedy decoding is
/// deterministic bit for bit.
pub fn greedy_pick<F: Scalar>(logits: &[F]) -> usize {
    let mut best = 0;
    for (i, &v) in logits.iter().enumerate() {
        if v > logits[best] {
            best = i;
        }
    }
    best
}

pub fn softmax_probs<F: Scalar>(logits: &[F]) -> Vec<f64> {
    let max = logits
        .iter()
        .map(|v| v.to_f64().unwrap_or(f64::NEG_INFINITY))
        .fold(f64::NEG_INFINITY, f64::max);
    let exps: Vec<f64> = logits
        .iter()
        .map(|v| (v.to_f64().unwrap_or(f64::NEG_INFINITY) - max).exp())
        .collect();
    let sum: f64 = exps.iter().sum();
    exps.into_iter().map(|e| e / sum).collect()
}

/// The nucleus: indices of the minimal probability-sorted prefix whose mass
/// reaches `p`. Always contains at least the argmax. Sorting breaks ties by
/// index, so the set is deterministic.
pub fn nucleus_set(probs: &[f64], p: f64) -> Vec<usize> {
    let mut order: Vec<usize> = (0..probs.len()).collect();
    order.sort_by(|&a, &b| {
        probs[b]
            .partial_cmp(&probs[a])
            .unwrap_or(std::cmp::Ordering::Equal)
            .then(a.cmp(&b))
    });
    let mut cum = 0.0;
    let mut keep = Vec::new();
    for &i in &order {
        keep.push(i);
        cum += probs[i];
        if cum >= p {
            break;
        }
    }
    keep
}

/// Samples from the renormalized nucleus of the softmax distribution.
pub fn sample_top_p<F: Scalar>(logits: &[F], p: f64, rng: &mut ChaCha12Rng) -> usize {
    let probs = softmax_probs(logits);
    let keep = nucleus_set(&probs, p);
    let mass: f64 = keep.iter().map(|&i| probs[i]).sum();
    let mut u: f64 = rng.gen_range(0.0..mass);
    for &i in &keep {
        u -= probs[i];
        if u <= 0.0 {
            return i;
        }
    }
    *keep.last().expect("nucleus is never empty")
}

/// Picks the next token according to the strategy.
pub fn pick_next<F: Scalar>(
    logits: &[F],
    strategy: Strategy,
    top_p: f64,
    rng: &mut ChaCha12Rng,
) -> usize {
    match strategy {
        Strategy::Greedy => greedy_pick(logits),
        Strategy::TopP => sample_top_p(logits, top_p, rng),
    }
}
