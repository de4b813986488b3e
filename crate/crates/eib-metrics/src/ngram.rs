//! N-gram metrics over tokenized text: clipped-precision BLEU-n with a
//! brevity penalty, corpus-level Distinct-n, per-hypothesis Novelty-n, and
//! average length.
//!
//! Every function here is pure and works on token slices produced by
//! [`crate::tokenize::metric_tokens`]. The count structs are exposed so that
//! corpus-level scores can be computed by summing per-sample counts instead of
//! averaging per-sample rates.

use std::collections::HashMap;

use eib_core::error::{CoreError, Result};
use eib_core::text::TaskSample;

use crate::tokenize::metric_tokens;

/// Clipped n-gram match counts for one hypothesis/reference pair, or the sum
/// of such counts over a corpus. `score` turns either into a BLEU-n value.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
pub struct BleuCounts {
    /// Hypothesis n-grams matched after clipping against the references.
    pub matched: u64,
    /// Total hypothesis n-grams.
    pub total: u64,
    /// Hypothesis length in tokens.
    pub hyp_len: u64,
    /// Closest reference length (ties broken toward the shorter reference).
    pub ref_len: u64,
}

impl BleuCounts {
    pub fn accumulate(&mut self, other: &BleuCounts) {
        self.matched += other.matched;
        self.total += other.total;
        self.hyp_len += other.hyp_len;
        self.ref_len += other.ref_len;
    }

    /// Modified n-gram precision times the brevity penalty. A hypothesis with
    /// no n-grams at this order scores 0.
    pub fn score(&self) -> f64 {
        if self.total == 0 {
            return 0.0;
        }
        let precision = self.matched as f64 / self.total as f64;
        precision * self.brevity_penalty()
    }

    /// exp(1 - r/c) when the hypothesis is shorter than the reference, 1
    /// otherwise.
    pub fn brevity_penalty(&self) -> f64 {
        if self.hyp_len == 0 {
            0.0
        } else if self.hyp_len >= self.ref_len {
            1.0
        } else {
            (1.0 - self.ref_len as f64 / self.hyp_len as f64).exp()
        }
    }
}

/// Unique/total n-gram counts behind Distinct-n.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
pub struct DistinctCounts {
    pub unique: u64,
    pub total: u64,
}

impl DistinctCounts {
    /// Unique fraction; 0 when there are no n-grams at all.
    pub fn score(&self) -> f64 {
        if self.total == 0 {
            0.0
        } else {
            self.unique as f64 / self.total as f64
        }
    }
}

fn require_order(n: usize) -> Result<()> {
    if n == 0 {
        return Err(CoreError::Config("n-gram order must be at least 1".into()));
    }
    Ok(())
}

fn gram_counts<'a>(tokens: &'a [String], n: usize) -> HashMap<&'a [String], u64> {
    let mut counts = HashMap::new();
    for gram in tokens.windows(n) {
        *counts.entry(gram).or_insert(0) += 1;
    }
    counts
}

/// Picks the reference length closest to the hypothesis length, breaking ties
/// toward the shorter reference.
fn closest_ref_len(hyp_len: usize, refs: &[Vec<String>]) -> u64 {
    let mut best_len = refs[0].len();
    let mut best_diff = best_len.abs_diff(hyp_len);
    for r in &refs[1..] {
        let diff = r.len().abs_diff(hyp_len);
        if diff < best_diff || (diff == best_diff && r.len() < best_len) {
            best_len = r.len();
            best_diff = diff;
        }
    }
    best_len as u64
}

/// Computes the clipped match counts for BLEU-n on a single hypothesis.
///
/// An empty hypothesis yields all-zero counts except `ref_len` and therefore
/// scores 0; the caller decides whether that deserves a warning.
pub fn bleu_counts(hyp: &[String], refs: &[Vec<String>], n: usize) -> Result<BleuCounts> {
    require_order(n)?;
    if refs.is_empty() {
        return Err(CoreError::Config("BLEU needs at least one reference".into()));
    }
    let mut counts = BleuCounts {
        hyp_len: hyp.len() as u64,
        ref_len: closest_ref_len(hyp.len(), refs),
        ..BleuCounts::default()
    };
    if hyp.len() < n {
        return Ok(counts);
    }
    let hyp_grams = gram_counts(hyp, n);
    let ref_grams: Vec<_> = refs.iter().map(|r| gram_counts(r, n)).collect();
    for (gram, &hyp_count) in &hyp_grams {
        let clip = ref_grams
            .iter()
            .map(|g| g.get(gram).copied().unwrap_or(0))
            .max()
            .unwrap_or(0);
        counts.matched += hyp_count.min(clip);
        counts.total += hyp_count;
    }
    Ok(counts)
}

/// BLEU-n for a single hypothesis against one or more references.
pub fn bleu_n(hyp: &[String], refs: &[Vec<String>], n: usize) -> Result<f64> {
    bleu_counts(hyp, refs, n).map(|c| c.score())
}

/// Counts unique and total n-grams over a hypothesis set. N-grams never cross
/// hypothesis boundaries.
///
/// Errors when no hypothesis contributes a single n-gram, which covers the
/// all-empty corpus and the corpus where every hypothesis is shorter than `n`.
pub fn distinct_counts(hyps: &[Vec<String>], n: usize) -> Result<DistinctCounts> {
    require_order(n)?;
    if hyps.is_empty() {
        return Err(CoreError::Config(
            "Distinct needs at least one hypothesis".into(),
        ));
    }
    let mut seen = std::collections::HashSet::new();
    let mut counts = DistinctCounts::default();
    for hyp in hyps {
        for gram in hyp.windows(n) {
            counts.total += 1;
            if seen.insert(gram) {
                counts.unique += 1;
            }
        }
    }
    if counts.total == 0 {
        return Err(CoreError::EmptyText(format!(
            "no {n}-grams in any hypothesis"
        )));
    }
    Ok(counts)
}

/// Distinct-n: unique n-grams over total n-grams across the hypothesis set.
pub fn distinct_n(hyps: &[Vec<String>], n: usize) -> Result<f64> {
    distinct_counts(hyps, n).map(|c| c.score())
}

/// Tokenizes the task sample the way the novelty metric sees it: context and
/// output serialized into one string, so n-grams may span the boundary.
pub fn sample_tokens(sample: &TaskSample) -> Vec<String> {
    metric_tokens(&format!("{} {}", sample.context, sample.output))
}

/// Novelty-n: the fraction of the hypothesis's distinct n-grams that do not
/// occur among the n-grams of the serialized task sample.
///
/// A hypothesis shorter than `n` has no n-grams to be novel, so it scores 0.
pub fn novelty_n(hyp: &[String], sample: &TaskSample, n: usize) -> Result<f64> {
    require_order(n)?;
    if hyp.is_empty() {
        return Err(CoreError::EmptyText("novelty of an empty hypothesis".into()));
    }
    let distinct: std::collections::HashSet<&[String]> = hyp.windows(n).collect();
    if distinct.is_empty() {
        return Ok(0.0);
    }
    let sample_toks = sample_tokens(sample);
    let known: std::collections::HashSet<&[String]> = sample_toks.windows(n).collect();
    let novel = distinct.iter().filter(|g| !known.contains(*g)).count();
    Ok(novel as f64 / distinct.len() as f64)
}

/// Mean token count over the hypothesis set.
pub fn avg_len(hyps: &[Vec<String>]) -> Result<f64> {
    if hyps.is_empty() {
        return Err(CoreError::Config(
            "average length needs at least one hypothesis".into(),
        ));
    }
    let total: usize = hyps.iter().map(|h| h.len()).sum();
    Ok(total as f64 / hyps.len() as f64)
}
