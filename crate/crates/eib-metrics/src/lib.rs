//! Automatic evaluation metrics for explanation text.
//!
//! Four metric families share one frozen tokenizer: reference-based BLEU-n
//! with clipped counts and a brevity penalty, corpus-level Distinct-n,
//! Novelty-n against the serialized task sample, and average length. On top
//! of the pure functions sit a versioned [`report::MetricReport`], a
//! metric-vs-score bucketing table, and a JSONL sidecar format for scores
//! produced by external model-based scorers.
//!
//! Everything is deterministic and pure; corpus-level BLEU aggregates counts
//! rather than averaging per-sample rates, so map-reduce style evaluation
//! stays exact.

pub mod bucket;
pub mod ngram;
pub mod report;
pub mod sidecar;
pub mod tokenize;

pub use bucket::{bucket_by_metric, Bucket};
pub use ngram::{avg_len, bleu_n, distinct_n, novelty_n, BleuCounts, DistinctCounts};
pub use report::{
    attach_external_scores, build_report, read_report, write_report, EvalEntry, MetricReport,
};
pub use sidecar::{read_scores, write_scores, ExternalScoreLine};
pub use tokenize::metric_tokens;

/// Version of this crate, surfaced in run manifests.
pub const VERSION: &str = env!("CARGO_PKG_VERSION");
