//! The evaluation report: per-sample metric rows, corpus aggregates, and the
//! counts the aggregates were computed from.
//!
//! Aggregation rules, fixed here and checked by `validate`:
//! corpus BLEU-n is computed from summed per-sample clipped counts (not by
//! averaging per-sample scores); Distinct-n is inherently corpus-level;
//! corpus Novelty-n is the mean of per-sample values, with empty hypotheses
//! contributing 0; AVGLEN is the mean hypothesis token count. Reports are
//! versioned so downstream readers can reject schemas they do not understand.

use std::collections::BTreeMap;
use std::fs;
use std::path::Path;

use eib_core::error::{CoreError, Result};
use eib_core::text::TaskSample;
use serde::{Deserialize, Serialize};

use crate::ngram::{
    avg_len, bleu_counts, distinct_counts, novelty_n, BleuCounts, DistinctCounts,
};
use crate::tokenize::metric_tokens;

pub const REPORT_SCHEMA_VERSION: u32 = 1;

/// One hypothesis joined with its references and the sample it explains.
/// The caller does the id-join; this module only computes.
#[derive(Debug, Clone)]
pub struct EvalEntry {
    pub id: String,
    pub hypothesis: String,
    pub references: Vec<String>,
    pub sample: TaskSample,
}

/// Per-sample metric row. `external` holds scores read from an external
/// scorer sidecar and stays absent from the JSON when empty.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SampleMetrics {
    pub id: String,
    pub bleu_1: f64,
    pub bleu_2: f64,
    pub bleu_4: f64,
    pub novelty_1: f64,
    pub novelty_2: f64,
    pub len: u64,
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    pub external: BTreeMap<String, f64>,
}

/// Corpus-level scores.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CorpusMetrics {
    pub bleu_1: f64,
    pub bleu_2: f64,
    pub bleu_4: f64,
    pub distinct_1: f64,
    pub distinct_2: f64,
    pub novelty_1: f64,
    pub novelty_2: f64,
    pub avg_len: f64,
}

/// The counts the corpus scores were derived from, kept so a reader can
/// recompute and audit them.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct CorpusCounts {
    pub samples: u64,
    pub empty_hypotheses: u64,
    pub bleu_1: BleuCounts,
    pub bleu_2: BleuCounts,
    pub bleu_4: BleuCounts,
    pub distinct_1: DistinctCounts,
    pub distinct_2: DistinctCounts,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricReport {
    pub schema_version: u32,
    pub corpus: CorpusMetrics,
    pub counts: CorpusCounts,
    pub samples: Vec<SampleMetrics>,
}

impl MetricReport {
    /// Cross-checks the stored corpus values against the stored counts and
    /// per-sample rows, and range-checks every rate.
    pub fn validate(&self) -> Result<()> {
        if self.schema_version != REPORT_SCHEMA_VERSION {
            return Err(CoreError::Config(format!(
                "unsupported report schema version {} (expected {REPORT_SCHEMA_VERSION})",
                self.schema_version
            )));
        }
        if self.counts.samples != self.samples.len() as u64 {
            return Err(CoreError::Config(format!(
                "report lists {} samples but counts claim {}",
                self.samples.len(),
                self.counts.samples
            )));
        }
        let close = |a: f64, b: f64| (a - b).abs() <= 1e-9;
        let checks = [
            ("bleu_1", self.corpus.bleu_1, self.counts.bleu_1.score()),
            ("bleu_2", self.corpus.bleu_2, self.counts.bleu_2.score()),
            ("bleu_4", self.corpus.bleu_4, self.counts.bleu_4.score()),
            ("distinct_1", self.corpus.distinct_1, self.counts.distinct_1.score()),
            ("distinct_2", self.corpus.distinct_2, self.counts.distinct_2.score()),
            ("novelty_1", self.corpus.novelty_1, mean(self.samples.iter().map(|s| s.novelty_1))),
            ("novelty_2", self.corpus.novelty_2, mean(self.samples.iter().map(|s| s.novelty_2))),
            ("avg_len", self.corpus.avg_len, mean(self.samples.iter().map(|s| s.len as f64))),
        ];
        for (name, stored, recomputed) in checks {
            if !close(stored, recomputed) {
                return Err(CoreError::Config(format!(
                    "corpus {name} = {stored} disagrees with its counts ({recomputed})"
                )));
            }
        }
        let mut rates = vec![
            ("corpus.distinct_1", self.corpus.distinct_1),
            ("corpus.distinct_2", self.corpus.distinct_2),
        ];
        for s in &self.samples {
            for (name, v) in [
                ("bleu_1", s.bleu_1),
                ("bleu_2", s.bleu_2),
                ("bleu_4", s.bleu_4),
                ("novelty_1", s.novelty_1),
                ("novelty_2", s.novelty_2),
            ] {
                rates.push((name, v));
            }
        }
        for (name, v) in rates {
            if !(0.0..=1.0).contains(&v) {
                return Err(CoreError::Config(format!("{name} = {v} is outside [0, 1]")));
            }
        }
        if self.corpus.avg_len < 0.0 || !self.corpus.avg_len.is_finite() {
            return Err(CoreError::Config(format!(
                "avg_len = {} is not a nonnegative finite number",
                self.corpus.avg_len
            )));
        }
        Ok(())
    }
}

fn mean(values: impl Iterator<Item = f64>) -> f64 {
    let mut sum = 0.0;
    let mut n = 0u64;
    for v in values {
        sum += v;
        n += 1;
    }
    if n == 0 {
        0.0
    } else {
        sum / n as f64
    }
}

/// Builds the full report for a corpus of evaluated hypotheses.
///
/// Empty hypotheses are tolerated per sample (they score 0 and are tallied in
/// `counts.empty_hypotheses`), but a corpus where every hypothesis is empty is
/// rejected. A Distinct order with no n-grams anywhere, e.g. Distinct-2 over
/// single-token hypotheses, is reported as 0 with zero counts.
pub fn build_report(entries: &[EvalEntry]) -> Result<MetricReport> {
    if entries.is_empty() {
        return Err(CoreError::Config("cannot evaluate an empty corpus".into()));
    }
    let mut seen = std::collections::HashSet::new();
    for e in entries {
        if !seen.insert(e.id.as_str()) {
            return Err(CoreError::Config(format!(
                "duplicate sample id `{}` in evaluation input",
                e.id
            )));
        }
        if e.references.is_empty() {
            return Err(CoreError::Config(format!(
                "sample `{}` has no references",
                e.id
            )));
        }
    }

    let hyp_tokens: Vec<Vec<String>> = entries
        .iter()
        .map(|e| metric_tokens(&e.hypothesis))
        .collect();
    if hyp_tokens.iter().all(|h| h.is_empty()) {
        return Err(CoreError::EmptyText(
            "every hypothesis in the corpus is empty".into(),
        ));
    }

    let mut counts = CorpusCounts {
        samples: entries.len() as u64,
        ..CorpusCounts::default()
    };
    let mut samples = Vec::with_capacity(entries.len());
    for (entry, hyp) in entries.iter().zip(&hyp_tokens) {
        let refs: Vec<Vec<String>> = entry
            .references
            .iter()
            .map(|r| metric_tokens(r))
            .collect();
        let b1 = bleu_counts(hyp, &refs, 1)?;
        let b2 = bleu_counts(hyp, &refs, 2)?;
        let b4 = bleu_counts(hyp, &refs, 4)?;
        counts.bleu_1.accumulate(&b1);
        counts.bleu_2.accumulate(&b2);
        counts.bleu_4.accumulate(&b4);
        let (novelty_1, novelty_2) = if hyp.is_empty() {
            counts.empty_hypotheses += 1;
            (0.0, 0.0)
        } else {
            (
                novelty_n(hyp, &entry.sample, 1)?,
                novelty_n(hyp, &entry.sample, 2)?,
            )
        };
        samples.push(SampleMetrics {
            id: entry.id.clone(),
            bleu_1: b1.score(),
            bleu_2: b2.score(),
            bleu_4: b4.score(),
            novelty_1,
            novelty_2,
            len: hyp.len() as u64,
            external: BTreeMap::new(),
        });
    }

    counts.distinct_1 = distinct_counts(&hyp_tokens, 1)?;
    counts.distinct_2 = match distinct_counts(&hyp_tokens, 2) {
        Ok(c) => c,
        Err(CoreError::EmptyText(_)) => DistinctCounts::default(),
        Err(e) => return Err(e),
    };

    let corpus = CorpusMetrics {
        bleu_1: counts.bleu_1.score(),
        bleu_2: counts.bleu_2.score(),
        bleu_4: counts.bleu_4.score(),
        distinct_1: counts.distinct_1.score(),
        distinct_2: counts.distinct_2.score(),
        novelty_1: mean(samples.iter().map(|s| s.novelty_1)),
        novelty_2: mean(samples.iter().map(|s| s.novelty_2)),
        avg_len: avg_len(&hyp_tokens)?,
    };
    let report = MetricReport {
        schema_version: REPORT_SCHEMA_VERSION,
        corpus,
        counts,
        samples,
    };
    report.validate()?;
    Ok(report)
}

/// Merges external scorer values into the matching per-sample rows. Ids that
/// do not exist in the report are treated as join bugs and rejected.
pub fn attach_external_scores(
    report: &mut MetricReport,
    scores: &BTreeMap<String, BTreeMap<String, f64>>,
) -> Result<()> {
    for (id, values) in scores {
        let row = report
            .samples
            .iter_mut()
            .find(|s| &s.id == id)
            .ok_or_else(|| {
                CoreError::Config(format!("external score for unknown sample id `{id}`"))
            })?;
        for (name, value) in values {
            row.external.insert(name.clone(), *value);
        }
    }
    Ok(())
}

/// Writes the report as pretty-printed JSON with a trailing newline.
pub fn write_report(path: &Path, report: &MetricReport) -> Result<()> {
    report.validate()?;
    let mut body = serde_json::to_string_pretty(report)?;
    body.push('\n');
    fs::write(path, body)?;
    Ok(())
}

/// Reads and validates a report written by [`write_report`].
pub fn read_report(path: &Path) -> Result<MetricReport> {
    if !path.is_file() {
        return Err(CoreError::MissingInput(path.to_path_buf()));
    }
    let body = fs::read_to_string(path)?;
    let report: MetricReport = serde_json::from_str(&body)?;
    report.validate()?;
    Ok(report)
}
