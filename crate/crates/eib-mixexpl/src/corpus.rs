//! Loads source datasets and writes the three corruption-corpus split files
//! plus a build manifest.
//!
//! Everything here is deterministic for a fixed seed: the shuffle uses a
//! dedicated seed stream, each record derives its own RNG from the corpus
//! seed and the sample id, and the manifest carries no wall-clock state, so
//! re-running a build byte-identically reproduces all outputs.

use crate::lexicon::Lexicon;
use crate::record::{build_record, MixExplRecord, RecordOutcome};
use eib_core::checkpoint::sha256_hex;
use eib_core::error::{CoreError, Result};
use eib_core::seed::{derive_seed, stream_rng};
use eib_core::text::{ExplanationText, TaskSample};
use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};
use std::collections::{BTreeMap, HashSet};
use std::io::Write;
use std::path::{Path, PathBuf};

pub const MANIFEST_SCHEMA_VERSION: u32 = 1;

/// Split sizes used when no ratios are given and the sources are large
/// enough; small inputs fall back to 0.8/0.1/0.1 ratios.
pub const DEFAULT_TARGET_SIZES: [usize; 3] = [6848, 764, 828];
pub const DEFAULT_RATIOS: [f64; 3] = [0.8, 0.1, 0.1];

pub const SPLIT_NAMES: [&str; 3] = ["train", "valid", "test"];

/// One source row: a task sample paired with its gold explanation, tagged
/// with the file it came from.
#[derive(Debug, Clone)]
pub struct SourcePair {
    pub sample: TaskSample,
    pub gold: ExplanationText,
    pub origin: String,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct SourceLine {
    id: String,
    task: String,
    context: String,
    output: String,
    explanation: String,
}

/// Reads JSONL source files. Any malformed line fails the whole load with
/// its file and line number; ids must be unique across all sources.
pub fn load_sources(paths: &[PathBuf]) -> Result<Vec<SourcePair>> {
    let mut pairs = Vec::new();
    let mut seen_ids: HashSet<String> = HashSet::new();
    for path in paths {
        if !path.exists() {
            return Err(CoreError::MissingInput(path.clone()));
        }
        let origin = path.display().to_string();
        let content = std::fs::read_to_string(path)?;
        for (i, line) in content.lines().enumerate() {
            let lineno = i + 1;
            if line.trim().is_empty() {
                continue;
            }
            let schema = |msg: String| CoreError::Schema {
                path: origin.clone(),
                line: lineno,
                msg,
            };
            let row: SourceLine =
                serde_json::from_str(line).map_err(|e| schema(e.to_string()))?;
            let sample = TaskSample {
                id: row.id,
                task: row.task,
                context: row.context,
                output: row.output,
            };
            sample.validate().map_err(|e| schema(e.to_string()))?;
            let gold =
                ExplanationText::new(&row.explanation).map_err(|e| schema(e.to_string()))?;
            if !seen_ids.insert(sample.id.clone()) {
                return Err(schema(format!("duplicate sample id {:?}", sample.id)));
            }
            pairs.push(SourcePair {
                sample,
                gold,
                origin: origin.clone(),
            });
        }
    }
    Ok(pairs)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SplitPlan {
    Targets([usize; 3]),
    Ratios([f64; 3]),
}

impl SplitPlan {
    /// Explicit ratios win; otherwise the default target sizes apply when
    /// the sources cover them, and default ratios when they do not.
    pub fn choose(total: usize, ratios: Option<[f64; 3]>) -> Result<Self> {
        if let Some(r) = ratios {
            if r.iter().any(|&x| x < 0.0) || (r.iter().sum::<f64>() - 1.0).abs() > 1e-9 {
                return Err(CoreError::Config(format!(
                    "split ratios must be non-negative and sum to 1, got {r:?}"
                )));
            }
            return Ok(SplitPlan::Ratios(r));
        }
        if total >= DEFAULT_TARGET_SIZES.iter().sum() {
            Ok(SplitPlan::Targets(DEFAULT_TARGET_SIZES))
        } else {
            Ok(SplitPlan::Ratios(DEFAULT_RATIOS))
        }
    }

    /// Concrete sizes for `total` records: targets pass through, ratios
    /// floor the first two splits and give the remainder to the third.
    pub fn sizes(&self, total: usize) -> [usize; 3] {
        match *self {
            SplitPlan::Targets(t) => t,
            SplitPlan::Ratios(r) => {
                let train = (total as f64 * r[0]).floor() as usize;
                let valid = (total as f64 * r[1]).floor() as usize;
                [train, valid, total - train - valid]
            }
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct BuildOptions {
    pub seed: u64,
    pub ratios: Option<[f64; 3]>,
}

#[derive(Debug, Clone, Copy, Default, Serialize, Deserialize)]
pub struct SplitStats {
    pub written: usize,
    pub skipped: usize,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SkipEntry {
    pub split: String,
    pub id: String,
    pub reason: String,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct BuildManifest {
    pub schema_version: u32,
    pub seed: u64,
    pub plan: SplitPlan,
    pub total_pairs: usize,
    /// Pairs beyond the target sizes that no split consumed.
    pub unused_pairs: usize,
    pub per_source: BTreeMap<String, usize>,
    pub splits: BTreeMap<String, SplitStats>,
    pub skipped: Vec<SkipEntry>,
    pub digests: BTreeMap<String, String>,
}

/// Builds `train.jsonl`, `valid.jsonl`, `test.jsonl` and
/// `build_manifest.json` under `out_dir`.
pub fn build_corpus(
    pairs: &[SourcePair],
    lex: &Lexicon,
    out_dir: &Path,
    opts: &BuildOptions,
) -> Result<BuildManifest> {
    if pairs.is_empty() {
        return Err(CoreError::Config("no source pairs to build from".into()));
    }
    let plan = SplitPlan::choose(pairs.len(), opts.ratios)?;
    let sizes = plan.sizes(pairs.len());
    let need: usize = sizes.iter().sum();
    if need > pairs.len() {
        return Err(CoreError::Config(format!(
            "splits need {need} pairs but only {} are available",
            pairs.len()
        )));
    }

    let mut order: Vec<usize> = (0..pairs.len()).collect();
    order.shuffle(&mut stream_rng(opts.seed, "corpus-shuffle", 0));

    let pool: Vec<ExplanationText> = pairs.iter().map(|p| p.gold.clone()).collect();

    std::fs::create_dir_all(out_dir)?;
    let mut per_source: BTreeMap<String, usize> = BTreeMap::new();
    let mut splits: BTreeMap<String, SplitStats> = BTreeMap::new();
    let mut skipped = Vec::new();
    let mut digests = BTreeMap::new();

    let mut cursor = 0usize;
    for (split, &size) in SPLIT_NAMES.iter().zip(&sizes) {
        let members = &order[cursor..cursor + size];
        cursor += size;

        let mut stats = SplitStats::default();
        let mut buf = Vec::new();
        for &pi in members {
            let pair = &pairs[pi];
            let record_seed = derive_seed(opts.seed, &pair.sample.id, 0);
            match build_record(&pair.gold, &pair.sample, lex, &pool, record_seed) {
                RecordOutcome::Record(record) => {
                    serde_json::to_writer(&mut buf, &record)?;
                    buf.push(b'\n');
                    stats.written += 1;
                    *per_source.entry(pair.origin.clone()).or_default() += 1;
                }
                RecordOutcome::Skip { id, reason } => {
                    stats.skipped += 1;
                    skipped.push(SkipEntry {
                        split: split.to_string(),
                        id,
                        reason,
                    });
                }
            }
        }

        let name = format!("{split}.jsonl");
        std::fs::write(out_dir.join(&name), &buf)?;
        digests.insert(name, sha256_hex(&buf));
        splits.insert(split.to_string(), stats);
    }

    let manifest = BuildManifest {
        schema_version: MANIFEST_SCHEMA_VERSION,
        seed: opts.seed,
        plan,
        total_pairs: pairs.len(),
        unused_pairs: pairs.len() - need,
        per_source,
        splits,
        skipped,
        digests,
    };
    let mut bytes = serde_json::to_vec_pretty(&manifest)?;
    bytes.push(b'\n');
    let mut f = std::fs::File::create(out_dir.join("build_manifest.json"))?;
    f.write_all(&bytes)?;
    Ok(manifest)
}

/// Reads one split file back into records, validating each line.
pub fn read_split(path: &Path) -> Result<Vec<MixExplRecord>> {
    if !path.exists() {
        return Err(CoreError::MissingInput(path.to_path_buf()));
    }
    let content = std::fs::read_to_string(path)?;
    let mut records = Vec::new();
    for (i, line) in content.lines().enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let record: MixExplRecord =
            serde_json::from_str(line).map_err(|e| CoreError::Schema {
                path: path.display().to_string(),
                line: i + 1,
                msg: e.to_string(),
            })?;
        record.validate()?;
        records.push(record);
    }
    Ok(records)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn ratio_sizes_floor_and_remainder() {
        let plan = SplitPlan::Ratios([0.8, 0.1, 0.1]);
        assert_eq!(plan.sizes(10), [8, 1, 1]);
        assert_eq!(plan.sizes(25), [20, 2, 3]);
    }

    #[test]
    fn plan_choice_prefers_targets_only_when_covered() {
        let small = SplitPlan::choose(100, None).unwrap();
        assert_eq!(small, SplitPlan::Ratios(DEFAULT_RATIOS));
        let big = SplitPlan::choose(10_000, None).unwrap();
        assert_eq!(big, SplitPlan::Targets(DEFAULT_TARGET_SIZES));
    }

    #[test]
    fn explicit_ratios_are_validated() {
        assert!(SplitPlan::choose(10, Some([0.5, 0.4, 0.2])).is_err());
        assert!(SplitPlan::choose(10, Some([-0.1, 1.0, 0.1])).is_err());
        assert!(SplitPlan::choose(10, Some([0.7, 0.2, 0.1])).is_ok());
    }
}
