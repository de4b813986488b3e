//! External scorer sidecar files.
//!
//! Model-based metrics (BERTScore, CIDEr, ROUGE variants) are not computed in
//! this crate; an external tool scores the hypotheses and leaves a JSONL
//! sidecar, one `{"id": ..., "scores": {name: value}}` object per line. This
//! module reads and writes that format and validates it strictly, since a
//! silently misjoined sidecar would corrupt the report.

use std::collections::BTreeMap;
use std::fs;
use std::path::Path;

use eib_core::error::{CoreError, Result};
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExternalScoreLine {
    pub id: String,
    pub scores: BTreeMap<String, f64>,
}

/// Writes one score line per record.
pub fn write_scores(path: &Path, lines: &[ExternalScoreLine]) -> Result<()> {
    let mut out = Vec::new();
    for line in lines {
        serde_json::to_writer(&mut out, line)?;
        out.push(b'\n');
    }
    fs::write(path, out)?;
    Ok(())
}

/// Reads a sidecar into an id-keyed map, rejecting duplicate ids and
/// non-finite scores with the offending line number.
pub fn read_scores(path: &Path) -> Result<BTreeMap<String, BTreeMap<String, f64>>> {
    if !path.is_file() {
        return Err(CoreError::MissingInput(path.to_path_buf()));
    }
    let body = fs::read_to_string(path)?;
    let mut scores = BTreeMap::new();
    for (idx, raw) in body.lines().enumerate() {
        if raw.trim().is_empty() {
            continue;
        }
        let schema_err = |msg: String| CoreError::Schema {
            path: path.display().to_string(),
            line: idx + 1,
            msg,
        };
        let line: ExternalScoreLine =
            serde_json::from_str(raw).map_err(|e| schema_err(e.to_string()))?;
        for (name, value) in &line.scores {
            if !value.is_finite() {
                return Err(schema_err(format!("score `{name}` is not finite")));
            }
        }
        if scores.insert(line.id.clone(), line.scores).is_some() {
            return Err(schema_err(format!("duplicate id `{}`", line.id)));
        }
    }
    Ok(scores)
}
