//! The candidate file format shared by the prompt and refine stages:
//! JSONL with one `{"id", "prompt", "candidates": [...]}` object per sample.

use std::path::Path;

use eib_core::error::{CoreError, Result};
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CandidateRecord {
    pub id: String,
    pub prompt: String,
    pub candidates: Vec<String>,
}

impl CandidateRecord {
    pub fn validate(&self) -> Result<()> {
        if self.id.trim().is_empty() {
            return Err(CoreError::EmptyText("candidate record id".into()));
        }
        if self.candidates.is_empty() || self.candidates.iter().any(|c| c.trim().is_empty()) {
            return Err(CoreError::EmptyText(format!(
                "record `{}` has an empty candidate list or candidate",
                self.id
            )));
        }
        Ok(())
    }
}

pub fn write_candidates(path: &Path, records: &[CandidateRecord]) -> Result<()> {
    let mut out = Vec::new();
    for r in records {
        r.validate()?;
        serde_json::to_writer(&mut out, r)?;
        out.push(b'\n');
    }
    std::fs::write(path, out)?;
    Ok(())
}

pub fn read_candidates(path: &Path) -> Result<Vec<CandidateRecord>> {
    if !path.is_file() {
        return Err(CoreError::MissingInput(path.to_path_buf()));
    }
    let body = std::fs::read_to_string(path)?;
    let mut records = Vec::new();
    let mut seen = std::collections::HashSet::new();
    for (idx, raw) in body.lines().enumerate() {
        if raw.trim().is_empty() {
            continue;
        }
        let schema_err = |msg: String| CoreError::Schema {
            path: path.display().to_string(),
            line: idx + 1,
            msg,
        };
        let record: CandidateRecord =
            serde_json::from_str(raw).map_err(|e| schema_err(e.to_string()))?;
        record.validate().map_err(|e| schema_err(e.to_string()))?;
        if !seen.insert(record.id.clone()) {
            return Err(schema_err(format!("duplicate id `{}`", record.id)));
        }
        records.push(record);
    }
    Ok(records)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn record(id: &str) -> CandidateRecord {
        CandidateRecord {
            id: id.into(),
            prompt: "Q because".into(),
            candidates: vec!["water is wet".into(), "rain falls".into()],
        }
    }

    #[test]
    fn round_trips_and_preserves_order() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("candidates.jsonl");
        let records = vec![record("a"), record("b")];
        write_candidates(&path, &records).unwrap();
        assert_eq!(read_candidates(&path).unwrap(), records);
    }

    #[test]
    fn duplicates_and_empty_candidates_are_rejected() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("candidates.jsonl");
        write_candidates(&path, &[record("a")]).unwrap();
        let body = std::fs::read_to_string(&path).unwrap();
        std::fs::write(&path, format!("{body}{body}")).unwrap();
        assert!(matches!(
            read_candidates(&path),
            Err(CoreError::Schema { line: 2, .. })
        ));

        let mut bad = record("a");
        bad.candidates.clear();
        assert!(write_candidates(&path, &[bad]).is_err());
    }

    #[test]
    fn missing_file_is_a_missing_input() {
        assert!(matches!(
            read_candidates(Path::new("/no/candidates.jsonl")),
            Err(CoreError::MissingInput(_))
        ));
    }
}
