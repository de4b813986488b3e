//! The canned-fixture backend: deterministic candidates keyed by a sha-256
//! hash of the exact prompt string.
//!
//! Fixture files are JSONL. Each line carries `candidates` plus exactly one
//! of `prompt` (hashed at load time, convenient to author) or
//! `prompt_sha256` (precomputed, survives prompts one would rather not store
//! verbatim). Because the key is the full prompt, any drift in template
//! rendering shows up as a loud missing-fixture error instead of silently
//! serving stale candidates.

use std::collections::HashMap;
use std::path::Path;

use eib_core::checkpoint::sha256_hex;
use eib_core::error::{CoreError, Result};
use serde::Deserialize;

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct FixtureLine {
    #[serde(default)]
    prompt: Option<String>,
    #[serde(default)]
    prompt_sha256: Option<String>,
    candidates: Vec<String>,
}

#[derive(Debug)]
pub struct FixtureBackend {
    entries: HashMap<String, Vec<String>>,
    origin: String,
}

impl FixtureBackend {
    pub fn load(path: &Path) -> Result<Self> {
        if !path.is_file() {
            return Err(CoreError::MissingInput(path.to_path_buf()));
        }
        let origin = path.display().to_string();
        let body = std::fs::read_to_string(path)?;
        let mut entries = HashMap::new();
        for (idx, raw) in body.lines().enumerate() {
            if raw.trim().is_empty() {
                continue;
            }
            let schema_err = |msg: String| CoreError::Schema {
                path: origin.clone(),
                line: idx + 1,
                msg,
            };
            let line: FixtureLine =
                serde_json::from_str(raw).map_err(|e| schema_err(e.to_string()))?;
            let key = match (&line.prompt, &line.prompt_sha256) {
                (Some(p), None) => hash_prompt(p),
                (None, Some(h)) => {
                    let h = h.to_lowercase();
                    if h.len() != 64 || !h.chars().all(|c| c.is_ascii_hexdigit()) {
                        return Err(schema_err(format!(
                            "prompt_sha256 `{h}` is not 64 hex characters"
                        )));
                    }
                    h
                }
                _ => {
                    return Err(schema_err(
                        "need exactly one of `prompt` or `prompt_sha256`".into(),
                    ))
                }
            };
            if line.candidates.is_empty() {
                return Err(schema_err("`candidates` must not be empty".into()));
            }
            if entries.insert(key.clone(), line.candidates).is_some() {
                return Err(schema_err(format!("duplicate fixture for hash {key}")));
            }
        }
        Ok(Self { entries, origin })
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    /// Returns at least `num_candidates` stored candidates for the prompt.
    pub(crate) fn complete(&self, prompt: &str, num_candidates: usize) -> Result<Vec<String>> {
        let key = hash_prompt(prompt);
        let stored = self.entries.get(&key).ok_or_else(|| {
            CoreError::Config(format!(
                "fixture {} has no entry for prompt hash {key} (prompt starts {:?})",
                self.origin,
                prompt.chars().take(40).collect::<String>()
            ))
        })?;
        if stored.len() < num_candidates {
            return Err(CoreError::Config(format!(
                "fixture entry {key} holds {} candidates but {num_candidates} were requested",
                stored.len()
            )));
        }
        Ok(stored.clone())
    }
}

/// The key under which a prompt's candidates are stored.
pub fn hash_prompt(prompt: &str) -> String {
    sha256_hex(prompt.as_bytes())
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::io::Write as _;

    fn write_fixture(lines: &[&str]) -> (tempfile::TempDir, std::path::PathBuf) {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("fixtures.jsonl");
        let mut f = std::fs::File::create(&path).unwrap();
        for l in lines {
            writeln!(f, "{l}").unwrap();
        }
        (dir, path)
    }

    #[test]
    fn serves_candidates_by_prompt_and_by_hash() {
        let hash = hash_prompt("Q2 because");
        let (_dir, path) = write_fixture(&[
            r#"{"prompt": "Q1 because", "candidates": ["water is wet", "rain falls"]}"#,
            &format!(r#"{{"prompt_sha256": "{hash}", "candidates": ["stored by hash"]}}"#),
        ]);
        let backend = FixtureBackend::load(&path).unwrap();
        assert_eq!(backend.len(), 2);
        assert_eq!(
            backend.complete("Q1 because", 2).unwrap(),
            ["water is wet", "rain falls"]
        );
        assert_eq!(backend.complete("Q2 because", 1).unwrap(), ["stored by hash"]);
    }

    #[test]
    fn unknown_prompts_and_short_entries_error() {
        let (_dir, path) =
            write_fixture(&[r#"{"prompt": "Q1 because", "candidates": ["only one"]}"#]);
        let backend = FixtureBackend::load(&path).unwrap();
        let err = backend.complete("never seen", 1).unwrap_err();
        assert!(err.to_string().contains("no entry for prompt hash"));
        assert!(backend.complete("Q1 because", 2).is_err());
    }

    #[test]
    fn malformed_lines_name_the_file_and_line() {
        let (_dir, path) = write_fixture(&[
            r#"{"prompt": "ok", "candidates": ["a"]}"#,
            r#"{"candidates": ["missing key"]}"#,
        ]);
        match FixtureBackend::load(&path).unwrap_err() {
            CoreError::Schema { line, msg, .. } => {
                assert_eq!(line, 2);
                assert!(msg.contains("exactly one"));
            }
            other => panic!("unexpected error {other}"),
        }
    }

    #[test]
    fn bad_hashes_duplicates_and_empty_candidate_lists_are_rejected() {
        let (_dir, path) =
            write_fixture(&[r#"{"prompt_sha256": "xyz", "candidates": ["a"]}"#]);
        assert!(FixtureBackend::load(&path).is_err());

        let (_dir, path) = write_fixture(&[
            r#"{"prompt": "same", "candidates": ["a"]}"#,
            r#"{"prompt": "same", "candidates": ["b"]}"#,
        ]);
        assert!(FixtureBackend::load(&path).is_err());

        let (_dir, path) = write_fixture(&[r#"{"prompt": "p", "candidates": []}"#]);
        assert!(FixtureBackend::load(&path).is_err());
    }

    #[test]
    fn missing_file_is_a_missing_input() {
        let err = FixtureBackend::load(Path::new("/no/such/fixtures.jsonl")).unwrap_err();
        assert!(matches!(err, CoreError::MissingInput(_)));
    }
}
