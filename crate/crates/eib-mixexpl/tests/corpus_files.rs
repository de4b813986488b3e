//! End-to-end corpus builds on a toy source: split arithmetic, determinism,
//! and loader diagnostics.

use eib_core::CoreError;
use eib_mixexpl::corpus::read_split;
use eib_mixexpl::{build_corpus, load_sources, BuildOptions, Lexicon};
use std::path::PathBuf;

fn toy_source_lines() -> Vec<String> {
    let texts = [
        "Water makes people wet. Rain is falling water.",
        "Fire is hot. Heat burns dry wood quickly.",
        "Ice is cold water. Cold air freezes it solid.",
        "The sun shines during the day. Light makes the air warm.",
        "Wind blows the leaves. Strong gusts push small branches.",
        "Snow covers the ground. The white layer feels cold.",
        "Plants grow in spring. Warm rain helps the green shoots.",
        "Rivers flow to the sea. Water follows the low ground.",
        "Clouds carry heavy water. Dark skies bring rain.",
        "The moon rises at night. Its pale light looks cold.",
    ];
    texts
        .iter()
        .enumerate()
        .map(|(i, t)| {
            format!(
                concat!(
                    "{{\"id\":\"toy-{i}\",\"task\":\"qa\",",
                    "\"context\":\"why does fact {i} hold\",",
                    "\"output\":\"answer {i}\",\"explanation\":\"{t}\"}}"
                ),
                i = i,
                t = t
            )
        })
        .collect()
}

fn write_source(dir: &std::path::Path, name: &str, lines: &[String]) -> PathBuf {
    let path = dir.join(name);
    std::fs::write(&path, lines.join("\n") + "\n").unwrap();
    path
}

#[test]
fn ten_pairs_with_default_ratios_split_eight_one_one() {
    let dir = tempfile::tempdir().unwrap();
    let src = write_source(dir.path(), "toy.jsonl", &toy_source_lines());
    let pairs = load_sources(&[src]).unwrap();
    assert_eq!(pairs.len(), 10);

    let out = dir.path().join("out");
    let manifest = build_corpus(
        &pairs,
        &Lexicon::bundled(),
        &out,
        &BuildOptions {
            seed: 11,
            ratios: Some([0.8, 0.1, 0.1]),
        },
    )
    .unwrap();

    let train = read_split(&out.join("train.jsonl")).unwrap();
    let valid = read_split(&out.join("valid.jsonl")).unwrap();
    let test = read_split(&out.join("test.jsonl")).unwrap();
    assert_eq!(
        [train.len(), valid.len(), test.len()],
        [8, 1, 1],
        "skips: {:?}",
        manifest.skipped
    );

    // Sample-disjoint splits: no id appears twice anywhere.
    let mut ids: Vec<&str> = train
        .iter()
        .chain(&valid)
        .chain(&test)
        .map(|r| r.sample.id.as_str())
        .collect();
    ids.sort();
    let before = ids.len();
    ids.dedup();
    assert_eq!(ids.len(), before);

    assert_eq!(manifest.total_pairs, 10);
    assert_eq!(manifest.unused_pairs, 0);
    assert_eq!(manifest.per_source.values().sum::<usize>(), 10);
}

#[test]
fn rebuilds_are_byte_identical() {
    let dir = tempfile::tempdir().unwrap();
    let src = write_source(dir.path(), "toy.jsonl", &toy_source_lines());
    let pairs = load_sources(&[src]).unwrap();
    let opts = BuildOptions {
        seed: 5,
        ratios: Some([0.8, 0.1, 0.1]),
    };

    let out_a = dir.path().join("a");
    let out_b = dir.path().join("b");
    build_corpus(&pairs, &Lexicon::bundled(), &out_a, &opts).unwrap();
    build_corpus(&pairs, &Lexicon::bundled(), &out_b, &opts).unwrap();

    for name in [
        "train.jsonl",
        "valid.jsonl",
        "test.jsonl",
        "build_manifest.json",
    ] {
        let a = std::fs::read(out_a.join(name)).unwrap();
        let b = std::fs::read(out_b.join(name)).unwrap();
        assert_eq!(a, b, "{name} differs between identical builds");
        assert!(!a.is_empty());
    }
}

#[test]
fn different_seeds_give_different_assignments() {
    let dir = tempfile::tempdir().unwrap();
    let src = write_source(dir.path(), "toy.jsonl", &toy_source_lines());
    let pairs = load_sources(&[src]).unwrap();

    let out_a = dir.path().join("a");
    let out_b = dir.path().join("b");
    for (out, seed) in [(&out_a, 1u64), (&out_b, 2u64)] {
        build_corpus(
            &pairs,
            &Lexicon::bundled(),
            out,
            &BuildOptions {
                seed,
                ratios: Some([0.8, 0.1, 0.1]),
            },
        )
        .unwrap();
    }
    let a = std::fs::read(out_a.join("train.jsonl")).unwrap();
    let b = std::fs::read(out_b.join("train.jsonl")).unwrap();
    assert_ne!(a, b);
}

#[test]
fn manifest_carries_no_wall_clock_state() {
    let dir = tempfile::tempdir().unwrap();
    let src = write_source(dir.path(), "toy.jsonl", &toy_source_lines());
    let pairs = load_sources(&[src]).unwrap();
    let out = dir.path().join("out");
    build_corpus(
        &pairs,
        &Lexicon::bundled(),
        &out,
        &BuildOptions {
            seed: 3,
            ratios: Some([0.8, 0.1, 0.1]),
        },
    )
    .unwrap();

    let manifest: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(out.join("build_manifest.json")).unwrap())
            .unwrap();
    fn check_keys(v: &serde_json::Value) {
        if let Some(obj) = v.as_object() {
            for (k, inner) in obj {
                let lower = k.to_lowercase();
                for banned in ["time", "date", "stamp"] {
                    assert!(!lower.contains(banned), "manifest key {k} looks like wall-clock state");
                }
                check_keys(inner);
            }
        } else if let Some(arr) = v.as_array() {
            arr.iter().for_each(check_keys);
        }
    }
    check_keys(&manifest);
}

#[test]
fn malformed_line_reports_file_and_line() {
    let dir = tempfile::tempdir().unwrap();
    let mut lines = toy_source_lines();
    lines.insert(4, "{\"id\":\"broken\"}".to_string());
    let src = write_source(dir.path(), "toy.jsonl", &lines);

    match load_sources(&[src.clone()]) {
        Err(CoreError::Schema { path, line, .. }) => {
            assert!(path.ends_with("toy.jsonl"));
            assert_eq!(line, 5);
        }
        other => panic!("expected schema error, got {other:?}"),
    }
}

#[test]
fn duplicate_ids_across_files_are_rejected() {
    let dir = tempfile::tempdir().unwrap();
    let lines = toy_source_lines();
    let a = write_source(dir.path(), "a.jsonl", &lines[..5].to_vec());
    let b = write_source(dir.path(), "b.jsonl", &lines[3..].to_vec());

    match load_sources(&[a, b]) {
        Err(CoreError::Schema { path, line, msg }) => {
            assert!(path.ends_with("b.jsonl"));
            assert_eq!(line, 1);
            assert!(msg.contains("duplicate"));
        }
        other => panic!("expected duplicate id error, got {other:?}"),
    }
}

#[test]
fn unknown_fields_are_schema_errors() {
    let dir = tempfile::tempdir().unwrap();
    let mut lines = toy_source_lines();
    let withextra = lines[0].replace("}", ",\"bonus\":1}");
    lines[0] = withextra;
    let src = write_source(dir.path(), "toy.jsonl", &lines);
    assert!(matches!(
        load_sources(&[src]),
        Err(CoreError::Schema { line: 1, .. })
    ));
}

#[test]
fn missing_source_file_is_a_missing_input() {
    let missing = PathBuf::from("/nonexistent/source.jsonl");
    assert!(matches!(
        load_sources(&[missing]),
        Err(CoreError::MissingInput(_))
    ));
}
