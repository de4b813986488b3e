//! End-to-end behavior of the training loop on a micro model: losses fall,
//! runs are reproducible, logs carry no wall-clock state, and divergence
//! rolls back to the last good parameters.

use eib_core::lm::LmShape;
use eib_core::model::{EibModel, ModelConfig, SerializeTemplates, TrainRecord};
use eib_core::text::{ExplanationText, TaskSample};
use eib_core::tokenizer::Vocab;
use eib_core::train::{train, EpochLog, TrainConfig};
use eib_core::CoreError;

fn corpus_text() -> [&'static str; 4] {
    [
        "Rain is water. Water makes people wet.",
        "Fire is hot. Heat burns skin.",
        "Ice is cold. Cold freezes water.",
        "Wind moves air. Air pushes leaves.",
    ]
}

fn micro_model() -> EibModel<f64> {
    let lm = LmShape {
        layers: 2,
        d_model: 8,
        n_heads: 2,
        ff_mult: 2,
        max_seq_len: 64,
    };
    let cfg = ModelConfig {
        encoder: lm.clone(),
        preservation: lm.clone(),
        generator: lm,
        bottleneck_k: 4,
        bottleneck_hidden: 6,
        encoder_max_len: 24,
        templates: SerializeTemplates::default(),
    };
    let mut sources: Vec<&str> = corpus_text().to_vec();
    sources.push("why what is true false context: output: candidate: refined:");
    EibModel::new(ModelConfig { ..cfg }, Vocab::build(sources), 5).unwrap()
}

fn make_records() -> Vec<TrainRecord> {
    corpus_text()
        .iter()
        .enumerate()
        .map(|(i, gold)| {
            // A crude corruption: reverse the word order of the gold text.
            let words: Vec<&str> = gold.split_whitespace().rev().collect();
            TrainRecord {
                sample: TaskSample {
                    id: format!("t{i}"),
                    task: "qa".into(),
                    context: format!("why is sample {i} what"),
                    output: "true".into(),
                },
                synthetic: ExplanationText::new(&words.join(" ")).unwrap(),
                gold: ExplanationText::new(gold).unwrap(),
            }
        })
        .collect()
}

fn fast_cfg() -> TrainConfig {
    TrainConfig {
        learning_rate: 3e-3,
        batch_size: 2,
        max_epochs: 4,
        early_stop_patience: 3,
        beta: 1e-4,
        mc_samples: 2,
        seed: 7,
    }
}

#[test]
fn losses_fall_and_the_best_epoch_is_kept() {
    let mut model = micro_model();
    let records = make_records();
    let (train_split, valid_split) = records.split_at(3);
    let mut logs: Vec<EpochLog> = Vec::new();

    let outcome = train(&mut model, train_split, valid_split, &fast_cfg(), |log| {
        logs.push(log.clone())
    })
    .unwrap();

    assert!(outcome.epochs_run >= 2);
    assert_eq!(
        logs.len(),
        2 * outcome.epochs_run,
        "one train and one valid entry per epoch"
    );

    let train_logs: Vec<&EpochLog> = logs.iter().filter(|l| l.split == "train").collect();
    let first = train_logs.first().unwrap().losses.total;
    let last = train_logs.last().unwrap().losses.total;
    assert!(
        last < first,
        "training loss did not fall: {first} -> {last}"
    );

    // The model must end at the best-validation parameters, not the last.
    let valid_logs: Vec<&EpochLog> = logs.iter().filter(|l| l.split == "valid").collect();
    let best_total = valid_logs
        .iter()
        .map(|l| l.losses.total)
        .fold(f64::INFINITY, f64::min);
    assert_eq!(outcome.best_validation.total, best_total);
    assert!(model.params.all_finite());
}

#[test]
fn identical_configs_give_identical_logs() {
    let records = make_records();
    let (train_split, valid_split) = records.split_at(3);
    let mut runs = Vec::new();
    for _ in 0..2 {
        let mut model = micro_model();
        let mut logs = Vec::new();
        train(&mut model, train_split, valid_split, &fast_cfg(), |log| {
            logs.push(serde_json::to_string(log).unwrap())
        })
        .unwrap();
        runs.push(logs.join("\n"));
    }
    assert_eq!(runs[0], runs[1]);
}

#[test]
fn epoch_logs_carry_no_wall_clock_fields() {
    let mut model = micro_model();
    let records = make_records();
    let (train_split, valid_split) = records.split_at(3);
    let cfg = TrainConfig {
        max_epochs: 1,
        ..fast_cfg()
    };
    let mut first = None;
    train(&mut model, train_split, valid_split, &cfg, |log| {
        first.get_or_insert_with(|| serde_json::to_value(log).unwrap());
    })
    .unwrap();

    let value = first.unwrap();
    let keys: Vec<&str> = value.as_object().unwrap().keys().map(|k| k.as_str()).collect();
    for key in &keys {
        let lower = key.to_lowercase();
        assert!(
            !lower.contains("time") && !lower.contains("date"),
            "log field {key} looks like wall-clock state"
        );
    }
    assert!(keys.contains(&"epoch"));
    assert!(keys.contains(&"split"));
    assert!(keys.contains(&"total"));
    assert!(keys.contains(&"compression"));
}

#[test]
fn divergence_restores_the_last_good_parameters() {
    let mut model = micro_model();
    let records = make_records();
    let (train_split, valid_split) = records.split_at(3);
    // The stable log-sum-exp and normalization layers shrug off merely large
    // parameters, so force magnitudes whose squares overflow to infinity.
    let cfg = TrainConfig {
        learning_rate: 1e200,
        max_epochs: 5,
        ..fast_cfg()
    };

    match train(&mut model, train_split, valid_split, &cfg, |_| {}) {
        Err(CoreError::Diverged { .. }) => {}
        other => panic!("expected divergence, got {other:?}"),
    }
    assert!(
        model.params.all_finite(),
        "model was not rolled back to finite parameters"
    );
}

#[test]
fn empty_splits_are_rejected() {
    let mut model = micro_model();
    let records = make_records();
    let cfg = fast_cfg();
    assert!(train(&mut model, &[], &records, &cfg, |_| {}).is_err());
    assert!(train(&mut model, &records, &[], &cfg, |_| {}).is_err());
}
