//! One training record: a task sample, its gold explanation, and a synthetic
//! corruption of that explanation.

use crate::lexicon::Lexicon;
use crate::ops::{
    corrupt_infilling, corrupt_negation, corrupt_repetition, corrupt_replacement,
    corrupt_shuffle, OpOutcome,
};
use eib_core::seed::stream_rng;
use eib_core::text::{ExplanationText, TaskSample};
use rand::seq::SliceRandom;
use rand::Rng;
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CorruptionKind {
    Repetition,
    Replacement,
    Negation,
    Shuffle,
    Infilling,
}

impl CorruptionKind {
    pub const ALL: [CorruptionKind; 5] = [
        CorruptionKind::Repetition,
        CorruptionKind::Replacement,
        CorruptionKind::Negation,
        CorruptionKind::Shuffle,
        CorruptionKind::Infilling,
    ];

    pub fn name(self) -> &'static str {
        match self {
            CorruptionKind::Repetition => "repetition",
            CorruptionKind::Replacement => "replacement",
            CorruptionKind::Negation => "negation",
            CorruptionKind::Shuffle => "shuffle",
            CorruptionKind::Infilling => "infilling",
        }
    }
}

/// A finished corpus record. `ops` lists the applied operations in order;
/// the record is reproducible from `(gold, sample, lexicon, pool, seed)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MixExplRecord {
    pub sample: TaskSample,
    pub synthetic: ExplanationText,
    pub gold: ExplanationText,
    pub ops: Vec<CorruptionKind>,
    pub seed: u64,
}

impl MixExplRecord {
    pub fn validate(&self) -> eib_core::error::Result<()> {
        use eib_core::CoreError;
        self.sample.validate()?;
        if self.synthetic.text() == self.gold.text() {
            return Err(CoreError::Config(format!(
                "record {}: synthetic equals gold",
                self.sample.id
            )));
        }
        if self.ops.len() < 2 || self.ops.len() > 4 {
            return Err(CoreError::Config(format!(
                "record {}: {} operations applied, want 2 to 4",
                self.sample.id,
                self.ops.len()
            )));
        }
        let mut kinds = self.ops.clone();
        kinds.sort_by_key(|k| k.name());
        kinds.dedup();
        if kinds.len() != self.ops.len() {
            return Err(CoreError::Config(format!(
                "record {}: repeated operation kind",
                self.sample.id
            )));
        }
        Ok(())
    }
}

/// Outcome of building one record. Inputs where no usable corruption exists
/// (say, a one-token gold) are reported rather than dropped silently.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum RecordOutcome {
    Record(MixExplRecord),
    Skip { id: String, reason: String },
}

fn apply_kind(
    kind: CorruptionKind,
    e: &ExplanationText,
    pool: &[ExplanationText],
    lex: &Lexicon,
    rng: &mut impl Rng,
) -> OpOutcome {
    match kind {
        CorruptionKind::Repetition => corrupt_repetition(e, rng),
        CorruptionKind::Replacement => corrupt_replacement(e, pool, lex, rng),
        CorruptionKind::Negation => corrupt_negation(e, lex, rng),
        CorruptionKind::Shuffle => corrupt_shuffle(e, rng),
        // An unusable pool just means this kind cannot apply here.
        CorruptionKind::Infilling => {
            corrupt_infilling(e, pool, rng).unwrap_or(OpOutcome::NoOp)
        }
    }
}

/// Corrupts `gold` with 2, 3 or 4 distinct operations, compounding them in
/// draw order. A flagged no-op consumes its kind and the next kind is drawn
/// instead, so at most all five kinds are tried.
pub fn build_record(
    gold: &ExplanationText,
    sample: &TaskSample,
    lex: &Lexicon,
    pool: &[ExplanationText],
    seed: u64,
) -> RecordOutcome {
    let mut rng = stream_rng(seed, "mixexpl-record", 0);
    let want: usize = rng.gen_range(2..=4);
    let mut kinds = CorruptionKind::ALL.to_vec();
    kinds.shuffle(&mut rng);

    let mut current = gold.clone();
    let mut applied = Vec::new();
    for kind in kinds {
        if applied.len() == want {
            break;
        }
        if let OpOutcome::Changed(next) = apply_kind(kind, &current, pool, lex, &mut rng) {
            current = next;
            applied.push(kind);
        }
    }

    if applied.len() < 2 {
        return RecordOutcome::Skip {
            id: sample.id.clone(),
            reason: format!(
                "only {} of the five operations could apply",
                applied.len()
            ),
        };
    }
    if current.text() == gold.text() {
        // Possible in principle if later ops exactly undo earlier ones.
        return RecordOutcome::Skip {
            id: sample.id.clone(),
            reason: "corruptions cancelled out; synthetic equals gold".into(),
        };
    }
    RecordOutcome::Record(MixExplRecord {
        sample: sample.clone(),
        synthetic: current,
        gold: gold.clone(),
        ops: applied,
        seed,
    })
}
