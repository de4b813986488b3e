//! Synthetic corruption corpus builder.
//!
//! A training corpus for explanation refinement needs pairs of flawed and
//! clean explanations. This crate manufactures the flawed side: it takes
//! gold explanations and damages them with a mix of textual corruption
//! operations (span repetition, antonym and sentence replacement, polarity
//! flips, sentence shuffling, and retrieval-based infilling), then packages
//! the results into train/valid/test split files.
//!
//! Corruption is deterministic per record: every record's RNG derives from
//! the corpus seed and the sample id, so builds are reproducible and records
//! can be regenerated independently.

pub mod corpus;
pub mod lexicon;
pub mod ops;
pub mod record;

pub use corpus::{build_corpus, load_sources, read_split, BuildManifest, BuildOptions, SourcePair};
pub use lexicon::Lexicon;
pub use record::{build_record, CorruptionKind, MixExplRecord, RecordOutcome};

/// Version of this crate, surfaced in run manifests.
pub const VERSION: &str = env!("CARGO_PKG_VERSION");
