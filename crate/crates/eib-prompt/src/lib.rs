//! Prompting harness: renders task samples into prompts and collects initial
//! explanation candidates from a pluggable backend.
//!
//! [`template::PromptTemplate`] turns a sample into a prompt string;
//! [`backend::generate_candidates`] runs it through a fixture file, a local
//! checkpointed tiny model, or a remote HTTP API, then cleans the raw
//! completions. Candidate sets travel between pipeline stages as JSONL via
//! [`candidates`].

pub mod backend;
pub mod candidates;
pub mod fixture;
pub mod postprocess;
pub mod template;

pub use backend::{
    generate_candidates, BackendHandle, LocalTinyBackend, RemoteBackend, REMOTE_API_KEY_ENV,
    REMOTE_ENDPOINT_ENV,
};
pub use candidates::{read_candidates, write_candidates, CandidateRecord};
pub use fixture::{hash_prompt, FixtureBackend};
pub use postprocess::{clean_completion, prompt_connective};
pub use template::{builtin_names, PromptTemplate};

/// Version of this crate, surfaced in run manifests.
pub const VERSION: &str = env!("CARGO_PKG_VERSION");
