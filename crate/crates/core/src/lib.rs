//! Corpus quality filtering and zero-shot benchmark toolkit.
//!
//! The crate is organised as a pipeline of small modules:
//!
//! * [`ingest`] streams JSON-lines corpora and persists filter manifests.
//! * [`filters`] holds the two-stage document rejection chain.
//! * [`tokenizer`] defines the [`tokenizer::Tokenizer`] trait and a byte-level BPE model.
//! * [`textmetrics`] measures fertility and throughput.
//! * [`decoder`] samples labels through a token trie (constrained generation).
//! * [`backends`] is the model-inference boundary (mock and HTTP).
//! * [`harness`] renders prompts and runs the repeated evaluation protocol.
//! * [`stats`] scores runs: weighted F1, confidence intervals, ranks and reports.

pub mod backends;
pub mod decoder;
pub mod filters;
pub mod hash;
pub mod harness;
pub mod ingest;
pub mod stats;
pub mod textmetrics;
pub mod tokenizer;

pub use ingest::Document;
pub use tokenizer::{TokenId, Tokenizer};
