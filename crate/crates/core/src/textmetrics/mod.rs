//! Statistical dataset metrics (no model in the loop).
//!
//! - **Overlap** — KL divergence between Laplace-smoothed word distributions
//!   of a source text and its generated questions ([`overlap_score`]).
//! - **Diversity** — average pairwise word-mover distance between questions
//!   ([`diversity_score`]); the WMD itself ([`wmd`]) is solved as an *exact*
//!   optimal-transport problem over normalized bag-of-words masses, never an
//!   approximation. [`relaxed_wmd`] is the classic lower bound, offered for
//!   prefiltering only.
//! - **Details** — plain token counts of question and answer ([`details`]).
//!
//! Every metric value can be wrapped in a [`MetricRecord`] carrying its
//! parameters and a digest of the inputs, which is the JSON shape the
//! pipeline persists.

mod distribution;
mod diversity;
mod table;
mod transport;
mod wmd;

pub use distribution::{
    kl_divergence, overlap_score, overlap_score_with, union_vocab, word_distribution,
    KlDirection, OverlapOptions, WordDistribution,
};
pub use diversity::{
    details, diversity_score, diversity_score_with_labels, DetailCounts, SimilarityMatrix,
};
pub use table::WordEmbeddingTable;
pub use wmd::{relaxed_wmd, wmd, TransportFlow, TransportPlan};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use thiserror::Error;

/// Errors from the metric suite.
#[derive(Debug, Error)]
pub enum MetricsError {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    #[error("vocabulary mismatch: {0}")]
    VocabMismatch(String),
    #[error("all tokens of {which} are out of vocabulary: {tokens:?}")]
    AllTokensOov { which: String, tokens: Vec<String> },
    #[error("transport problem is infeasible: {0}")]
    Infeasible(String),
    #[error("embedding table error: {0}")]
    Table(String),
    #[error("io error: {0}")]
    Io(#[from] std::io::Error),
}

/// One persisted metric measurement: value, parameters, input provenance.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct MetricRecord {
    pub metric: String,
    pub value: f64,
    pub parameters: serde_json::Value,
    /// SHA-256 over the metric's inputs (length-prefixed), hex.
    pub inputs_digest: String,
}

/// Digest of a metric's input texts: order-sensitive, length-prefixed so
/// concatenation ambiguity cannot collide.
pub fn inputs_digest<S: AsRef<str>>(parts: &[S]) -> String {
    let mut hasher = Sha256::new();
    for p in parts {
        let bytes = p.as_ref().as_bytes();
        hasher.update((bytes.len() as u64).to_le_bytes());
        hasher.update(bytes);
    }
    hasher
        .finalize()
        .iter()
        .map(|b| format!("{b:02x}"))
        .collect()
}
