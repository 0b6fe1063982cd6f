//! Exact vector retrieval over chunk embeddings.
//!
//! The index is deliberately exhaustive: every search scores every stored
//! vector with cosine similarity and sorts. No approximate structures — the
//! corpus sizes this pipeline targets (thousands of chunks) make exact search
//! cheap, and evaluation numbers must not depend on ANN recall luck. Ties are
//! broken by ascending chunk id so results are fully deterministic.

mod persist;
mod recall;
mod report;

pub use persist::{load_index, save_index};
pub use recall::{index_growth_ablation, recall_at_k, AblationPoint, Probe, ProbeOutcome, RecallReport};
pub use report::{ablation_csv, ablation_markdown, recall_csv, recall_markdown};

use std::collections::BTreeMap;

use thiserror::Error;

use crate::corpus::Chunk;
use crate::llmclient::{embed_text, ClientError, Embedder};

/// Errors from index construction, search, and persistence.
#[derive(Debug, Error)]
pub enum IndexError {
    #[error("invalid vector: {0}")]
    InvalidVector(String),
    #[error("dimension mismatch: expected {expected}, got {got}{}", context.as_deref().map(|c| format!(" ({c})")).unwrap_or_default())]
    DimensionMismatch {
        expected: usize,
        got: usize,
        context: Option<String>,
    },
    #[error("chunk id `{0}` is already indexed")]
    DuplicateChunkId(String),
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    #[error("embedding backend error: {0}")]
    Backend(#[from] ClientError),
    #[error("index file is corrupt: {0}")]
    Corrupt(String),
    #[error("io error: {0}")]
    Io(#[from] std::io::Error),
}

/// A fixed-dimension embedding with its Euclidean norm cached at construction.
#[derive(Debug, Clone, PartialEq)]
pub struct EmbeddingVector {
    values: Vec<f64>,
    norm: f64,
}

impl EmbeddingVector {
    /// Wraps raw values. All entries must be finite and there must be at
    /// least one dimension; a zero norm is representable but not indexable.
    pub fn new(values: Vec<f64>) -> Result<Self, IndexError> {
        if values.is_empty() {
            return Err(IndexError::InvalidVector("vector has zero dimensions".into()));
        }
        if let Some(bad) = values.iter().find(|v| !v.is_finite()) {
            return Err(IndexError::InvalidVector(format!(
                "vector contains non-finite value {bad}"
            )));
        }
        let norm = values.iter().map(|v| v * v).sum::<f64>().sqrt();
        Ok(Self { values, norm })
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn dims(&self) -> usize {
        self.values.len()
    }

    pub fn norm(&self) -> f64 {
        self.norm
    }
}

/// Cosine similarity between two vectors of equal dimension and positive norm.
pub fn cosine(a: &EmbeddingVector, b: &EmbeddingVector) -> Result<f64, IndexError> {
    if a.dims() != b.dims() {
        return Err(IndexError::DimensionMismatch {
            expected: a.dims(),
            got: b.dims(),
            context: None,
        });
    }
    if a.norm == 0.0 || b.norm == 0.0 {
        return Err(IndexError::InvalidVector(
            "cosine is undefined for zero-norm vectors".into(),
        ));
    }
    let dot: f64 = a.values.iter().zip(&b.values).map(|(x, y)| x * y).sum();
    Ok(dot / (a.norm * b.norm))
}

/// One search result: a chunk id and its cosine score.
#[derive(Debug, Clone, PartialEq)]
pub struct RetrievalHit {
    pub chunk_id: String,
    pub score: f64,
}

/// Exhaustive cosine index keyed by chunk id.
#[derive(Debug, Default, Clone)]
pub struct VectorIndex {
    dims: usize,
    entries: BTreeMap<String, EmbeddingVector>,
}

impl VectorIndex {
    pub fn new() -> Self {
        Self::default()
    }

    /// Inserts one vector. Rejects duplicate ids, dimension mismatches with
    /// the existing entries, and zero-norm vectors (naming the chunk).
    pub fn insert(&mut self, chunk_id: impl Into<String>, vector: EmbeddingVector) -> Result<(), IndexError> {
        let chunk_id = chunk_id.into();
        if vector.norm == 0.0 {
            return Err(IndexError::InvalidVector(format!(
                "chunk `{chunk_id}` has a zero-norm vector"
            )));
        }
        if self.entries.is_empty() {
            self.dims = vector.dims();
        } else if vector.dims() != self.dims {
            return Err(IndexError::DimensionMismatch {
                expected: self.dims,
                got: vector.dims(),
                context: Some(format!("chunk `{chunk_id}`")),
            });
        }
        if self.entries.contains_key(&chunk_id) {
            return Err(IndexError::DuplicateChunkId(chunk_id));
        }
        self.entries.insert(chunk_id, vector);
        Ok(())
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn dims(&self) -> usize {
        self.dims
    }

    pub fn contains(&self, chunk_id: &str) -> bool {
        self.entries.contains_key(chunk_id)
    }

    pub fn get(&self, chunk_id: &str) -> Option<&EmbeddingVector> {
        self.entries.get(chunk_id)
    }

    /// Iterates entries in ascending chunk-id order.
    pub fn iter(&self) -> impl Iterator<Item = (&str, &EmbeddingVector)> {
        self.entries.iter().map(|(k, v)| (k.as_str(), v))
    }

    /// Top-`k` entries by cosine similarity to `query`, ties broken by
    /// ascending chunk id. An empty index returns an empty list; `k` larger
    /// than the index returns everything.
    pub fn search(&self, query: &EmbeddingVector, k: usize) -> Result<Vec<RetrievalHit>, IndexError> {
        if k == 0 {
            return Err(IndexError::InvalidArgument("k must be >= 1".into()));
        }
        if self.entries.is_empty() {
            return Ok(Vec::new());
        }
        if query.dims() != self.dims {
            return Err(IndexError::DimensionMismatch {
                expected: self.dims,
                got: query.dims(),
                context: Some("query".into()),
            });
        }
        let mut hits: Vec<RetrievalHit> = Vec::with_capacity(self.entries.len());
        for (chunk_id, vector) in &self.entries {
            hits.push(RetrievalHit {
                chunk_id: chunk_id.clone(),
                score: cosine(query, vector)?,
            });
        }
        hits.sort_unstable_by(|a, b| {
            b.score
                .partial_cmp(&a.score)
                .expect("scores are finite")
                .then_with(|| a.chunk_id.cmp(&b.chunk_id))
        });
        hits.truncate(k);
        Ok(hits)
    }
}

/// Embeds one text into an [`EmbeddingVector`] via the given backend.
pub fn embed(text: &str, backend: &dyn Embedder) -> Result<EmbeddingVector, IndexError> {
    let values = embed_text(text, backend)?;
    EmbeddingVector::new(values)
}

/// Builds an index over chunks, embedding each chunk's text.
///
/// Requires at least one chunk; duplicate chunk ids and dimension drift are
/// construction errors.
pub fn build_index(chunks: &[Chunk], backend: &dyn Embedder) -> Result<VectorIndex, IndexError> {
    if chunks.is_empty() {
        return Err(IndexError::InvalidArgument(
            "cannot build an index over zero chunks".into(),
        ));
    }
    let mut index = VectorIndex::new();
    for chunk in chunks {
        index.insert(chunk.chunk_id.clone(), embed(&chunk.text, backend)?)?;
    }
    Ok(index)
}
