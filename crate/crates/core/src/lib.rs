//! Core library for building evaluated Q&A datasets from document corpora.
//!
//! The crate is organized around the pipeline's data flow:
//!
//! * [`corpus`] — parsed documents, token-window chunking, manifests.
//! * [`llmclient`] — chat-completion and embedding backends behind small
//!   traits, with retries, rate limiting, a call ledger, and record/replay
//!   fixtures for offline runs.
//! * [`index`] — exact cosine vector search, recall@k, and index-growth
//!   ablations.
//! * [`genesis`] — prompt templates, supporting-context tagging, question
//!   and answer generation, fine-tune export, cross-region clustering.
//! * [`textmetrics`] — corpus-level statistics: smoothed KL overlap and
//!   word-mover diversity via exact optimal transport.
//! * [`judge`] — LLM-as-judge scoring with strict parsing and variance
//!   estimation.
//! * [`text`] — the shared whitespace/punctuation tokenizer all of the
//!   above agree on.

pub mod corpus;
pub mod genesis;
pub mod index;
pub mod judge;
pub mod llmclient;
pub mod text;
pub mod textmetrics;

pub use corpus::{Chunk, CorpusManifest, DocumentRecord, ManifestEntry, Section};
pub use genesis::{ContextMode, FineTuneRecord, QAPair, QuestionCluster, SupportingContext};
pub use index::{EmbeddingVector, RecallReport, RetrievalHit, VectorIndex};
pub use judge::{JudgeVerdict, ScoreScale, ScoreValue, VarianceReport};
pub use llmclient::{
    CallLedger, ChatClient, ChatMessage, ClientHandle, CompletionRequest, Embedder, Role,
};
pub use textmetrics::{SimilarityMatrix, TransportPlan, WordDistribution, WordEmbeddingTable};
