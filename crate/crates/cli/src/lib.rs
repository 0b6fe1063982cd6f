//! qaforge: turns a structured document corpus into an evaluated Q&A dataset.
//!
//! The pipeline is a chain of resumable stages over plain JSONL files:
//!
//! ```text
//! ingest -> chunk -> index -> tag -> genq -> gena -> metrics -> judge -> report
//!                      |                \-> recall / ablate      |
//!                      \-> (vectors)     \-> export-ft           \-> variance
//! ```
//!
//! Each stage records a marker naming its input digests; reruns with
//! unchanged inputs are skipped. Outputs are byte-deterministic for a fixed
//! config and seed — timestamps live only in `run.log`. Model traffic runs
//! through a ledgered client (`ledger.jsonl`), so the call count and purpose
//! of every completion a run made can be audited after the fact.

pub mod backends;
pub mod config;
pub mod error;
pub mod pipeline;
pub mod report;
pub mod stages;
pub mod stubchat;
