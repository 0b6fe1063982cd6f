//! Q&A dataset synthesis: prompts, tagging, generation, export, clustering.
//!
//! The flow mirrors the pipeline: a section is optionally tagged with
//! [`SupportingContext`] (locations/crops/cattle/diseases extracted by a
//! Yes-No + list prompt), questions are generated from the section under one
//! of three [`ContextMode`]s, answers come either from the same call
//! (combined) or from retrieval-augmented answering per question (separated),
//! and the resulting [`QAPair`]s are exported as a masked-prompt fine-tune
//! dataset. [`find_cross_region_questions`] clusters near-duplicate questions
//! appearing across regions so they can be held out from training.

mod answers;
mod combined;
mod context;
mod crossregion;
mod export;
mod questions;
mod template;

pub use answers::{
    answer_pairs_rag, generate_answer_rag, RagAnswer, DEFAULT_RAG_K, RAG_ANSWER_TEMPLATE,
};
pub use combined::{generate_combined, parse_qa_pairs, COMBINED_TEMPLATE};
pub use context::{
    extract_supporting_context, parse_supporting_context, SupportingContext,
    SUPPORTING_CONTEXT_TEMPLATE,
};
pub use crossregion::{
    find_cross_region_questions, holdout_split, ClusterMember, QuestionCluster,
    DEFAULT_MIN_REGIONS, DEFAULT_SIMILARITY_THRESHOLD,
};
pub use export::{
    export_finetune_dataset, finetune_records, read_finetune_records, ExportSummary,
    FineTuneRecord, RejectRecord,
};
pub use questions::{
    generate_questions, parse_numbered_questions, GenerationOptions,
    DEFAULT_GENERATION_TEMPERATURE, EXPECTED_MIN_QUESTIONS, MAX_QUESTIONS_PER_SECTION,
    QUESTION_TEMPLATE,
};
pub use template::PromptTemplate;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::index::IndexError;
use crate::llmclient::ClientError;

/// Errors from prompt handling and generation.
#[derive(Debug, Error)]
pub enum GenesisError {
    #[error("template `{template}`: {message}")]
    Template { template: String, message: String },
    #[error("template `{template}` is missing slot `{slot}`")]
    MissingSlot { template: String, slot: String },
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    #[error("section has no chunks: {0}")]
    MissingChunks(String),
    #[error("could not parse supporting context (after one reformat retry); raw: {raw:?}")]
    ContextParse { raw: String },
    #[error("completion contained no parseable questions; raw: {raw:?}")]
    NoQuestions { raw: String },
    #[error("completion contained no parseable question-answer pairs; raw: {raw:?}")]
    NoPairs { raw: String },
    #[error("unknown cluster id {0}")]
    UnknownCluster(usize),
    #[error(transparent)]
    Client(#[from] ClientError),
    #[error(transparent)]
    Index(#[from] IndexError),
    #[error("io error: {0}")]
    Io(#[from] std::io::Error),
}

/// How much context the generation prompt gets about the document's setting.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "mode", rename_all = "snake_case")]
pub enum ContextMode {
    /// No setting information; the metadata slot renders `{}`.
    NoContext,
    /// Only the originating region (state/country) is supplied.
    Region { region: String },
    /// Full extracted supporting context (locations, crops, cattle,
    /// diseases).
    External { context: SupportingContext },
}

impl ContextMode {
    /// Validates mode-specific requirements (a region must be non-empty).
    pub fn validate(&self) -> Result<(), GenesisError> {
        if let ContextMode::Region { region } = self {
            if region.trim().is_empty() {
                return Err(GenesisError::InvalidArgument(
                    "region context mode requires a non-empty region".into(),
                ));
            }
        }
        Ok(())
    }

    /// JSON rendered into the prompt's metadata slot. The three modes differ
    /// only in this value, so prompts across modes differ only in that slot.
    pub fn context_json(&self) -> String {
        match self {
            ContextMode::NoContext => "{}".to_string(),
            ContextMode::Region { region } => {
                serde_json::json!({ "region": region }).to_string()
            }
            ContextMode::External { context } => context.to_compact_json(),
        }
    }

    /// Short tag for ids/logs.
    pub fn tag(&self) -> &'static str {
        match self {
            ContextMode::NoContext => "none",
            ContextMode::Region { .. } => "region",
            ContextMode::External { .. } => "external",
        }
    }
}

/// How a pair's answer was produced.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum GenerationMethod {
    /// One call produced questions and answers together.
    Combined,
    /// Questions first, then one retrieval-augmented call per question.
    SeparateQuestionThenRag,
}

/// One generated question (and eventually its answer) with full provenance.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QAPair {
    pub qa_id: String,
    pub question: String,
    /// Absent until the answering step runs (separated mode).
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub answer: Option<String>,
    pub doc_id: String,
    pub section_path: Vec<usize>,
    /// Chunk ids whose spliced text covers the section text in the prompt.
    pub provenance_chunk_ids: Vec<String>,
    pub context_mode: ContextMode,
    pub generation: GenerationMethod,
    pub model_label: String,
    /// Wall-clock creation time. The pipeline leaves this unset so stage
    /// outputs stay byte-deterministic; timestamps live in the run log.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub created_at: Option<String>,
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn context_json_varies_only_by_mode_payload() {
        assert_eq!(ContextMode::NoContext.context_json(), "{}");
        assert_eq!(
            ContextMode::Region { region: "Washington".into() }.context_json(),
            r#"{"region":"Washington"}"#
        );
        let mut ctx = SupportingContext::default();
        ctx.mentions_crop = true;
        ctx.crops = vec!["wheat".into()];
        let json = ContextMode::External { context: ctx }.context_json();
        assert!(json.contains("\"crops\":[\"wheat\"]"));
    }

    #[test]
    fn empty_region_is_invalid() {
        assert!(ContextMode::Region { region: "  ".into() }.validate().is_err());
        assert!(ContextMode::Region { region: "Oregon".into() }.validate().is_ok());
        assert!(ContextMode::NoContext.validate().is_ok());
    }

    #[test]
    fn qa_pair_serialization_omits_unset_fields() {
        let pair = QAPair {
            qa_id: "d#s0#q000".into(),
            question: "How deep is wheat seeded?".into(),
            answer: None,
            doc_id: "d".into(),
            section_path: vec![0],
            provenance_chunk_ids: vec!["d#s0#c0".into()],
            context_mode: ContextMode::NoContext,
            generation: GenerationMethod::SeparateQuestionThenRag,
            model_label: "stub".into(),
            created_at: None,
        };
        let json = serde_json::to_string(&pair).unwrap();
        assert!(!json.contains("answer"));
        assert!(!json.contains("created_at"));
        let back: QAPair = serde_json::from_str(&json).unwrap();
        assert_eq!(back, pair);
    }
}
