//! Question generation from a section's chunks.

use std::collections::BTreeMap;
use std::sync::OnceLock;

use regex::Regex;

use crate::corpus::{splice_chunks, Chunk};
use crate::llmclient::{ChatClient, ClientHandle, CompletionRequest};

use super::{ContextMode, GenerationMethod, GenesisError, PromptTemplate, QAPair};

/// Default template for the question-generation prompt.
pub const QUESTION_TEMPLATE: &str = include_str!("templates/question_generation.txt");

/// Below this many parsed questions per section a warning is logged: short
/// sections legitimately yield few, but a systematic shortfall usually means
/// the model is ignoring the "as many as possible" instruction.
pub const EXPECTED_MIN_QUESTIONS: usize = 5;

/// Above this many parsed questions the list is truncated (with a warning):
/// runaway enumerations past this point are almost always rephrasings.
pub const MAX_QUESTIONS_PER_SECTION: usize = 15;

/// Generation calls default to temperature 0.7: some sampling variety is
/// wanted when writing questions, unlike judging (which runs at 0).
pub const DEFAULT_GENERATION_TEMPERATURE: f64 = 0.7;

/// Knobs for one generation call.
#[derive(Debug, Clone)]
pub struct GenerationOptions {
    pub model_label: String,
    pub context_mode: ContextMode,
    /// Few-shot examples spliced into the prompt's `{examples}` slot.
    pub examples: String,
    /// Document source string for the prompt ("extension", "journal", ...).
    pub source: String,
    /// Document title for the prompt.
    pub title: String,
    /// Sampling temperature for question/pair generation.
    pub temperature: f64,
}

impl GenerationOptions {
    pub fn new(model_label: &str, source: &str, title: &str) -> Self {
        Self {
            model_label: model_label.to_string(),
            context_mode: ContextMode::NoContext,
            examples: String::new(),
            source: source.to_string(),
            title: title.to_string(),
            temperature: DEFAULT_GENERATION_TEMPERATURE,
        }
    }

    pub fn with_context(mut self, mode: ContextMode) -> Self {
        self.context_mode = mode;
        self
    }

    pub fn with_examples(mut self, examples: &str) -> Self {
        self.examples = examples.to_string();
        self
    }

    pub fn with_temperature(mut self, temperature: f64) -> Self {
        self.temperature = temperature;
        self
    }
}

fn marker_re() -> &'static Regex {
    static RE: OnceLock<Regex> = OnceLock::new();
    // Leading list markers: "12." / "12)" / "12:" / "-" / "*" / "•".
    RE.get_or_init(|| Regex::new(r"^\s*(?:\d+\s*[.):]|[-*\u{2022}])\s*").expect("marker regex"))
}

/// Extracts questions from a completion, one per enumerated line.
///
/// A line counts as a question if it carries a list marker or ends with a
/// question mark; markers are stripped. Blank and prose lines are skipped.
pub fn parse_numbered_questions(raw: &str) -> Vec<String> {
    let mut questions = Vec::new();
    for line in raw.lines() {
        let trimmed = line.trim();
        if trimmed.is_empty() {
            continue;
        }
        let without_marker = marker_re().replace(trimmed, "");
        let had_marker = without_marker.len() != trimmed.len();
        let text = without_marker.trim();
        if text.is_empty() {
            continue;
        }
        if had_marker || text.ends_with('?') {
            questions.push(text.to_string());
        }
    }
    questions
}

/// Selects the chunks of one section, in chunk order, and splices their text.
pub(super) fn section_chunks<'c>(
    chunks: &'c [Chunk],
    doc_id: &str,
    section_path: &[usize],
) -> Result<(Vec<&'c Chunk>, String), GenesisError> {
    let mut selected: Vec<&Chunk> =
        chunks.iter().filter(|c| c.doc_id == doc_id && c.section_path == section_path).collect();
    if selected.is_empty() {
        return Err(GenesisError::MissingChunks(format!(
            "doc `{doc_id}` section {section_path:?}"
        )));
    }
    selected.sort_by_key(|c| c.char_span.0);
    let owned: Vec<Chunk> = selected.iter().map(|c| (*c).clone()).collect();
    let text = splice_chunks(&owned).map_err(|e| GenesisError::InvalidArgument(e.to_string()))?;
    Ok((selected, text))
}

/// Generates questions for one section of one document.
///
/// The section text sent to the model is spliced back together from the
/// section's `chunks`, so the returned pairs carry the covering chunk ids as
/// provenance. Answers are left unset; see [`super::generate_answer_rag`] and
/// [`super::generate_combined`] for the two answering paths.
pub fn generate_questions(
    client: &ClientHandle,
    template: &PromptTemplate,
    chunks: &[Chunk],
    doc_id: &str,
    section_path: &[usize],
    opts: &GenerationOptions,
) -> Result<Vec<QAPair>, GenesisError> {
    opts.context_mode.validate()?;
    let (selected, section_text) = section_chunks(chunks, doc_id, section_path)?;

    let mut slots: BTreeMap<&str, String> = BTreeMap::new();
    slots.insert("context", opts.context_mode.context_json());
    slots.insert("source", opts.source.clone());
    slots.insert("title", opts.title.clone());
    slots.insert("section", section_text);
    slots.insert("examples", opts.examples.clone());
    let messages = template.render(&slots)?;

    let mut request =
        CompletionRequest::new(&opts.model_label, messages)
            .with_purpose("genq")
            .with_temperature(opts.temperature);
    if let Some(budget) = template.max_tokens() {
        request = request.with_max_tokens(budget);
    }
    let raw = client.complete(&request)?;

    let mut questions = parse_numbered_questions(&raw);
    if questions.is_empty() {
        return Err(GenesisError::NoQuestions { raw });
    }
    if questions.len() > MAX_QUESTIONS_PER_SECTION {
        log::warn!(
            "doc `{doc_id}` section {section_path:?}: {} questions parsed, keeping first {}",
            questions.len(),
            MAX_QUESTIONS_PER_SECTION
        );
        questions.truncate(MAX_QUESTIONS_PER_SECTION);
    } else if questions.len() < EXPECTED_MIN_QUESTIONS {
        log::warn!(
            "doc `{doc_id}` section {section_path:?}: only {} questions parsed",
            questions.len()
        );
    }

    let path_tag: String =
        section_path.iter().map(|p| p.to_string()).collect::<Vec<_>>().join(".");
    let provenance: Vec<String> = selected.iter().map(|c| c.chunk_id.clone()).collect();
    let pairs = questions
        .into_iter()
        .enumerate()
        .map(|(i, question)| QAPair {
            qa_id: format!("{doc_id}#s{path_tag}#q{i:03}"),
            question,
            answer: None,
            doc_id: doc_id.to_string(),
            section_path: section_path.to_vec(),
            provenance_chunk_ids: provenance.clone(),
            context_mode: opts.context_mode.clone(),
            generation: GenerationMethod::SeparateQuestionThenRag,
            model_label: opts.model_label.clone(),
            created_at: None,
        })
        .collect();
    Ok(pairs)
}
