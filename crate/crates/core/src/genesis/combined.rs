//! Combined generation: one call yields question-answer pairs directly.

use std::collections::BTreeMap;

use crate::corpus::Chunk;
use crate::llmclient::{ChatClient, ClientHandle, CompletionRequest};

use super::questions::GenerationOptions;
use super::{GenerationMethod, GenesisError, PromptTemplate, QAPair};

/// Default template for the combined question-plus-answer prompt.
pub const COMBINED_TEMPLATE: &str = include_str!("templates/combined_generation.txt");

/// Parses `Q:`/`A:` transcript lines into (question, answer) pairs.
///
/// A `Q:` line opens a pair; subsequent unmarked lines extend whichever part
/// is open (questions spill until an `A:` appears, answers until the next
/// `Q:`). Pairs whose answer never arrives are dropped with a warning rather
/// than silently paired with the next question's text.
pub fn parse_qa_pairs(raw: &str) -> Vec<(String, String)> {
    enum State {
        Idle,
        InQuestion(String),
        InAnswer(String, String),
    }
    let mut pairs = Vec::new();
    let mut state = State::Idle;
    let mut dropped = 0usize;

    let finish = |state: State, pairs: &mut Vec<(String, String)>, dropped: &mut usize| {
        match state {
            State::Idle => {}
            State::InQuestion(_) => *dropped += 1,
            State::InAnswer(q, a) => {
                let q = q.trim().to_string();
                let a = a.trim().to_string();
                if q.is_empty() || a.is_empty() {
                    *dropped += 1;
                } else {
                    pairs.push((q, a));
                }
            }
        }
    };

    for line in raw.lines() {
        let trimmed = line.trim();
        // Strip an optional enumeration prefix before the Q:/A: marker
        // ("1. Q: ..." is common).
        let unnumbered = trimmed
            .strip_prefix(|c: char| c.is_ascii_digit())
            .map(|rest| {
                rest.trim_start_matches(|c: char| c.is_ascii_digit())
                    .trim_start_matches(['.', ')', ':'])
                    .trim_start()
            })
            .unwrap_or(trimmed);
        let lower = unnumbered.to_ascii_lowercase();
        if let Some(q) = lower
            .starts_with("q:")
            .then(|| unnumbered[2..].trim())
            .or_else(|| lower.starts_with("question:").then(|| unnumbered[9..].trim()))
        {
            finish(
                std::mem::replace(&mut state, State::InQuestion(q.to_string())),
                &mut pairs,
                &mut dropped,
            );
        } else if let Some(a) = lower
            .starts_with("a:")
            .then(|| unnumbered[2..].trim())
            .or_else(|| lower.starts_with("answer:").then(|| unnumbered[7..].trim()))
        {
            state = match std::mem::replace(&mut state, State::Idle) {
                State::InQuestion(q) => State::InAnswer(q, a.to_string()),
                State::InAnswer(q, mut acc) => {
                    // A second A: without a new Q: continues the same answer.
                    acc.push('\n');
                    acc.push_str(a);
                    State::InAnswer(q, acc)
                }
                State::Idle => {
                    dropped += 1;
                    State::Idle
                }
            };
        } else if !trimmed.is_empty() {
            match &mut state {
                State::InQuestion(q) => {
                    q.push(' ');
                    q.push_str(trimmed);
                }
                State::InAnswer(_, a) => {
                    a.push(' ');
                    a.push_str(trimmed);
                }
                State::Idle => {}
            }
        }
    }
    finish(state, &mut pairs, &mut dropped);
    if dropped > 0 {
        log::warn!("dropped {dropped} incomplete Q/A fragment(s) from combined completion");
    }
    pairs
}

/// Generates answered pairs for one section in a single call.
///
/// Mirrors [`super::generate_questions`] in selection and provenance, but the
/// completion is parsed as `Q:`/`A:` pairs and every returned [`QAPair`]
/// already has its answer. Ids use a `cq` marker so combined and separated
/// datasets built from the same corpus cannot collide.
pub fn generate_combined(
    client: &ClientHandle,
    template: &PromptTemplate,
    chunks: &[Chunk],
    doc_id: &str,
    section_path: &[usize],
    opts: &GenerationOptions,
) -> Result<Vec<QAPair>, GenesisError> {
    opts.context_mode.validate()?;
    let (selected, section_text) = super::questions::section_chunks(chunks, doc_id, section_path)?;

    let mut slots: BTreeMap<&str, String> = BTreeMap::new();
    slots.insert("context", opts.context_mode.context_json());
    slots.insert("source", opts.source.clone());
    slots.insert("title", opts.title.clone());
    slots.insert("section", section_text);
    slots.insert("examples", opts.examples.clone());
    let messages = template.render(&slots)?;

    let mut request = CompletionRequest::new(&opts.model_label, messages)
        .with_purpose("combined")
        .with_temperature(opts.temperature);
    if let Some(budget) = template.max_tokens() {
        request = request.with_max_tokens(budget);
    }
    let raw = client.complete(&request)?;

    let parsed = parse_qa_pairs(&raw);
    if parsed.is_empty() {
        return Err(GenesisError::NoPairs { raw });
    }

    let path_tag: String =
        section_path.iter().map(|p| p.to_string()).collect::<Vec<_>>().join(".");
    let provenance: Vec<String> = selected.iter().map(|c| c.chunk_id.clone()).collect();
    Ok(parsed
        .into_iter()
        .enumerate()
        .map(|(i, (question, answer))| QAPair {
            qa_id: format!("{doc_id}#s{path_tag}#cq{i:03}"),
            question,
            answer: Some(answer),
            doc_id: doc_id.to_string(),
            section_path: section_path.to_vec(),
            provenance_chunk_ids: provenance.clone(),
            context_mode: opts.context_mode.clone(),
            generation: GenerationMethod::Combined,
            model_label: opts.model_label.clone(),
            created_at: None,
        })
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::{chunk_document, DocumentRecord, Section};
    use crate::llmclient::{ClientHandle, ScriptedStub};

    #[test]
    fn parses_plain_qa_transcript() {
        let raw = "Q: When is wheat seeded?\nA: In September.\nQ: Where?\nA: Across Washington\nand Oregon.";
        let pairs = parse_qa_pairs(raw);
        assert_eq!(pairs.len(), 2);
        assert_eq!(pairs[0], ("When is wheat seeded?".to_string(), "In September.".to_string()));
        assert_eq!(pairs[1].1, "Across Washington and Oregon.");
    }

    #[test]
    fn tolerates_numbering_and_long_markers() {
        let raw = "1. Q: First?\nA: One.\n2) Question: Second?\nAnswer: Two.";
        let pairs = parse_qa_pairs(raw);
        assert_eq!(pairs.len(), 2);
        assert_eq!(pairs[1], ("Second?".to_string(), "Two.".to_string()));
    }

    #[test]
    fn orphan_fragments_are_dropped() {
        // Trailing Q without A; leading A without Q.
        let raw = "A: floating answer\nQ: kept?\nA: yes\nQ: dangling question";
        let pairs = parse_qa_pairs(raw);
        assert_eq!(pairs.len(), 1);
        assert_eq!(pairs[0].0, "kept?");
    }

    #[test]
    fn empty_input_yields_nothing() {
        assert!(parse_qa_pairs("").is_empty());
        assert!(parse_qa_pairs("no markers at all").is_empty());
    }

    #[test]
    fn combined_generation_produces_answered_pairs() {
        let words: Vec<String> = (0..80).map(|i| format!("w{i}")).collect();
        let doc = DocumentRecord {
            doc_id: "doc-b".into(),
            source: "journal".into(),
            title: "Orchard Notes".into(),
            language_code: None,
            sections: vec![Section {
                title: "Thinning".into(),
                content: vec![words.join(" ")],
                refs: vec![],
                path: vec![0],
            }],
            citations: vec![],
            metadata: Default::default(),
        };
        let chunks = chunk_document(&doc, 60, 10).unwrap();
        let stub = ScriptedStub::new(vec![
            "Q: Why thin apples?\nA: To improve fruit size.\nQ: When?\nA: Early summer.".to_string(),
        ]);
        let client = ClientHandle::for_stub(Box::new(stub));
        let template = PromptTemplate::parse("combined", COMBINED_TEMPLATE).unwrap();
        let opts = GenerationOptions::new("stub", "journal", "Orchard Notes");
        let pairs =
            generate_combined(&client, &template, &chunks, "doc-b", &[0], &opts).unwrap();
        assert_eq!(pairs.len(), 2);
        assert_eq!(pairs[0].qa_id, "doc-b#s0#cq000");
        assert_eq!(pairs[0].answer.as_deref(), Some("To improve fruit size."));
        assert_eq!(pairs[0].generation, GenerationMethod::Combined);
        assert_eq!(client.ledger().total_attempts(), 1, "one call for the whole section");
    }

    #[test]
    fn unparseable_completion_is_no_pairs() {
        let doc = DocumentRecord {
            doc_id: "d".into(),
            source: "s".into(),
            title: "t".into(),
            language_code: None,
            sections: vec![Section {
                title: String::new(),
                content: vec!["alpha beta gamma delta".into()],
                refs: vec![],
                path: vec![0],
            }],
            citations: vec![],
            metadata: Default::default(),
        };
        let chunks = chunk_document(&doc, 10, 0).unwrap();
        let stub = ScriptedStub::new(vec!["no pairs here".to_string()]);
        let client = ClientHandle::for_stub(Box::new(stub));
        let template = PromptTemplate::parse("combined", COMBINED_TEMPLATE).unwrap();
        let opts = GenerationOptions::new("stub", "s", "t");
        let err =
            generate_combined(&client, &template, &chunks, "d", &[0], &opts).unwrap_err();
        assert!(matches!(err, GenesisError::NoPairs { .. }));
    }
}
