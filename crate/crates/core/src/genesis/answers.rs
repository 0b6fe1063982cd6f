//! Retrieval-augmented answering for generated questions.

use std::collections::BTreeMap;

use crate::index::{RetrievalHit, VectorIndex};
use crate::llmclient::{ChatClient, ClientHandle, CompletionRequest, Embedder};

use super::{GenesisError, PromptTemplate, QAPair};

/// Default template for the answering prompt.
pub const RAG_ANSWER_TEMPLATE: &str = include_str!("templates/rag_answer.txt");

/// Passages retrieved per question when no override is given.
pub const DEFAULT_RAG_K: usize = 3;

/// One answered question plus the evidence that was shown to the model.
#[derive(Debug, Clone)]
pub struct RagAnswer {
    pub answer: String,
    /// The retrieval hits whose texts were spliced into the prompt.
    pub hits: Vec<RetrievalHit>,
}

/// Answers one question by retrieving the top-`k` chunks and prompting with
/// them as numbered context passages.
///
/// `chunk_texts` maps chunk id to chunk text for every id in the index; a
/// retrieved id missing from the map is an error because it means the index
/// and the chunk store have drifted apart.
pub fn generate_answer_rag(
    client: &ClientHandle,
    template: &PromptTemplate,
    index: &VectorIndex,
    embedder: &dyn Embedder,
    chunk_texts: &BTreeMap<String, String>,
    question: &str,
    k: usize,
    model_label: &str,
    temperature: f64,
) -> Result<RagAnswer, GenesisError> {
    if question.trim().is_empty() {
        return Err(GenesisError::InvalidArgument("question is empty".into()));
    }
    if k == 0 {
        return Err(GenesisError::InvalidArgument("k must be at least 1".into()));
    }
    let query = crate::index::embed(question, embedder)?;
    let hits = index.search(&query, k)?;
    if hits.is_empty() {
        return Err(GenesisError::InvalidArgument(
            "index is empty; nothing to retrieve".into(),
        ));
    }

    let mut context = String::new();
    for (i, hit) in hits.iter().enumerate() {
        let text = chunk_texts.get(&hit.chunk_id).ok_or_else(|| {
            GenesisError::InvalidArgument(format!(
                "retrieved chunk `{}` has no stored text",
                hit.chunk_id
            ))
        })?;
        context.push_str(&format!("[{}] {}\n", i + 1, text));
    }

    let mut slots: BTreeMap<&str, String> = BTreeMap::new();
    slots.insert("context", context.trim_end().to_string());
    slots.insert("question", question.to_string());
    let messages = template.render(&slots)?;

    let mut request = CompletionRequest::new(model_label, messages)
        .with_purpose("rag_answer")
        .with_temperature(temperature);
    if let Some(budget) = template.max_tokens() {
        request = request.with_max_tokens(budget);
    }
    let answer = client.complete(&request)?;
    Ok(RagAnswer { answer, hits })
}

/// Answers every unanswered pair in place, returning how many were filled.
pub fn answer_pairs_rag(
    client: &ClientHandle,
    template: &PromptTemplate,
    index: &VectorIndex,
    embedder: &dyn Embedder,
    chunk_texts: &BTreeMap<String, String>,
    pairs: &mut [QAPair],
    k: usize,
    model_label: &str,
    temperature: f64,
) -> Result<usize, GenesisError> {
    let mut filled = 0;
    for pair in pairs.iter_mut().filter(|p| p.answer.is_none()) {
        let rag = generate_answer_rag(
            client,
            template,
            index,
            embedder,
            chunk_texts,
            &pair.question,
            k,
            model_label,
            temperature,
        )?;
        pair.answer = Some(rag.answer);
        filled += 1;
    }
    Ok(filled)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::llmclient::{ClientHandle, ClosureStub, HashEmbedder, ScriptedStub};

    fn fixture() -> (VectorIndex, HashEmbedder, BTreeMap<String, String>) {
        let embedder = HashEmbedder::new(32, 7);
        let chunks: Vec<(String, String)> = vec![
            ("c0".into(), "wheat is seeded in september across washington".into()),
            ("c1".into(), "apple orchards in the yakima valley need thinning".into()),
            ("c2".into(), "cattle graze rangeland in eastern oregon".into()),
        ];
        let mut index = VectorIndex::new();
        for (id, text) in &chunks {
            index.insert(id.clone(), crate::index::embed(text, &embedder).unwrap()).unwrap();
        }
        (index, embedder, chunks.into_iter().collect())
    }

    #[test]
    fn retrieves_and_answers() {
        let (index, embedder, texts) = fixture();
        let stub = ScriptedStub::new(vec!["Wheat is seeded in September.".to_string()]);
        let client = ClientHandle::for_stub(Box::new(stub));
        let template = PromptTemplate::parse("rag", RAG_ANSWER_TEMPLATE).unwrap();
        let rag = generate_answer_rag(
            &client,
            &template,
            &index,
            &embedder,
            &texts,
            "When is wheat seeded in Washington?",
            2,
            "stub",
            0.7,
        )
        .unwrap();
        assert_eq!(rag.answer, "Wheat is seeded in September.");
        assert_eq!(rag.hits.len(), 2);
        assert_eq!(rag.hits[0].chunk_id, "c0", "shared-token chunk should rank first");
    }

    #[test]
    fn prompt_contains_numbered_passages_and_question() {
        let (index, embedder, texts) = fixture();
        let seen = std::sync::Arc::new(std::sync::Mutex::new(String::new()));
        let seen_in = seen.clone();
        let stub = ClosureStub::new("probe", move |req: &CompletionRequest| {
            let mut all = String::new();
            for m in &req.messages {
                all.push_str(&m.content);
                all.push('\n');
            }
            *seen_in.lock().unwrap() = all;
            Ok("ok".to_string())
        });
        let client = ClientHandle::for_stub(Box::new(stub));
        let template = PromptTemplate::parse("rag", RAG_ANSWER_TEMPLATE).unwrap();
        generate_answer_rag(
            &client,
            &template,
            &index,
            &embedder,
            &texts,
            "where do cattle graze?",
            1,
            "stub",
            0.7,
        )
        .unwrap();
        let prompt = seen.lock().unwrap().clone();
        assert!(prompt.contains("[1] "), "prompt: {prompt}");
        assert!(prompt.contains("Question: where do cattle graze?"), "prompt: {prompt}");
    }

    #[test]
    fn missing_chunk_text_is_an_error() {
        let (index, embedder, mut texts) = fixture();
        texts.remove("c0");
        let stub = ScriptedStub::cycling(vec!["x".to_string()]);
        let client = ClientHandle::for_stub(Box::new(stub));
        let template = PromptTemplate::parse("rag", RAG_ANSWER_TEMPLATE).unwrap();
        let err = generate_answer_rag(
            &client,
            &template,
            &index,
            &embedder,
            &texts,
            "wheat seeding in washington",
            3,
            "stub",
            0.7,
        )
        .unwrap_err();
        assert!(matches!(err, GenesisError::InvalidArgument(_)));
    }

    #[test]
    fn answer_pairs_fills_only_unanswered() {
        let (index, embedder, texts) = fixture();
        let stub = ScriptedStub::cycling(vec!["generated".to_string()]);
        let client = ClientHandle::for_stub(Box::new(stub));
        let template = PromptTemplate::parse("rag", RAG_ANSWER_TEMPLATE).unwrap();
        let mut pairs = vec![
            QAPair {
                qa_id: "a".into(),
                question: "when is wheat seeded?".into(),
                answer: None,
                doc_id: "d".into(),
                section_path: vec![0],
                provenance_chunk_ids: vec![],
                context_mode: super::super::ContextMode::NoContext,
                generation: super::super::GenerationMethod::SeparateQuestionThenRag,
                model_label: "stub".into(),
                created_at: None,
            },
            QAPair {
                qa_id: "b".into(),
                question: "where do cattle graze?".into(),
                answer: Some("already answered".into()),
                doc_id: "d".into(),
                section_path: vec![0],
                provenance_chunk_ids: vec![],
                context_mode: super::super::ContextMode::NoContext,
                generation: super::super::GenerationMethod::SeparateQuestionThenRag,
                model_label: "stub".into(),
                created_at: None,
            },
        ];
        let filled = answer_pairs_rag(
            &client,
            &template,
            &index,
            &embedder,
            &texts,
            &mut pairs,
            DEFAULT_RAG_K,
            "stub",
            0.7,
        )
        .unwrap();
        assert_eq!(filled, 1);
        assert_eq!(pairs[0].answer.as_deref(), Some("generated"));
        assert_eq!(pairs[1].answer.as_deref(), Some("already answered"));
        assert_eq!(client.ledger().total_attempts(), 1);
    }
}
