//! Offline end-to-end flow over the whole library: ingest three documents,
//! chunk and index them, tag supporting context, generate questions, answer
//! them with retrieval, export the fine-tune set, judge a sample, and check
//! recall, ablation, and the corpus statistics — all against stub backends,
//! with the call ledger verifying exactly how many completions each stage
//! spent.

use std::collections::BTreeMap;

use qaforge_core::corpus::{
    chunk_document, flatten_section, load_document, CorpusManifest,
};
use qaforge_core::genesis::{
    answer_pairs_rag, export_finetune_dataset, extract_supporting_context,
    find_cross_region_questions, generate_combined, generate_questions, holdout_split,
    read_finetune_records, ContextMode, GenerationMethod, GenerationOptions, PromptTemplate,
    QAPair, COMBINED_TEMPLATE, QUESTION_TEMPLATE, RAG_ANSWER_TEMPLATE,
    SUPPORTING_CONTEXT_TEMPLATE,
};
use qaforge_core::index::{
    build_index, embed, index_growth_ablation, recall_at_k, Probe,
};
use qaforge_core::judge::{
    aggregate_report, judge_with_variance, make_guideline, metrics_csv, rate_answer_coherence,
    rate_correctness, rate_fluency, score_with_guideline, CorrectnessGrade, JudgeOptions,
    ScoreValue, VARIANCE_TRIALS,
};
use qaforge_core::llmclient::{ClientHandle, ClosureStub, HashEmbedder, ScriptedStub};
use qaforge_core::textmetrics::{
    diversity_score_with_labels, overlap_score, WordEmbeddingTable,
};

const MODEL: &str = "stub-model";

/// Three one-section documents in the ingestion JSON shape, one per state.
fn raw_documents() -> Vec<(&'static str, String)> {
    let wa = serde_json::json!({
        "doc_id": "wa-wheat",
        "source": "extension",
        "title": "Winter Wheat Management in Washington",
        "sections": [{
            "title": "Seeding and rust control",
            "content": [
                "Winter wheat in Whitman County Washington is seeded from late August through September once soil moisture returns.",
                "Growers scout for stripe rust from green-up onward and apply a fungicide when susceptible varieties show active pustules.",
                "Deep furrow drills place seed into moisture under dry mulch and stands emerge before cold weather arrives."
            ]
        }]
    });
    let or = serde_json::json!({
        "doc_id": "or-orchard",
        "source": "extension",
        "title": "Pear Orchard Care in Oregon",
        "sections": [{
            "title": "Codling moth in Hood River",
            "content": [
                "Pear orchards around Hood River Oregon set pheromone traps for codling moth at first bloom each spring.",
                "Mating disruption dispensers go up before the first sustained male flight and sprays target egg hatch.",
                "Orchardists thin fruit clusters after June drop so pears size evenly on irrigated blocks."
            ]
        }]
    });
    let id = serde_json::json!({
        "doc_id": "id-potato",
        "source": "extension",
        "title": "Potato Storage Practice in Idaho",
        "sections": [{
            "title": "Curing and late blight",
            "content": [
                "Russet potatoes in Bingham County Idaho cure for two weeks at about 95 percent humidity before long storage.",
                "Storage managers lower plenum temperatures slowly to avoid condensation that favors late blight tuber rot.",
                "Crews cull bruised tubers at the piler because wounds invite soft rot bacteria into the pile."
            ]
        }]
    });
    vec![
        ("WA", wa.to_string()),
        ("OR", or.to_string()),
        ("ID", id.to_string()),
    ]
}

fn manifest() -> CorpusManifest {
    CorpusManifest::from_json(
        serde_json::json!({
            "corpus_id": "pnw-mini",
            "entries": [
                {"doc_id": "wa-wheat", "path": "wa.json", "source": "extension", "region": "WA"},
                {"doc_id": "or-orchard", "path": "or.json", "source": "extension", "region": "OR"},
                {"doc_id": "id-potato", "path": "id.json", "source": "extension", "region": "ID"}
            ]
        })
        .to_string()
        .as_bytes(),
    )
    .unwrap()
}

/// Five synthetic questions for the crop the prompt's section mentions.
fn questions_for(crop: &str, state: &str) -> String {
    (1..=5)
        .map(|i| format!("{i}. What does step {i} of {crop} management in {state} require?"))
        .collect::<Vec<_>>()
        .join("\n")
}

/// One stub backend that answers every generation-stage prompt by keying on
/// distinctive template phrases and section vocabulary, exactly as a live
/// backend would see them.
fn generation_router() -> ClientHandle {
    let stub = ClosureStub::new("router", |req| {
        let text: String = req
            .messages
            .iter()
            .map(|m| m.content.as_str())
            .collect::<Vec<_>>()
            .join("\n");
        let (crop, state) = if text.contains("wheat") {
            ("winter wheat", "Washington")
        } else if text.contains("pear") || text.contains("Pear") {
            ("pears", "Oregon")
        } else {
            ("potatoes", "Idaho")
        };
        let reply = if text.contains("single Yes or No") {
            // Supporting-context tagging probe.
            format!(
                "1. Yes\n2. Yes\n3. No\n4. Yes\n5. [\"{state}\"]\n6. [\"{crop}\"]\n7. []\n8. [\"field disease\"]"
            )
        } else if text.contains("question and answer pairs") {
            format!(
                "Q: How is {crop} handled in {state}?\nA: Producers in {state} follow the documented schedule for {crop}.\n\
                 Q: When do {state} growers scout {crop}?\nA: Scouting starts as soon as the crop is active in spring.\n\
                 Q: Why does timing matter for {crop}?\nA: Acting at the documented stage keeps losses low."
            )
        } else if text.contains("formulate as many questions as possible") {
            questions_for(crop, state)
        } else if text.contains("Answer the question using only the provided context") {
            format!("Based on the provided passages, {crop} growers in {state} follow the documented practice.")
        } else {
            return Err(qaforge_core::llmclient::ClientError::InvalidRequest(format!(
                "unroutable prompt: {}",
                &text[..text.len().min(80)]
            )));
        };
        Ok(reply)
    });
    ClientHandle::for_stub(Box::new(stub))
}

#[test]
fn full_offline_pipeline() {
    let docs: Vec<_> = raw_documents()
        .into_iter()
        .map(|(region, raw)| (region, load_document(raw.as_bytes()).unwrap()))
        .collect();
    let manifest = manifest();
    for (region, doc) in &docs {
        assert_eq!(manifest.region_of(&doc.doc_id), Some(*region));
    }

    // --- chunk + index -----------------------------------------------------
    let embedder = HashEmbedder::new(64, 11);
    let mut all_chunks = Vec::new();
    for (_, doc) in &docs {
        let chunks = chunk_document(doc, 24, 6).unwrap();
        assert!(!chunks.is_empty(), "doc {} produced no chunks", doc.doc_id);
        all_chunks.extend(chunks);
    }
    let index = build_index(&all_chunks, &embedder).unwrap();
    assert_eq!(index.len(), all_chunks.len());
    let chunk_texts: BTreeMap<String, String> = all_chunks
        .iter()
        .map(|c| (c.chunk_id.clone(), c.text.clone()))
        .collect();

    // --- tag supporting context, generate questions, answer with RAG -------
    let client = generation_router();
    let tag_template =
        PromptTemplate::parse("supporting_context", SUPPORTING_CONTEXT_TEMPLATE).unwrap();
    let question_template =
        PromptTemplate::parse("question_generation", QUESTION_TEMPLATE).unwrap();
    let rag_template = PromptTemplate::parse("rag_answer", RAG_ANSWER_TEMPLATE).unwrap();

    let mut pairs_by_region: BTreeMap<String, Vec<QAPair>> = BTreeMap::new();
    let mut all_questions = Vec::new();
    for (region, doc) in &docs {
        let section_text = flatten_section(&doc.sections[0]);
        let ctx =
            extract_supporting_context(&client, MODEL, &tag_template, &section_text).unwrap();
        assert!(ctx.mentions_location && ctx.mentions_crop && !ctx.mentions_cattle);
        assert!(ctx.cattle.is_empty(), "normalize() must clear gated-off lists");

        let opts = GenerationOptions::new(MODEL, &doc.source, &doc.title)
            .with_context(ContextMode::External { context: ctx });
        let mut pairs = generate_questions(
            &client,
            &question_template,
            &all_chunks,
            &doc.doc_id,
            &[0],
            &opts,
        )
        .unwrap();
        assert_eq!(pairs.len(), 5, "router scripted five questions per section");
        for pair in &pairs {
            assert_eq!(pair.doc_id, doc.doc_id);
            assert!(pair.answer.is_none());
            assert!(!pair.provenance_chunk_ids.is_empty());
            for chunk_id in &pair.provenance_chunk_ids {
                assert!(chunk_texts.contains_key(chunk_id), "provenance must be indexed");
            }
        }

        let filled =
            answer_pairs_rag(&client, &rag_template, &index, &embedder, &chunk_texts, &mut pairs, 3, MODEL, 0.7)
                .unwrap();
        assert_eq!(filled, 5);
        for pair in &pairs {
            let answer = pair.answer.as_ref().expect("RAG filled every answer");
            assert!(answer.starts_with("Based on the provided passages"));
        }
        all_questions.extend(pairs.iter().map(|p| p.question.clone()));
        pairs_by_region.entry(region.to_string()).or_default().extend(pairs);
    }

    // --- ledger accounting: separated = 1 genq + one RAG call per question -
    let ok = client.ledger().ok_counts_by_purpose();
    assert_eq!(ok.get("tag_context"), Some(&3));
    assert_eq!(ok.get("genq"), Some(&3));
    assert_eq!(ok.get("rag_answer"), Some(&15));
    assert_eq!(
        ok.get("genq").unwrap() + ok.get("rag_answer").unwrap(),
        3 * (1 + 5),
        "separated generation must cost 1 + |questions| calls per section"
    );

    // --- combined generation costs exactly one call per section ------------
    let combined_client = generation_router();
    let combined_template = PromptTemplate::parse("combined", COMBINED_TEMPLATE).unwrap();
    let opts = GenerationOptions::new(MODEL, "extension", &docs[0].1.title);
    let combined = generate_combined(
        &combined_client,
        &combined_template,
        &all_chunks,
        "wa-wheat",
        &[0],
        &opts,
    )
    .unwrap();
    assert_eq!(combined.len(), 3);
    assert!(combined.iter().all(|p| p.answer.is_some()));
    assert!(combined.iter().all(|p| p.generation == GenerationMethod::Combined));
    assert_eq!(
        combined_client.ledger().ok_counts_by_purpose().get("combined"),
        Some(&1),
        "combined generation must cost exactly one call"
    );

    // --- fine-tune export round-trip ----------------------------------------
    let dir = tempfile::tempdir().unwrap();
    let out_path = dir.path().join("train.jsonl");
    let answered: Vec<QAPair> = pairs_by_region.values().flatten().cloned().collect();
    let summary = export_finetune_dataset(&answered, &out_path).unwrap();
    assert_eq!(summary.written, 15);
    assert_eq!(summary.rejected, 0);
    assert!(!out_path.with_extension("rejects.jsonl").exists());
    let records = read_finetune_records(&out_path).unwrap();
    assert_eq!(records.len(), 15);
    assert!(records.iter().all(|r| r.mask_prompt), "loss must mask every prompt");

    // --- corpus-level statistics -------------------------------------------
    let wa_section = flatten_section(&docs[0].1.sections[0]);
    let wa_questions: Vec<String> = pairs_by_region["WA"].iter().map(|p| p.question.clone()).collect();
    let overlap = overlap_score(&wa_section, &wa_questions).unwrap();
    assert!(overlap.is_finite() && overlap >= 0.0);

    let vocab: Vec<String> = all_questions
        .iter()
        .flat_map(|q| q.split_whitespace().map(|t| t.to_lowercase()))
        .collect();
    let table = WordEmbeddingTable::synthetic(vocab.iter().map(|s| s.as_str()), 8, 3);
    let labeled: Vec<(String, String)> = answered
        .iter()
        .map(|p| (p.qa_id.clone(), p.question.clone()))
        .collect();
    let (diversity, matrix) = diversity_score_with_labels(&labeled, &table).unwrap();
    assert!(diversity >= 0.0);
    assert_eq!(matrix.n(), 15);
    for i in 0..matrix.n() {
        assert_eq!(matrix.get(i, i), 0.0);
        for j in 0..matrix.n() {
            assert!((matrix.get(i, j) - matrix.get(j, i)).abs() < 1e-12);
        }
    }

    // --- retrieval quality: self-queries, then distractor growth -----------
    let probes: Vec<Probe> = all_chunks
        .iter()
        .map(|c| Probe {
            query: index.get(&c.chunk_id).unwrap().clone(),
            truth_chunk_id: c.chunk_id.clone(),
        })
        .collect();
    let recall = recall_at_k(&index, &probes, 1).unwrap();
    assert_eq!(recall.recall, 1.0, "a chunk's own vector must retrieve it first");

    let batches: Vec<Vec<_>> = (0..2)
        .map(|b| {
            (0..40)
                .map(|i| {
                    let text = format!("distractor {b} {i} zz{i} qq{b}");
                    (format!("junk#{b}#{i}"), embed(&text, &embedder).unwrap())
                })
                .collect()
        })
        .collect();
    let points = index_growth_ablation(&index, &batches, &probes, 5).unwrap();
    assert_eq!(points.len(), 3);
    assert_eq!(points[0].index_size, index.len());
    assert_eq!(points[2].index_size, index.len() + 80);
    assert!(points[2].recall <= points[0].recall);

    // --- judge a sample with scripted verdicts ------------------------------
    let sample = &answered[0];
    let fluency_client = ClientHandle::for_stub(Box::new(ScriptedStub::new(vec![
        "Score: 5\nExplanation: reads naturally.".into(),
    ])));
    let opts = JudgeOptions::new(MODEL);
    let verdict = rate_fluency(&fluency_client, &opts, &sample.question).unwrap();
    assert!(verdict.parse_ok);
    assert_eq!(verdict.score, Some(ScoreValue::Numeric(5.0)));

    let coherence_client = ClientHandle::for_stub(Box::new(ScriptedStub::cycling(vec![
        "Score: 3\nExplanation: drifts from the reference.".into(),
        "Score: 4\nExplanation: close to the reference.".into(),
    ])));
    let context = chunk_texts.values().next().unwrap().clone();
    let report = judge_with_variance(|trial| {
        rate_answer_coherence(
            &coherence_client,
            &JudgeOptions::new(MODEL).with_trial(trial),
            &sample.question,
            "Reference answer for comparison.",
            sample.answer.as_deref().unwrap(),
            &context,
        )
    })
    .unwrap();
    assert_eq!(report.trials.len(), VARIANCE_TRIALS);
    assert_eq!(report.parsed, 5);
    assert!((report.mean.unwrap() - 3.4).abs() < 1e-9, "3,4,3,4,3 averages 3.4");
    assert!((report.stddev.unwrap() - 0.24f64.sqrt()).abs() < 1e-9);

    let correctness_client = ClientHandle::for_stub(Box::new(ScriptedStub::new(vec![
        "Grade: partially correct\nExplanation: misses the storage temperature.".into(),
    ])));
    let correctness = rate_correctness(
        &correctness_client,
        &opts,
        &sample.question,
        "Reference answer.",
        sample.answer.as_deref().unwrap(),
    )
    .unwrap();
    assert_eq!(
        correctness.score,
        Some(ScoreValue::Grade(CorrectnessGrade::PartiallyCorrect))
    );

    let guideline_client = ClientHandle::for_stub(Box::new(ScriptedStub::new(vec![
        "- names the state\n- cites the documented practice".into(),
        "Score: 0.5\nExplanation: names the state only.".into(),
    ])));
    let guideline =
        make_guideline(&guideline_client, &opts, &sample.question, "Reference answer.").unwrap();
    assert!(guideline.contains("names the state"));
    let scored = score_with_guideline(
        &guideline_client,
        &opts,
        &sample.question,
        sample.answer.as_deref().unwrap(),
        &guideline,
    )
    .unwrap();
    assert_eq!(scored.score, Some(ScoreValue::Numeric(0.5)));

    let summaries = aggregate_report(&[verdict, correctness, scored]);
    assert_eq!(summaries.len(), 3);
    let csv = metrics_csv(&summaries);
    assert!(csv.starts_with("metric,scale,items,parsed,mean,stddev,accuracy"));
    assert_eq!(csv.lines().count(), 1 + summaries.len());

    // --- cross-region clusters and the holdout split ------------------------
    let planted = "What limits dryland crop yields across the inland Northwest?";
    for (i, (region, pairs)) in pairs_by_region.iter_mut().enumerate() {
        let mut dup = pairs[0].clone();
        dup.qa_id = format!("{region}#planted#{i}");
        dup.question = planted.to_string();
        pairs.push(dup);
    }
    let clusters =
        find_cross_region_questions(&pairs_by_region, &embedder, 0.9, 3).unwrap();
    let spanning = clusters
        .iter()
        .find(|c| c.regions == ["ID", "OR", "WA"])
        .expect("the planted near-duplicate must cluster across all three regions");
    assert_eq!(spanning.members.len(), 3);
    assert!(spanning.members.iter().all(|m| m.question == planted));

    let everything: Vec<QAPair> = pairs_by_region.values().flatten().cloned().collect();
    let (holdout, train) =
        holdout_split(&everything, &clusters, &[spanning.cluster_id]).unwrap();
    assert_eq!(holdout.len(), 3);
    assert_eq!(holdout.len() + train.len(), everything.len());
    for held in &holdout {
        assert!(train.iter().all(|t| t.qa_id != held.qa_id));
    }
}

/// An embedder failure during cross-region clustering surfaces as an error,
/// not a panic or silent skip.
#[test]
fn cross_region_requires_valid_threshold() {
    let embedder = HashEmbedder::new(8, 1);
    let err = find_cross_region_questions(&BTreeMap::new(), &embedder, 0.0, 3).unwrap_err();
    assert!(err.to_string().contains("threshold"));
    let err = find_cross_region_questions(&BTreeMap::new(), &embedder, 0.5, 1).unwrap_err();
    assert!(err.to_string().contains("min_regions") || err.to_string().contains("regions"));
}
