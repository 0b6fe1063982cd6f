//! Recall@k evaluation and the index-growth ablation.

use serde::{Deserialize, Serialize};

use super::{EmbeddingVector, IndexError, VectorIndex};

/// One evaluation probe: a query vector and the chunk that should come back.
#[derive(Debug, Clone)]
pub struct Probe {
    pub query: EmbeddingVector,
    pub truth_chunk_id: String,
}

/// Per-probe outcome inside a recall report.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ProbeOutcome {
    pub truth_chunk_id: String,
    pub hit: bool,
}

/// Recall@k over a probe set.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RecallReport {
    pub k: usize,
    pub total_questions: usize,
    pub hits: usize,
    /// `hits / total_questions`, in `[0, 1]`.
    pub recall: f64,
    pub outcomes: Vec<ProbeOutcome>,
}

/// Measures recall@k: the fraction of probes whose truth chunk id appears in
/// the top-k search results. Requires a non-empty probe set and `k >= 1`.
///
/// A probe whose truth id is not in the index is counted as a miss (and
/// logged), since it can never be retrieved.
pub fn recall_at_k(
    index: &VectorIndex,
    probes: &[Probe],
    k: usize,
) -> Result<RecallReport, IndexError> {
    if probes.is_empty() {
        return Err(IndexError::InvalidArgument(
            "recall needs at least one probe".into(),
        ));
    }
    if k == 0 {
        return Err(IndexError::InvalidArgument("k must be >= 1".into()));
    }
    let mut outcomes = Vec::with_capacity(probes.len());
    let mut hits = 0usize;
    for probe in probes {
        if !index.contains(&probe.truth_chunk_id) {
            log::warn!(
                "recall probe truth `{}` is not in the index; counted as a miss",
                probe.truth_chunk_id
            );
        }
        let results = index.search(&probe.query, k)?;
        let hit = results.iter().any(|h| h.chunk_id == probe.truth_chunk_id);
        if hit {
            hits += 1;
        }
        outcomes.push(ProbeOutcome {
            truth_chunk_id: probe.truth_chunk_id.clone(),
            hit,
        });
    }
    Ok(RecallReport {
        k,
        total_questions: probes.len(),
        hits,
        recall: hits as f64 / probes.len() as f64,
        outcomes,
    })
}

/// One measurement of the growth ablation: recall at a given index size.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct AblationPoint {
    pub index_size: usize,
    pub hits: usize,
    pub total_questions: usize,
    pub recall: f64,
}

/// Measures how recall@k degrades as distractors are added to the index.
///
/// Starting from `base`, each batch of `(chunk_id, vector)` distractors is
/// inserted cumulatively and recall over the same probes is re-measured. The
/// first point reports the base index. Distractor ids must be disjoint from
/// everything already indexed (duplicate ids error, naming the id).
pub fn index_growth_ablation(
    base: &VectorIndex,
    batches: &[Vec<(String, EmbeddingVector)>],
    probes: &[Probe],
    k: usize,
) -> Result<Vec<AblationPoint>, IndexError> {
    let mut grown = base.clone();
    let to_point = |r: &RecallReport, size: usize| AblationPoint {
        index_size: size,
        hits: r.hits,
        total_questions: r.total_questions,
        recall: r.recall,
    };
    let mut points = Vec::with_capacity(batches.len() + 1);
    let report = recall_at_k(&grown, probes, k)?;
    points.push(to_point(&report, grown.len()));
    for batch in batches {
        for (chunk_id, vector) in batch {
            grown.insert(chunk_id.clone(), vector.clone())?;
        }
        let report = recall_at_k(&grown, probes, k)?;
        points.push(to_point(&report, grown.len()));
    }
    Ok(points)
}
