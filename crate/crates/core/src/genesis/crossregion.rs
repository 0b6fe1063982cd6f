//! Cross-region question clustering and holdout splitting.
//!
//! Questions that recur (near-verbatim) across documents from several regions
//! probe general knowledge rather than one document's specifics, which makes
//! them good evaluation holdouts. Clustering is greedy clique-building over
//! question-embedding cosine similarity: a question joins a cluster only if
//! it is at least `threshold`-similar to *every* existing member, so one
//! drifting member cannot chain unrelated questions together.

use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};

use crate::index::{cosine, embed, EmbeddingVector};
use crate::llmclient::Embedder;

use super::{GenesisError, QAPair};

/// Minimum cosine similarity to every member for joining a cluster.
pub const DEFAULT_SIMILARITY_THRESHOLD: f64 = 0.90;

/// Minimum number of distinct regions before a cluster is kept.
pub const DEFAULT_MIN_REGIONS: usize = 3;

/// One question inside a cluster, with its origin region.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ClusterMember {
    pub qa_id: String,
    pub region: String,
    pub question: String,
}

/// A group of near-duplicate questions spanning several regions.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct QuestionCluster {
    pub cluster_id: usize,
    /// Members in canonical (region, qa_id) order.
    pub members: Vec<ClusterMember>,
    /// Sorted distinct regions covered by the members.
    pub regions: Vec<String>,
}

/// Finds clusters of near-duplicate questions spanning at least
/// `min_regions` distinct regions.
///
/// Iteration order is canonical — pairs sorted by (region, qa_id) — so the
/// greedy result is deterministic regardless of map construction order.
/// Clusters that form but cover too few regions are dropped *with their
/// members consumed*: re-seeding from an already-rejected near-duplicate
/// would only rebuild the same rejected cluster.
pub fn find_cross_region_questions(
    pairs_by_region: &std::collections::BTreeMap<String, Vec<QAPair>>,
    embedder: &dyn Embedder,
    threshold: f64,
    min_regions: usize,
) -> Result<Vec<QuestionCluster>, GenesisError> {
    if !(threshold > 0.0 && threshold <= 1.0) {
        return Err(GenesisError::InvalidArgument(format!(
            "similarity threshold must be in (0, 1], got {threshold}"
        )));
    }
    if min_regions < 2 {
        return Err(GenesisError::InvalidArgument(format!(
            "min_regions must be at least 2, got {min_regions}"
        )));
    }

    // Canonical flattening: BTreeMap iterates regions sorted; pairs within a
    // region are ordered by qa_id.
    let mut items: Vec<(&str, &QAPair)> = Vec::new();
    for (region, pairs) in pairs_by_region {
        let mut in_region: Vec<&QAPair> = pairs.iter().collect();
        in_region.sort_by(|a, b| a.qa_id.cmp(&b.qa_id));
        for pair in in_region {
            items.push((region.as_str(), pair));
        }
    }
    if items.is_empty() {
        return Ok(Vec::new());
    }

    let vectors: Vec<EmbeddingVector> = items
        .iter()
        .map(|(_, pair)| embed(&pair.question, embedder))
        .collect::<Result<_, _>>()?;

    let mut used = vec![false; items.len()];
    let mut clusters = Vec::new();
    for i in 0..items.len() {
        if used[i] {
            continue;
        }
        used[i] = true;
        let mut members = vec![i];
        for j in (i + 1)..items.len() {
            if used[j] {
                continue;
            }
            let mut joins = true;
            for &m in &members {
                if cosine(&vectors[j], &vectors[m])? < threshold {
                    joins = false;
                    break;
                }
            }
            if joins {
                used[j] = true;
                members.push(j);
            }
        }
        if members.len() < 2 {
            continue;
        }
        let regions: BTreeSet<String> =
            members.iter().map(|&m| items[m].0.to_string()).collect();
        if regions.len() < min_regions {
            log::debug!(
                "dropping {}-member cluster spanning only {} region(s)",
                members.len(),
                regions.len()
            );
            continue;
        }
        clusters.push(QuestionCluster {
            cluster_id: clusters.len(),
            members: members
                .iter()
                .map(|&m| ClusterMember {
                    qa_id: items[m].1.qa_id.clone(),
                    region: items[m].0.to_string(),
                    question: items[m].1.question.clone(),
                })
                .collect(),
            regions: regions.into_iter().collect(),
        });
    }
    Ok(clusters)
}

/// Splits `pairs` into (holdout, train) by cluster membership.
///
/// Every pair whose qa_id belongs to one of the `selected` clusters goes to
/// the holdout; everything else goes to train. Unknown cluster ids are an
/// error rather than an empty selection.
pub fn holdout_split(
    pairs: &[QAPair],
    clusters: &[QuestionCluster],
    selected: &[usize],
) -> Result<(Vec<QAPair>, Vec<QAPair>), GenesisError> {
    let mut held_ids: BTreeSet<&str> = BTreeSet::new();
    for &cluster_id in selected {
        let cluster = clusters
            .iter()
            .find(|c| c.cluster_id == cluster_id)
            .ok_or(GenesisError::UnknownCluster(cluster_id))?;
        for member in &cluster.members {
            held_ids.insert(member.qa_id.as_str());
        }
    }
    let mut holdout = Vec::new();
    let mut train = Vec::new();
    for pair in pairs {
        if held_ids.contains(pair.qa_id.as_str()) {
            holdout.push(pair.clone());
        } else {
            train.push(pair.clone());
        }
    }
    Ok((holdout, train))
}
