//! Word-mover distance: exact optimal transport between bag-of-words masses.
//!
//! Each document becomes a normalized bag of words (nBOW) over its in-table
//! tokens; the ground distance between words is the Euclidean distance of
//! their embeddings; the WMD is the exact optimal-transport cost between the
//! two nBOW measures. Tokens missing from the table are dropped with a
//! warning — a document whose tokens are *all* missing is an error, because
//! silently returning a distance for an empty bag would be meaningless.
//!
//! Internally the masses are kept integral (counts cross-scaled by the other
//! document's total) so the solver works in exact integer arithmetic and the
//! returned plan's marginals match the nBOW masses exactly.

use serde::{Deserialize, Serialize};

use crate::text::lower_tokens;

use super::transport::min_cost_transport;
use super::{MetricsError, WordEmbeddingTable};

/// One edge of a transport plan: mass moved from source word `from` to
/// target word `to` (indices into the plan's token lists).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TransportFlow {
    pub from: usize,
    pub to: usize,
    pub mass: f64,
}

/// The full solution of one WMD instance.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TransportPlan {
    pub source_tokens: Vec<String>,
    pub target_tokens: Vec<String>,
    /// nBOW masses of the source document (sum to 1).
    pub source_masses: Vec<f64>,
    /// nBOW masses of the target document (sum to 1).
    pub target_masses: Vec<f64>,
    /// Positive flows only.
    pub flows: Vec<TransportFlow>,
    /// Total transport cost — equal to the WMD.
    pub cost: f64,
}

impl TransportPlan {
    /// Mass leaving each source word (should equal `source_masses`).
    pub fn flow_row_sums(&self) -> Vec<f64> {
        let mut sums = vec![0.0; self.source_tokens.len()];
        for f in &self.flows {
            sums[f.from] += f.mass;
        }
        sums
    }

    /// Mass arriving at each target word (should equal `target_masses`).
    pub fn flow_col_sums(&self) -> Vec<f64> {
        let mut sums = vec![0.0; self.target_tokens.len()];
        for f in &self.flows {
            sums[f.to] += f.mass;
        }
        sums
    }
}

/// Sorted unique in-table tokens of `doc` with their counts.
fn nbow(
    doc: &str,
    which: &str,
    table: &WordEmbeddingTable,
) -> Result<(Vec<String>, Vec<u64>), MetricsError> {
    let tokens = lower_tokens(doc);
    if tokens.is_empty() {
        return Err(MetricsError::InvalidArgument(format!(
            "{which} has no word tokens"
        )));
    }
    let mut kept: Vec<String> = Vec::with_capacity(tokens.len());
    let mut dropped: Vec<String> = Vec::new();
    for t in tokens {
        if table.contains(&t) {
            kept.push(t);
        } else if !dropped.contains(&t) {
            dropped.push(t);
        }
    }
    if !dropped.is_empty() {
        log::warn!("{which}: dropping out-of-vocabulary tokens {dropped:?}");
    }
    if kept.is_empty() {
        return Err(MetricsError::AllTokensOov {
            which: which.to_string(),
            tokens: dropped,
        });
    }
    kept.sort_unstable();
    let mut uniq: Vec<String> = Vec::new();
    let mut counts: Vec<u64> = Vec::new();
    for t in kept {
        if uniq.last().map(String::as_str) == Some(t.as_str()) {
            *counts.last_mut().unwrap() += 1;
        } else {
            uniq.push(t);
            counts.push(1);
        }
    }
    Ok((uniq, counts))
}

fn euclidean(a: &[f64], b: &[f64]) -> f64 {
    a.iter()
        .zip(b)
        .map(|(x, y)| (x - y) * (x - y))
        .sum::<f64>()
        .sqrt()
}

/// Exact word-mover distance between two documents, with the optimal plan.
pub fn wmd(
    doc_a: &str,
    doc_b: &str,
    table: &WordEmbeddingTable,
) -> Result<(f64, TransportPlan), MetricsError> {
    let (tokens_a, counts_a) = nbow(doc_a, "source document", table)?;
    let (tokens_b, counts_b) = nbow(doc_b, "target document", table)?;
    let total_a: u64 = counts_a.iter().sum();
    let total_b: u64 = counts_b.iter().sum();

    // Cross-scaling makes both marginals integral with equal totals
    // (count_a·total_b on one side, count_b·total_a on the other).
    let supplies: Vec<u64> = counts_a.iter().map(|&c| c * total_b).collect();
    let demands: Vec<u64> = counts_b.iter().map(|&c| c * total_a).collect();

    let vectors_a: Vec<&[f64]> = tokens_a
        .iter()
        .map(|t| table.lookup(t).expect("nbow kept only in-table tokens"))
        .collect();
    let vectors_b: Vec<&[f64]> = tokens_b
        .iter()
        .map(|t| table.lookup(t).expect("nbow kept only in-table tokens"))
        .collect();
    let cost_matrix: Vec<Vec<f64>> = vectors_a
        .iter()
        .map(|va| vectors_b.iter().map(|vb| euclidean(va, vb)).collect())
        .collect();

    let (raw_cost, flow) = min_cost_transport(&supplies, &demands, &cost_matrix)?;
    let scale = (total_a * total_b) as f64;
    let distance = raw_cost / scale;

    let mut flows = Vec::new();
    for (i, row) in flow.iter().enumerate() {
        for (j, &f) in row.iter().enumerate() {
            if f > 0 {
                flows.push(TransportFlow {
                    from: i,
                    to: j,
                    mass: f as f64 / scale,
                });
            }
        }
    }
    let plan = TransportPlan {
        source_tokens: tokens_a,
        target_tokens: tokens_b,
        source_masses: counts_a.iter().map(|&c| c as f64 / total_a as f64).collect(),
        target_masses: counts_b.iter().map(|&c| c as f64 / total_b as f64).collect(),
        flows,
        cost: distance,
    };
    Ok((distance, plan))
}

/// The classic relaxed lower bound on WMD: each word's mass moves to its
/// single nearest counterpart, taking the tighter of the two directions.
/// Always `<= wmd(...)`; useful for prefiltering pairs, never a substitute
/// for the exact distance.
pub fn relaxed_wmd(
    doc_a: &str,
    doc_b: &str,
    table: &WordEmbeddingTable,
) -> Result<f64, MetricsError> {
    let (tokens_a, counts_a) = nbow(doc_a, "source document", table)?;
    let (tokens_b, counts_b) = nbow(doc_b, "target document", table)?;
    let total_a: u64 = counts_a.iter().sum();
    let total_b: u64 = counts_b.iter().sum();
    let vectors_a: Vec<&[f64]> = tokens_a.iter().map(|t| table.lookup(t).unwrap()).collect();
    let vectors_b: Vec<&[f64]> = tokens_b.iter().map(|t| table.lookup(t).unwrap()).collect();

    let mut forward = 0.0f64;
    for (i, va) in vectors_a.iter().enumerate() {
        let nearest = vectors_b
            .iter()
            .map(|vb| euclidean(va, vb))
            .fold(f64::INFINITY, f64::min);
        forward += counts_a[i] as f64 / total_a as f64 * nearest;
    }
    let mut backward = 0.0f64;
    for (j, vb) in vectors_b.iter().enumerate() {
        let nearest = vectors_a
            .iter()
            .map(|va| euclidean(va, vb))
            .fold(f64::INFINITY, f64::min);
        backward += counts_b[j] as f64 / total_b as f64 * nearest;
    }
    Ok(forward.max(backward))
}
