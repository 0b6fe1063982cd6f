//! Local embedding backends: a seeded hash embedder and a file-backed lookup.

use std::collections::HashMap;
use std::io::BufRead;

use rand::distributions::Distribution;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::Deserialize;
use sha2::{Digest, Sha256};

use crate::text::lower_tokens;

use super::{ClientError, Embedder};

/// Deterministic bag-of-words hash embedder.
///
/// Each distinct lowercase token maps to a fixed pseudo-random Gaussian
/// vector (seeded from SHA-256 of the seed and the token), and a text embeds
/// to the normalized sum of its token vectors. Texts sharing tokens therefore
/// land near each other, which is exactly the behavior retrieval tests need —
/// with zero network and full determinism.
pub struct HashEmbedder {
    dims: usize,
    seed: u64,
}

impl HashEmbedder {
    pub fn new(dims: usize, seed: u64) -> Self {
        assert!(dims >= 1, "embedder needs at least one dimension");
        Self { dims, seed }
    }

    fn token_vector(&self, token: &str) -> Vec<f64> {
        let mut hasher = Sha256::new();
        hasher.update(self.seed.to_le_bytes());
        hasher.update(token.as_bytes());
        let digest = hasher.finalize();
        let mut seed32 = [0u8; 32];
        seed32.copy_from_slice(&digest);
        let mut rng = ChaCha8Rng::from_seed(seed32);
        (0..self.dims)
            .map(|_| StandardNormal.sample(&mut rng))
            .collect()
    }
}

impl Embedder for HashEmbedder {
    fn embed(&self, text: &str) -> Result<Vec<f64>, ClientError> {
        let tokens = lower_tokens(text);
        if tokens.is_empty() {
            return Err(ClientError::InvalidRequest(
                "text has no word tokens to embed".into(),
            ));
        }
        let mut acc = vec![0.0f64; self.dims];
        for token in &tokens {
            for (a, v) in acc.iter_mut().zip(self.token_vector(token)) {
                *a += v;
            }
        }
        let norm = acc.iter().map(|v| v * v).sum::<f64>().sqrt();
        if norm == 0.0 {
            return Err(ClientError::Protocol(
                "degenerate zero-norm embedding".into(),
            ));
        }
        for a in &mut acc {
            *a /= norm;
        }
        Ok(acc)
    }

    fn dims(&self) -> usize {
        self.dims
    }

    fn label(&self) -> String {
        format!("hash-{}d-seed{}", self.dims, self.seed)
    }
}

#[derive(Deserialize)]
struct FileEmbeddingRow {
    text: String,
    values: Vec<f64>,
}

/// Exact-match lookup of precomputed vectors, loaded from JSONL rows of
/// `{"text": …, "values": […]}`. A missing text is an error, never a guess.
pub struct FileEmbedder {
    dims: usize,
    map: HashMap<String, Vec<f64>>,
    label: String,
}

impl FileEmbedder {
    /// Loads rows from a JSONL reader. All rows must agree on dimensions.
    pub fn from_jsonl(reader: impl BufRead, label: impl Into<String>) -> Result<Self, ClientError> {
        let mut map = HashMap::new();
        let mut dims = 0usize;
        for (i, line) in reader.lines().enumerate() {
            let line = line?;
            if line.trim().is_empty() {
                continue;
            }
            let row: FileEmbeddingRow = serde_json::from_str(&line).map_err(|e| {
                ClientError::Protocol(format!("embedding file line {}: {e}", i + 1))
            })?;
            if dims == 0 {
                dims = row.values.len();
            } else if row.values.len() != dims {
                return Err(ClientError::Protocol(format!(
                    "embedding file line {}: {} dims, expected {dims}",
                    i + 1,
                    row.values.len()
                )));
            }
            map.insert(row.text, row.values);
        }
        if dims == 0 {
            return Err(ClientError::Protocol(
                "embedding file contains no rows".into(),
            ));
        }
        Ok(Self {
            dims,
            map,
            label: label.into(),
        })
    }

    pub fn from_path(path: &std::path::Path) -> Result<Self, ClientError> {
        let file = std::fs::File::open(path)?;
        Self::from_jsonl(
            std::io::BufReader::new(file),
            format!("file:{}", path.display()),
        )
    }
}

impl Embedder for FileEmbedder {
    fn embed(&self, text: &str) -> Result<Vec<f64>, ClientError> {
        self.map.get(text).cloned().ok_or_else(|| {
            ClientError::InvalidRequest(format!(
                "no precomputed embedding for text starting {:?}",
                text.chars().take(40).collect::<String>()
            ))
        })
    }

    fn dims(&self) -> usize {
        self.dims
    }

    fn label(&self) -> String {
        self.label.clone()
    }
}
