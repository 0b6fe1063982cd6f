//! Word-embedding tables for the mover-distance metrics.
//!
//! Two sources: the classic text format (`token v1 v2 … vD`, one per line),
//! and a deterministic synthetic table seeded per token — the offline default
//! when no pretrained vectors are available.

use std::collections::BTreeMap;
use std::io::BufRead;

use rand::distributions::Distribution;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use sha2::{Digest, Sha256};

use super::MetricsError;

/// Token → vector lookup with a fixed dimension.
#[derive(Debug, Clone, PartialEq)]
pub struct WordEmbeddingTable {
    dims: usize,
    map: BTreeMap<String, Vec<f64>>,
}

impl WordEmbeddingTable {
    pub fn new(dims: usize) -> Self {
        assert!(dims >= 1, "table needs at least one dimension");
        Self {
            dims,
            map: BTreeMap::new(),
        }
    }

    pub fn dims(&self) -> usize {
        self.dims
    }

    pub fn len(&self) -> usize {
        self.map.len()
    }

    pub fn is_empty(&self) -> bool {
        self.map.is_empty()
    }

    /// Inserts a vector for `token` (stored lowercase).
    pub fn insert(&mut self, token: impl Into<String>, values: Vec<f64>) -> Result<(), MetricsError> {
        if values.len() != self.dims {
            return Err(MetricsError::Table(format!(
                "vector has {} dims, table expects {}",
                values.len(),
                self.dims
            )));
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(MetricsError::Table("vector has non-finite entries".into()));
        }
        self.map.insert(token.into().to_lowercase(), values);
        Ok(())
    }

    /// Case-insensitive lookup.
    pub fn lookup(&self, token: &str) -> Option<&[f64]> {
        self.map.get(&token.to_lowercase()).map(Vec::as_slice)
    }

    pub fn contains(&self, token: &str) -> bool {
        self.lookup(token).is_some()
    }

    /// Parses the whitespace text format: `token v1 v2 … vD` per line.
    /// Blank lines and lines starting with `#` are skipped; the first data
    /// row fixes the dimension.
    pub fn from_text_format(reader: impl BufRead) -> Result<Self, MetricsError> {
        let mut map = BTreeMap::new();
        let mut dims = 0usize;
        for (lineno, line) in reader.lines().enumerate() {
            let line = line?;
            let trimmed = line.trim();
            if trimmed.is_empty() || trimmed.starts_with('#') {
                continue;
            }
            let mut parts = trimmed.split_whitespace();
            let token = parts
                .next()
                .ok_or_else(|| MetricsError::Table(format!("line {}: empty row", lineno + 1)))?;
            let values: Vec<f64> = parts
                .map(|p| {
                    p.parse::<f64>().map_err(|e| {
                        MetricsError::Table(format!("line {}: bad number `{p}`: {e}", lineno + 1))
                    })
                })
                .collect::<Result<_, _>>()?;
            if values.is_empty() {
                return Err(MetricsError::Table(format!(
                    "line {}: token `{token}` has no vector",
                    lineno + 1
                )));
            }
            if dims == 0 {
                dims = values.len();
            } else if values.len() != dims {
                return Err(MetricsError::Table(format!(
                    "line {}: {} dims, expected {dims}",
                    lineno + 1,
                    values.len()
                )));
            }
            map.insert(token.to_lowercase(), values);
        }
        if dims == 0 {
            return Err(MetricsError::Table("table file has no data rows".into()));
        }
        Ok(Self { dims, map })
    }

    pub fn from_path(path: &std::path::Path) -> Result<Self, MetricsError> {
        let file = std::fs::File::open(path)?;
        Self::from_text_format(std::io::BufReader::new(file))
    }

    /// Builds a deterministic synthetic table: each token gets a Gaussian
    /// vector seeded from SHA-256(seed, token). Identical `(tokens, dims,
    /// seed)` always produce an identical table, on every platform.
    pub fn synthetic<I, S>(tokens: I, dims: usize, seed: u64) -> Self
    where
        I: IntoIterator<Item = S>,
        S: AsRef<str>,
    {
        let mut table = Self::new(dims);
        for token in tokens {
            let token = token.as_ref().to_lowercase();
            if table.map.contains_key(&token) {
                continue;
            }
            let mut hasher = Sha256::new();
            hasher.update(seed.to_le_bytes());
            hasher.update(token.as_bytes());
            let digest = hasher.finalize();
            let mut seed32 = [0u8; 32];
            seed32.copy_from_slice(&digest);
            let mut rng = ChaCha8Rng::from_seed(seed32);
            let values: Vec<f64> = (0..dims).map(|_| StandardNormal.sample(&mut rng)).collect();
            table.map.insert(token, values);
        }
        table
    }

    /// A copy with every vector multiplied by `factor` (ground distances, and
    /// hence mover distances, scale by `|factor|`).
    pub fn scaled(&self, factor: f64) -> Self {
        let map = self
            .map
            .iter()
            .map(|(k, v)| (k.clone(), v.iter().map(|x| x * factor).collect()))
            .collect();
        Self {
            dims: self.dims,
            map,
        }
    }
}
