//! Greedy-matching embedding similarity between candidate and reference
//! tokens.

use std::collections::{HashMap, HashSet};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};

/// Maps a token sequence to one unit-length vector per token.
pub trait EmbeddingProvider: Sync {
    fn dimension(&self) -> usize;
    fn embed(&self, tokens: &[String]) -> Result<Vec<Vec<f64>>>;
}

pub fn l2_normalize(v: &mut [f64]) {
    let norm = v.iter().map(|x| x * x).sum::<f64>().sqrt();
    if norm > 0.0 {
        v.iter_mut().for_each(|x| *x /= norm);
    }
}

/// Offline embedder: each token is the normalized sum of pseudo-random
/// vectors seeded from the token itself and its character trigrams, so
/// OCR-garbled spellings of a word land close to the clean spelling.
#[derive(Debug, Clone)]
pub struct HashedEmbedder {
    dim: usize,
    seed: u64,
}

impl HashedEmbedder {
    pub fn new(dim: usize, seed: u64) -> Self {
        assert!(dim > 0);
        HashedEmbedder { dim, seed }
    }

    fn feature_vector(&self, feature: &str, weight: f64, acc: &mut [f64]) {
        let digest = Sha256::digest(feature.as_bytes());
        let mut head = [0u8; 8];
        head.copy_from_slice(&digest[..8]);
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed ^ u64::from_le_bytes(head));
        for x in acc.iter_mut() {
            *x += weight * rng.random_range(-1.0..1.0);
        }
    }

    pub fn embed_token(&self, token: &str) -> Vec<f64> {
        let mut v = vec![0.0; self.dim];
        self.feature_vector(&format!("w:{token}"), 1.0, &mut v);
        let padded: Vec<char> = format!("<{token}>").chars().collect();
        for tri in padded.windows(3) {
            let tri: String = tri.iter().collect();
            self.feature_vector(&format!("c:{tri}"), 0.5, &mut v);
        }
        l2_normalize(&mut v);
        v
    }
}

impl Default for HashedEmbedder {
    fn default() -> Self {
        HashedEmbedder::new(256, 0x5eed)
    }
}

impl EmbeddingProvider for HashedEmbedder {
    fn dimension(&self) -> usize {
        self.dim
    }

    fn embed(&self, tokens: &[String]) -> Result<Vec<Vec<f64>>> {
        Ok(tokens.iter().map(|t| self.embed_token(t)).collect())
    }
}

/// Fixed lookup table, mostly for toy evaluations.
#[derive(Debug, Clone)]
pub struct StaticEmbedder {
    dim: usize,
    table: HashMap<String, Vec<f64>>,
}

impl StaticEmbedder {
    pub fn new<I: IntoIterator<Item = (String, Vec<f64>)>>(entries: I) -> Result<Self> {
        let mut dim = None;
        let mut table = HashMap::new();
        for (tok, mut v) in entries {
            if *dim.get_or_insert(v.len()) != v.len() {
                return Err(Error::InvalidArgument(format!("embedding for `{tok}` has wrong dimension")));
            }
            l2_normalize(&mut v);
            table.insert(tok, v);
        }
        Ok(StaticEmbedder {
            dim: dim.unwrap_or(0),
            table,
        })
    }
}

impl EmbeddingProvider for StaticEmbedder {
    fn dimension(&self) -> usize {
        self.dim
    }

    fn embed(&self, tokens: &[String]) -> Result<Vec<Vec<f64>>> {
        tokens
            .iter()
            .map(|t| {
                self.table
                    .get(t)
                    .cloned()
                    .ok_or_else(|| Error::InvalidArgument(format!("no embedding for `{t}`")))
            })
            .collect()
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct BertScore {
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
}

/// Inverse document frequencies over a reference collection,
/// `ln((M + 1) / (df + 1))`.
#[derive(Debug, Clone, Default)]
pub struct IdfWeights {
    weights: HashMap<String, f64>,
    unseen: f64,
}

impl IdfWeights {
    pub fn from_references(references: &[Vec<String>]) -> Self {
        let m = references.len() as f64;
        let mut df: HashMap<&str, usize> = HashMap::new();
        for r in references {
            let uniq: HashSet<&str> = r.iter().map(String::as_str).collect();
            for t in uniq {
                *df.entry(t).or_default() += 1;
            }
        }
        IdfWeights {
            weights: df
                .into_iter()
                .map(|(t, d)| (t.to_string(), ((m + 1.0) / (d as f64 + 1.0)).ln()))
                .collect(),
            unseen: (m + 1.0).ln(),
        }
    }

    pub fn weight(&self, token: &str) -> f64 {
        self.weights.get(token).copied().unwrap_or(self.unseen)
    }
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn weighted_mean(values: &[f64], weights: &[f64]) -> f64 {
    let total: f64 = weights.iter().sum();
    if total <= 0.0 {
        return 0.0;
    }
    values.iter().zip(weights).map(|(v, w)| v * w).sum::<f64>() / total
}

/// Recall is the mean over reference tokens of their best cosine match in
/// the candidate; precision the mean over candidate tokens. Matches below
/// zero count as zero.
pub fn bertscore(
    candidate: &[String],
    reference: &[String],
    provider: &dyn EmbeddingProvider,
    idf: Option<&IdfWeights>,
) -> Result<BertScore> {
    if candidate.is_empty() || reference.is_empty() {
        return Ok(BertScore::default());
    }
    let cand = provider.embed(candidate)?;
    let refe = provider.embed(reference)?;
    let sim: Vec<Vec<f64>> = refe.iter().map(|r| cand.iter().map(|c| dot(r, c)).collect()).collect();

    let row_max: Vec<f64> = sim
        .iter()
        .map(|row| row.iter().copied().fold(f64::NEG_INFINITY, f64::max).max(0.0))
        .collect();
    let col_max: Vec<f64> = (0..cand.len())
        .map(|j| sim.iter().map(|row| row[j]).fold(f64::NEG_INFINITY, f64::max).max(0.0))
        .collect();

    let weights = |toks: &[String]| -> Vec<f64> {
        toks.iter().map(|t| idf.map_or(1.0, |w| w.weight(t))).collect()
    };
    let recall = weighted_mean(&row_max, &weights(reference)).min(1.0);
    let precision = weighted_mean(&col_max, &weights(candidate)).min(1.0);
    let f1 = if precision + recall == 0.0 {
        0.0
    } else {
        2.0 * precision * recall / (precision + recall)
    };
    Ok(BertScore { precision, recall, f1 })
}
