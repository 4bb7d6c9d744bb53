//! Token-masking corruption for denoising pre-training pairs.

use std::path::Path;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::floor_share;
use crate::jsonl;
use crate::tokenizer::{Vocabulary, BOS_ID, EOS_ID, MASK_ID, PAD_ID};

pub const DEFAULT_MASK_RATE: f64 = 0.15;
/// Encoder input limit, special tokens included.
pub const MAX_INPUT_TOKENS: usize = 512;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MaskedPair {
    pub corrupted: Vec<u32>,
    pub original: Vec<u32>,
    pub masked_positions: Vec<usize>,
    pub seed: u64,
    pub rate: f64,
}

impl MaskedPair {
    /// Puts the original ids back at every masked position.
    pub fn reconstruct(&self) -> Vec<u32> {
        let mut ids = self.corrupted.clone();
        for &p in &self.masked_positions {
            ids[p] = self.original[p];
        }
        ids
    }
}

fn maskable(id: u32) -> bool {
    !matches!(id, PAD_ID | BOS_ID | EOS_ID)
}

pub fn mask_tokens(ids: &[u32], rate: f64, seed: u64) -> Result<MaskedPair> {
    mask_tokens_from(ids, rate, seed, 0)
}

/// Masks `⌊rate · n⌋` of the maskable positions at index `first_maskable` or
/// later, chosen uniformly without replacement. `<s>`, `</s>` and `<pad>` are
/// never selected.
pub fn mask_tokens_from(ids: &[u32], rate: f64, seed: u64, first_maskable: usize) -> Result<MaskedPair> {
    if !(0.0..=1.0).contains(&rate) {
        return Err(Error::InvalidArgument(format!("mask rate {rate} outside [0, 1]")));
    }
    let candidates: Vec<usize> = ids
        .iter()
        .enumerate()
        .skip(first_maskable)
        .filter(|(_, &id)| maskable(id))
        .map(|(i, _)| i)
        .collect();
    let m = floor_share(rate, candidates.len());
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut positions: Vec<usize> = rand::seq::index::sample(&mut rng, candidates.len(), m)
        .into_iter()
        .map(|i| candidates[i])
        .collect();
    positions.sort_unstable();

    let mut corrupted = ids.to_vec();
    for &p in &positions {
        corrupted[p] = MASK_ID;
    }
    Ok(MaskedPair {
        corrupted,
        original: ids.to_vec(),
        masked_positions: positions,
        seed,
        rate,
    })
}

/// Per-document seed, independent of corpus order.
pub fn derive_seed(seed: u64, doc_id: &str) -> u64 {
    let digest = Sha256::digest(doc_id.as_bytes());
    let mut head = [0u8; 8];
    head.copy_from_slice(&digest[..8]);
    seed ^ u64::from_le_bytes(head)
}

/// Text to be turned into one pre-training pair.
#[derive(Debug, Clone, Copy)]
pub struct PretrainSource<'a> {
    pub doc_id: &'a str,
    pub text: &'a str,
    /// Leading text tokens that must stay unmasked (the QA prefix when only
    /// the document part should be corrupted).
    pub protected_tokens: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PretrainLine {
    pub doc_id: String,
    #[serde(flatten)]
    pub pair: MaskedPair,
}

pub fn encode_for_pretrain(text: &str, vocab: &Vocabulary) -> Vec<u32> {
    let mut ids = vocab.encode(text, false);
    ids.truncate(MAX_INPUT_TOKENS - 2);
    ids.insert(0, BOS_ID);
    ids.push(EOS_ID);
    ids
}

pub fn build_pretrain_set(
    sources: &[PretrainSource<'_>],
    vocab: &Vocabulary,
    rate: f64,
    seed: u64,
) -> Result<Vec<PretrainLine>> {
    sources
        .par_iter()
        .map(|src| {
            let ids = encode_for_pretrain(src.text, vocab);
            let pair = mask_tokens_from(&ids, rate, derive_seed(seed, src.doc_id), 1 + src.protected_tokens)?;
            Ok(PretrainLine {
                doc_id: src.doc_id.to_string(),
                pair,
            })
        })
        .collect()
}

/// Writes one masked pair per source as JSONL and returns the count.
pub fn emit_pretrain_set(
    sources: &[PretrainSource<'_>],
    vocab: &Vocabulary,
    rate: f64,
    seed: u64,
    path: &Path,
) -> Result<usize> {
    let lines = build_pretrain_set(sources, vocab, rate, seed)?;
    jsonl::write_jsonl(&lines, path)
}
