//! Quality gates: exact-duplicate removal, empty/short removal and seeded
//! subset sampling.

use std::collections::HashSet;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::model::DocumentRecord;

pub const DEFAULT_MIN_WORDS: usize = 100;

pub type Fingerprint = [u8; 32];

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct FilterReport {
    pub input_count: usize,
    pub removed_duplicates: usize,
    pub removed_empty: usize,
    pub removed_short: usize,
    pub output_count: usize,
}

impl FilterReport {
    pub fn reconciles(&self) -> bool {
        self.input_count
            == self.output_count + self.removed_duplicates + self.removed_empty + self.removed_short
    }

    /// Chains a later stage's report onto this one.
    pub fn then(self, next: FilterReport) -> FilterReport {
        FilterReport {
            input_count: self.input_count,
            removed_duplicates: self.removed_duplicates + next.removed_duplicates,
            removed_empty: self.removed_empty + next.removed_empty,
            removed_short: self.removed_short + next.removed_short,
            output_count: next.output_count,
        }
    }
}

fn normalized_for_hash(text: &str) -> String {
    text.split_whitespace()
        .map(str::to_lowercase)
        .collect::<Vec<_>>()
        .join(" ")
}

/// SHA-256 of the lowercased, whitespace-collapsed, trimmed text.
pub fn content_fingerprint(text: &str) -> Fingerprint {
    Sha256::digest(normalized_for_hash(text).as_bytes()).into()
}

fn is_empty_text(record: &DocumentRecord) -> bool {
    record.ocr_text.trim().is_empty()
}

/// Drops later copies of fingerprint-equal texts, keeping the smallest
/// `doc_id`. Output is sorted by `doc_id`.
///
/// Empty pages are left for the empty-content gate so that they are not
/// counted as duplicates of one another.
pub fn dedup(mut records: Vec<DocumentRecord>) -> (Vec<DocumentRecord>, FilterReport) {
    records.sort_by(|a, b| a.doc_id.cmp(&b.doc_id));
    let input_count = records.len();
    let prints: Vec<Option<Fingerprint>> = records
        .par_iter()
        .map(|r| (!is_empty_text(r)).then(|| content_fingerprint(&r.ocr_text)))
        .collect();
    let mut seen = HashSet::with_capacity(records.len());
    let kept: Vec<DocumentRecord> = records
        .into_iter()
        .zip(prints)
        .filter(|(_, fp)| fp.is_none_or(|fp| seen.insert(fp)))
        .map(|(r, _)| r)
        .collect();
    let report = FilterReport {
        input_count,
        removed_duplicates: input_count - kept.len(),
        output_count: kept.len(),
        ..Default::default()
    };
    (kept, report)
}

/// Keeps records with at least `min_words` whitespace tokens. Empty pages are
/// always dropped and reported separately from short ones.
pub fn min_word_filter(records: Vec<DocumentRecord>, min_words: usize) -> (Vec<DocumentRecord>, FilterReport) {
    let mut report = FilterReport {
        input_count: records.len(),
        ..Default::default()
    };
    let kept: Vec<DocumentRecord> = records
        .into_iter()
        .filter(|r| {
            if is_empty_text(r) {
                report.removed_empty += 1;
                false
            } else if r.word_count < min_words {
                report.removed_short += 1;
                false
            } else {
                true
            }
        })
        .collect();
    report.output_count = kept.len();
    (kept, report)
}

/// Dedup followed by the empty/short gate.
pub fn run_filters(records: Vec<DocumentRecord>, min_words: usize) -> (Vec<DocumentRecord>, FilterReport) {
    let (deduped, first) = dedup(records);
    let (kept, second) = min_word_filter(deduped, min_words);
    (kept, first.then(second))
}

/// Uniform sample of `k` records without replacement, sorted by `doc_id`.
pub fn sample_subset(records: &[DocumentRecord], k: usize, seed: u64) -> Result<Vec<DocumentRecord>> {
    if k > records.len() {
        return Err(Error::InvalidArgument(format!(
            "subset size {k} exceeds {} available records",
            records.len()
        )));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut picked: Vec<DocumentRecord> = rand::seq::index::sample(&mut rng, records.len(), k)
        .into_iter()
        .map(|i| records[i].clone())
        .collect();
    picked.sort_by(|a, b| a.doc_id.cmp(&b.doc_id));
    Ok(picked)
}
