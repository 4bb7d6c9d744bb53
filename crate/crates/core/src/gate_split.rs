//! Confidence gating of LLM annotations and seeded train/validation/test
//! splits.

use std::collections::BTreeMap;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::floor_share;
use crate::model::Scored;

pub const DEFAULT_THRESHOLD: f64 = 0.9;
pub const DEFAULT_RATIOS: [f64; 3] = [0.7, 0.15, 0.15];

/// Splits annotations into those scoring strictly above `threshold` and the
/// rest. Every annotation must carry a score.
pub fn confidence_gate<T: Scored + Clone>(annotations: &[T], threshold: f64) -> Result<(Vec<T>, Vec<T>)> {
    let mut kept = Vec::new();
    let mut dropped = Vec::new();
    for a in annotations {
        let score = a.score().ok_or_else(|| Error::InvalidRecord {
            doc_id: a.doc_id().to_string(),
            message: "annotation has no confidence score".into(),
        })?;
        if score > threshold {
            kept.push(a.clone());
        } else {
            dropped.push(a.clone());
        }
    }
    Ok((kept, dropped))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SplitManifest {
    pub seed: u64,
    pub ratios: [f64; 3],
    pub train_ids: Vec<String>,
    pub val_ids: Vec<String>,
    pub test_ids: Vec<String>,
}

fn check_ratios(ratios: [f64; 3]) -> Result<()> {
    if ratios.iter().any(|r| !(0.0..=1.0).contains(r)) || (ratios.iter().sum::<f64>() - 1.0).abs() > 1e-9 {
        return Err(Error::InvalidArgument(format!(
            "split ratios {ratios:?} must be in [0, 1] and sum to 1"
        )));
    }
    Ok(())
}

/// Shuffles the sorted ids with `seed`; the first `⌊r₀·n⌋` go to train, the
/// next `⌊r₁·n⌋` to validation and the remainder to test.
pub fn split_dataset(ids: &[String], seed: u64, ratios: [f64; 3]) -> Result<SplitManifest> {
    check_ratios(ratios)?;
    let mut manifest = SplitManifest {
        seed,
        ratios,
        train_ids: Vec::new(),
        val_ids: Vec::new(),
        test_ids: Vec::new(),
    };
    assign(ids, seed, ratios, &mut manifest)?;
    manifest.train_ids.sort();
    manifest.val_ids.sort();
    manifest.test_ids.sort();
    Ok(manifest)
}

fn assign(ids: &[String], seed: u64, ratios: [f64; 3], manifest: &mut SplitManifest) -> Result<()> {
    let mut order: Vec<String> = ids.to_vec();
    order.sort();
    if let Some(w) = order.windows(2).find(|w| w[0] == w[1]) {
        return Err(Error::DuplicateId(w[0].clone()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    order.shuffle(&mut rng);
    let n = order.len();
    let n_train = floor_share(ratios[0], n);
    let n_val = floor_share(ratios[1], n).min(n - n_train);
    let mut it = order.into_iter();
    manifest.train_ids.extend(it.by_ref().take(n_train));
    manifest.val_ids.extend(it.by_ref().take(n_val));
    manifest.test_ids.extend(it);
    Ok(())
}

/// Applies the floor rule within each label group independently.
pub fn split_stratified(labeled: &[(String, String)], seed: u64, ratios: [f64; 3]) -> Result<SplitManifest> {
    check_ratios(ratios)?;
    let mut groups: BTreeMap<&str, Vec<String>> = BTreeMap::new();
    for (id, label) in labeled {
        groups.entry(label.as_str()).or_default().push(id.clone());
    }
    let mut manifest = SplitManifest {
        seed,
        ratios,
        train_ids: Vec::new(),
        val_ids: Vec::new(),
        test_ids: Vec::new(),
    };
    for (i, ids) in groups.values().enumerate() {
        assign(ids, seed.wrapping_add(i as u64), ratios, &mut manifest)?;
    }
    manifest.train_ids.sort();
    manifest.val_ids.sort();
    manifest.test_ids.sort();
    let mut all: Vec<&String> = manifest
        .train_ids
        .iter()
        .chain(&manifest.val_ids)
        .chain(&manifest.test_ids)
        .collect();
    all.sort();
    if let Some(w) = all.windows(2).find(|w| w[0] == w[1]) {
        return Err(Error::DuplicateId(w[0].clone()));
    }
    Ok(manifest)
}
