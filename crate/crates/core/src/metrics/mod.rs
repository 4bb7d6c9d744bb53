//! ROUGE and BERTScore over prediction/reference pairs.

pub mod bertscore;
pub mod rouge;

use std::collections::{BTreeMap, BTreeSet};
use std::path::Path;
use std::str::FromStr;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

pub use bertscore::{bertscore, BertScore, EmbeddingProvider, HashedEmbedder, IdfWeights, StaticEmbedder};
pub use rouge::{lcs_length, rouge_l, rouge_lsum, rouge_n, RougeScore};

use crate::annotate::client::{embeddings_agent, post_json_with_retry, RetryPolicy};
use crate::error::{Error, Result};
use crate::jsonl::read_jsonl;
use crate::model::{DocScores, MetricReport};
use crate::tokenizer::tokenize;

/// One line of a predictions or references file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SummaryRecord {
    pub doc_id: String,
    pub summary: String,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ProviderKind {
    Hashed,
    Remote,
}

impl FromStr for ProviderKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "hashed" => Ok(ProviderKind::Hashed),
            "remote" => Ok(ProviderKind::Remote),
            other => Err(Error::InvalidArgument(format!("unknown embedding provider `{other}`"))),
        }
    }
}

/// Client for an `/v1/embeddings` endpoint. Token vectors are fetched in
/// batches and L2-normalized.
pub struct RemoteEmbedder {
    url: String,
    model: String,
    api_key: Option<String>,
    dim: usize,
    batch_size: usize,
    policy: RetryPolicy,
    agent: ureq::Agent,
}

impl RemoteEmbedder {
    pub fn new(base_url: &str, model: &str, api_key: Option<String>, dim: usize, policy: RetryPolicy, timeout_secs: u64) -> Self {
        RemoteEmbedder {
            url: format!("{}/v1/embeddings", base_url.trim_end_matches('/')),
            model: model.to_string(),
            api_key,
            dim,
            batch_size: 256,
            policy,
            agent: embeddings_agent(timeout_secs),
        }
    }

    fn embed_batch(&self, tokens: &[String]) -> Result<Vec<Vec<f64>>> {
        let body = json!({"model": self.model, "input": tokens});
        let payload = post_json_with_retry(&self.agent, &self.url, self.api_key.as_deref(), &body, self.policy)?;
        let data = payload
            .get("data")
            .and_then(Value::as_array)
            .ok_or_else(|| Error::LlmPayload("missing data array".into()))?;
        if data.len() != tokens.len() {
            return Err(Error::LlmPayload(format!("expected {} embeddings, got {}", tokens.len(), data.len())));
        }
        data.iter()
            .map(|item| {
                let mut v: Vec<f64> = item
                    .get("embedding")
                    .and_then(Value::as_array)
                    .ok_or_else(|| Error::LlmPayload("missing embedding".into()))?
                    .iter()
                    .map(|x| x.as_f64().ok_or_else(|| Error::LlmPayload("non-numeric embedding".into())))
                    .collect::<Result<_>>()?;
                if v.len() != self.dim {
                    return Err(Error::LlmPayload(format!("embedding dimension {} != {}", v.len(), self.dim)));
                }
                bertscore::l2_normalize(&mut v);
                Ok(v)
            })
            .collect()
    }
}

impl EmbeddingProvider for RemoteEmbedder {
    fn dimension(&self) -> usize {
        self.dim
    }

    fn embed(&self, tokens: &[String]) -> Result<Vec<Vec<f64>>> {
        let mut out = Vec::with_capacity(tokens.len());
        for chunk in tokens.chunks(self.batch_size) {
            out.extend(self.embed_batch(chunk)?);
        }
        Ok(out)
    }
}

/// Scores one candidate against one reference.
pub fn score_pair(candidate: &str, reference: &str, provider: Option<&dyn EmbeddingProvider>) -> Result<DocScores> {
    let mut scores = DocScores {
        r1: rouge_n(candidate, reference, 1).f1,
        r2: rouge_n(candidate, reference, 2).f1,
        rl: rouge_l(candidate, reference).f1,
        rlsum: rouge_lsum(candidate, reference).f1,
        ..Default::default()
    };
    if let Some(p) = provider {
        let bs = bertscore(&tokenize(candidate), &tokenize(reference), p, None)?;
        scores.bs_p = Some(bs.precision);
        scores.bs_r = Some(bs.recall);
        scores.bs_f1 = Some(bs.f1);
    }
    Ok(scores)
}

fn index(records: Vec<SummaryRecord>, path: &Path) -> Result<BTreeMap<String, String>> {
    let mut map = BTreeMap::new();
    for r in records {
        if map.insert(r.doc_id.clone(), r.summary).is_some() {
            return Err(Error::DuplicateId(format!("{} in {}", r.doc_id, path.display())));
        }
    }
    Ok(map)
}

/// Joins the pairs on doc_id and scores them. Every id must appear on both
/// sides.
pub fn evaluate_pairs(
    predictions: &BTreeMap<String, String>,
    references: &BTreeMap<String, String>,
    provider: Option<&dyn EmbeddingProvider>,
) -> Result<MetricReport> {
    let pred_ids: BTreeSet<&String> = predictions.keys().collect();
    let ref_ids: BTreeSet<&String> = references.keys().collect();
    let no_reference: Vec<String> = pred_ids.difference(&ref_ids).map(|s| s.to_string()).collect();
    if !no_reference.is_empty() {
        return Err(Error::UnmatchedIds { side: "references", ids: no_reference });
    }
    let no_prediction: Vec<String> = ref_ids.difference(&pred_ids).map(|s| s.to_string()).collect();
    if !no_prediction.is_empty() {
        return Err(Error::UnmatchedIds { side: "predictions", ids: no_prediction });
    }
    let per_doc = predictions
        .par_iter()
        .map(|(id, cand)| score_pair(cand, &references[id], provider).map(|s| (id.clone(), s)))
        .collect::<Result<BTreeMap<_, _>>>()?;
    Ok(MetricReport::from_per_doc(per_doc))
}

pub fn evaluate_corpus(
    predictions: &Path,
    references: &Path,
    provider: Option<&dyn EmbeddingProvider>,
) -> Result<MetricReport> {
    let preds = index(read_jsonl(predictions)?, predictions)?;
    let refs = index(read_jsonl(references)?, references)?;
    evaluate_pairs(&preds, &refs, provider)
}
