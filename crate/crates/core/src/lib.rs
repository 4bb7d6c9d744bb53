//! Dataset pipeline for domain-adaptive summarization of OCR'd administrative
//! documents: ingestion, quality filtering, LLM annotation, confidence gating,
//! input composition, masked pre-training pairs and summary metrics.

pub mod annotate;
pub mod compose;
pub mod config;
pub mod error;
pub mod filter;
pub mod gate_split;
pub mod ingest;
pub mod jsonl;
pub mod masking;
pub mod metrics;
pub mod model;
pub mod tokenizer;

pub use error::{Error, Result};

/// `⌊fraction · n⌋`, tolerant of binary rounding just below an integer
/// (`0.15 * 100` must give 15, not 14).
pub fn floor_share(fraction: f64, n: usize) -> usize {
    let exact = fraction * n as f64;
    let floored = (exact + 1e-9).floor();
    (floored.max(0.0) as usize).min(n)
}
