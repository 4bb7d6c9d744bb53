//! Domain records exchanged between pipeline stages.

use std::collections::{BTreeMap, HashSet};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::jsonl;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Source {
    PretrainCorpus,
    DownstreamCorpus,
}

/// One OCR'd document page.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DocumentRecord {
    pub doc_id: String,
    pub ocr_text: String,
    pub raw_labels: Vec<String>,
    pub canonical_label: Option<String>,
    pub source: Source,
    pub word_count: usize,
}

impl DocumentRecord {
    pub fn new(
        doc_id: impl Into<String>,
        ocr_text: impl Into<String>,
        raw_labels: Vec<String>,
        source: Source,
    ) -> Self {
        let ocr_text = ocr_text.into();
        DocumentRecord {
            doc_id: doc_id.into(),
            word_count: word_count(&ocr_text),
            ocr_text,
            raw_labels,
            canonical_label: None,
            source,
        }
    }

    pub fn with_label(mut self, label: impl Into<String>) -> Self {
        self.canonical_label = Some(label.into());
        self
    }

    pub fn validate(&self) -> Result<()> {
        if self.doc_id.is_empty() {
            return Err(Error::InvalidRecord {
                doc_id: String::new(),
                message: "empty doc_id".into(),
            });
        }
        let actual = word_count(&self.ocr_text);
        if actual != self.word_count {
            return Err(Error::InvalidRecord {
                doc_id: self.doc_id.clone(),
                message: format!("word_count {} but text has {actual} words", self.word_count),
            });
        }
        Ok(())
    }
}

/// Whitespace-token count.
pub fn word_count(text: &str) -> usize {
    text.split_whitespace().count()
}

/// Which prompt produced a QA annotation.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum QaTemplate {
    Prompt1,
    Prompt3,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QaAnnotation {
    pub doc_id: String,
    pub question: String,
    pub answer: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub score: Option<f64>,
    pub model_name: String,
    pub template_id: QaTemplate,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SummaryAnnotation {
    pub doc_id: String,
    pub summary: String,
    pub score: f64,
    pub model_name: String,
}

/// Anything carrying a self-reported confidence score.
pub trait Scored {
    fn doc_id(&self) -> &str;
    fn score(&self) -> Option<f64>;
}

impl Scored for QaAnnotation {
    fn doc_id(&self) -> &str {
        &self.doc_id
    }
    fn score(&self) -> Option<f64> {
        self.score
    }
}

impl Scored for SummaryAnnotation {
    fn doc_id(&self) -> &str {
        &self.doc_id
    }
    fn score(&self) -> Option<f64> {
        Some(self.score)
    }
}

impl QaAnnotation {
    pub fn validate(&self) -> Result<()> {
        validate_common(&self.doc_id, self.score)?;
        if self.question.trim().is_empty() || self.answer.trim().is_empty() {
            return Err(Error::InvalidRecord {
                doc_id: self.doc_id.clone(),
                message: "empty question or answer".into(),
            });
        }
        Ok(())
    }
}

impl SummaryAnnotation {
    pub fn validate(&self) -> Result<()> {
        validate_common(&self.doc_id, Some(self.score))
    }
}

fn validate_common(doc_id: &str, score: Option<f64>) -> Result<()> {
    if doc_id.is_empty() {
        return Err(Error::InvalidRecord {
            doc_id: String::new(),
            message: "empty doc_id".into(),
        });
    }
    if let Some(s) = score {
        if !(0.0..=1.0).contains(&s) {
            return Err(Error::InvalidRecord {
                doc_id: doc_id.to_string(),
                message: format!("score {s} outside [0, 1]"),
            });
        }
    }
    Ok(())
}

/// Scores for a single prediction/reference pair. BERTScore fields are
/// absent when that metric was not requested.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct DocScores {
    pub r1: f64,
    pub r2: f64,
    pub rl: f64,
    pub rlsum: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub bs_p: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub bs_r: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub bs_f1: Option<f64>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct MetricReport {
    pub per_doc: BTreeMap<String, DocScores>,
    pub corpus_mean: DocScores,
}

impl MetricReport {
    pub fn from_per_doc(per_doc: BTreeMap<String, DocScores>) -> Self {
        let n = per_doc.len();
        let mut mean = DocScores::default();
        if n > 0 {
            let nf = n as f64;
            let avg = |f: &dyn Fn(&DocScores) -> f64| per_doc.values().map(f).sum::<f64>() / nf;
            let avg_opt = |f: &dyn Fn(&DocScores) -> Option<f64>| {
                per_doc
                    .values()
                    .map(f)
                    .collect::<Option<Vec<_>>>()
                    .map(|v| v.iter().sum::<f64>() / nf)
            };
            mean = DocScores {
                r1: avg(&|s| s.r1),
                r2: avg(&|s| s.r2),
                rl: avg(&|s| s.rl),
                rlsum: avg(&|s| s.rlsum),
                bs_p: avg_opt(&|s| s.bs_p),
                bs_r: avg_opt(&|s| s.bs_r),
                bs_f1: avg_opt(&|s| s.bs_f1),
            };
        }
        MetricReport {
            per_doc,
            corpus_mean: mean,
        }
    }
}

pub fn write_records(records: &[DocumentRecord], path: &Path) -> Result<usize> {
    jsonl::write_jsonl(records, path)
}

/// Reads and validates a record file. Rejects empty or duplicate ids and
/// stale word counts.
pub fn read_records(path: &Path) -> Result<Vec<DocumentRecord>> {
    let records: Vec<DocumentRecord> = jsonl::read_jsonl(path)?;
    let mut seen = HashSet::with_capacity(records.len());
    for record in &records {
        record.validate()?;
        if !seen.insert(record.doc_id.as_str()) {
            return Err(Error::DuplicateId(record.doc_id.clone()));
        }
    }
    Ok(records)
}

pub fn read_qa_annotations(path: &Path) -> Result<Vec<QaAnnotation>> {
    let items: Vec<QaAnnotation> = jsonl::read_jsonl(path)?;
    items.iter().try_for_each(QaAnnotation::validate)?;
    Ok(items)
}

pub fn read_summary_annotations(path: &Path) -> Result<Vec<SummaryAnnotation>> {
    let items: Vec<SummaryAnnotation> = jsonl::read_jsonl(path)?;
    items.iter().try_for_each(SummaryAnnotation::validate)?;
    Ok(items)
}
