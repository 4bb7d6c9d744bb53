//! LLM annotation: prompt rendering, endpoint calls, response parsing and an
//! on-disk response cache.

pub mod client;
pub mod parse;
pub mod prompts;

use std::collections::{BTreeMap, HashMap};
use std::io::Write;
use std::path::{Path, PathBuf};
use std::str::FromStr;
use std::sync::atomic::{AtomicUsize, Ordering};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

pub use client::{call_llm, CompletionBackend, HttpChatClient, LlmConfig, RetryPolicy};
pub use parse::{parse_qa_response, parse_score_response, parse_summary_response, ParseFailure};
pub use prompts::{render_prompt, PromptFields, TemplateId};

use crate::error::{Error, Result};
use crate::model::{DocumentRecord, QaAnnotation, QaTemplate, SummaryAnnotation};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Task {
    Qa,
    Summary,
    QaScore,
}

impl Task {
    pub fn template(self) -> TemplateId {
        match self {
            Task::Qa => TemplateId::Prompt1Qa,
            Task::Summary => TemplateId::Prompt2Summary,
            Task::QaScore => TemplateId::Prompt3QaScore,
        }
    }
}

impl FromStr for Task {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "qa" => Ok(Task::Qa),
            "summary" => Ok(Task::Summary),
            "qa_score" | "qa-score" => Ok(Task::QaScore),
            other => Err(Error::InvalidArgument(format!("unknown task `{other}`"))),
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
struct CacheEntry {
    template_id: TemplateId,
    model_name: String,
    completion: String,
}

/// Raw completions keyed by the digest of (template, rendered prompt, model).
#[derive(Debug, Clone)]
pub struct ResponseCache {
    dir: PathBuf,
}

impl ResponseCache {
    pub fn open(dir: &Path) -> Result<Self> {
        std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
        Ok(ResponseCache { dir: dir.to_path_buf() })
    }

    pub fn key(template: TemplateId, prompt: &str, model: &str) -> String {
        let mut h = Sha256::new();
        h.update(template.as_str().as_bytes());
        h.update([0u8]);
        h.update(prompt.as_bytes());
        h.update([0u8]);
        h.update(model.as_bytes());
        hex::encode(h.finalize())
    }

    fn path(&self, key: &str) -> PathBuf {
        self.dir.join(format!("{key}.json"))
    }

    pub fn get(&self, key: &str) -> Option<String> {
        let text = std::fs::read_to_string(self.path(key)).ok()?;
        serde_json::from_str::<CacheEntry>(&text).ok().map(|e| e.completion)
    }

    /// Writes to a temporary file in the cache directory, then renames it.
    pub fn put(&self, key: &str, template: TemplateId, model: &str, completion: &str) -> Result<()> {
        let entry = CacheEntry {
            template_id: template,
            model_name: model.to_string(),
            completion: completion.to_string(),
        };
        let mut tmp = tempfile::NamedTempFile::new_in(&self.dir).map_err(|e| Error::io(&self.dir, e))?;
        serde_json::to_writer(&mut tmp, &entry).map_err(|e| Error::Config(e.to_string()))?;
        tmp.flush().map_err(|e| Error::io(&self.dir, e))?;
        let target = self.path(key);
        tmp.persist(&target).map_err(|e| Error::io(&target, e.error))?;
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FailureKind {
    /// Prompt could not be built (missing document or placeholder value).
    Input,
    /// The endpoint kept failing or returned an unusable payload.
    Endpoint,
    /// The completion did not match the expected markers.
    Parse,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AnnotationFailure {
    pub doc_id: String,
    pub kind: FailureKind,
    pub reason: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub completion: Option<String>,
}

#[derive(Debug, Clone, Default)]
pub struct AnnotationRun {
    pub qa: Vec<QaAnnotation>,
    pub summaries: Vec<SummaryAnnotation>,
    pub failures: Vec<AnnotationFailure>,
    pub endpoint_calls: usize,
    pub cache_hits: usize,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize)]
pub struct AnnotationSummary {
    pub annotated: usize,
    pub failed: usize,
    pub endpoint_calls: usize,
    pub cache_hits: usize,
}

impl AnnotationRun {
    pub fn summary(&self) -> AnnotationSummary {
        AnnotationSummary {
            annotated: self.qa.len() + self.summaries.len(),
            failed: self.failures.len(),
            endpoint_calls: self.endpoint_calls,
            cache_hits: self.cache_hits,
        }
    }
}

/// What to annotate.
#[derive(Debug, Clone, Copy)]
pub enum TaskInput<'a> {
    /// Question-answer generation; `keys` supplies the optional key line per
    /// doc_id.
    Qa { keys: &'a HashMap<String, String> },
    Summary,
    /// Confidence scoring of existing question-answer pairs.
    QaScore { pairs: &'a [QaAnnotation] },
}

impl TaskInput<'_> {
    pub fn task(&self) -> Task {
        match self {
            TaskInput::Qa { .. } => Task::Qa,
            TaskInput::Summary => Task::Summary,
            TaskInput::QaScore { .. } => Task::QaScore,
        }
    }
}

struct Job<'a> {
    doc_id: &'a str,
    fields: std::result::Result<PromptFields, String>,
    pair: Option<&'a QaAnnotation>,
}

enum Outcome {
    Qa(QaAnnotation),
    Summary(SummaryAnnotation),
    Failed(AnnotationFailure),
}

fn category_of(record: &DocumentRecord) -> Option<String> {
    record
        .canonical_label
        .clone()
        .or_else(|| record.raw_labels.first().cloned())
}

fn jobs<'a>(records: &'a [DocumentRecord], input: TaskInput<'a>) -> Vec<Job<'a>> {
    match input {
        TaskInput::Qa { keys } => records
            .iter()
            .map(|r| Job {
                doc_id: &r.doc_id,
                fields: Ok(PromptFields {
                    category: category_of(r),
                    key: keys.get(&r.doc_id).cloned(),
                    document: Some(r.ocr_text.clone()),
                    ..Default::default()
                }),
                pair: None,
            })
            .collect(),
        TaskInput::Summary => records
            .iter()
            .map(|r| Job {
                doc_id: &r.doc_id,
                fields: Ok(PromptFields {
                    document: Some(r.ocr_text.clone()),
                    ..Default::default()
                }),
                pair: None,
            })
            .collect(),
        TaskInput::QaScore { pairs } => {
            let by_id: HashMap<&str, &DocumentRecord> = records.iter().map(|r| (r.doc_id.as_str(), r)).collect();
            pairs
                .iter()
                .map(|p| Job {
                    doc_id: &p.doc_id,
                    fields: by_id
                        .get(p.doc_id.as_str())
                        .map(|r| PromptFields {
                            document: Some(r.ocr_text.clone()),
                            question: Some(p.question.clone()),
                            answer: Some(p.answer.clone()),
                            ..Default::default()
                        })
                        .ok_or_else(|| "no document record for this pair".to_string()),
                    pair: Some(p),
                })
                .collect()
        }
    }
}

/// Annotates every record (or every pair, for scoring) through `backend`.
///
/// A completion is fetched at most once per (template, prompt, model): later
/// runs read it back from `cache`. Unparsable completions and endpoint errors
/// are reported in `failures`; results are ordered by doc_id.
pub fn annotate_corpus(
    records: &[DocumentRecord],
    input: TaskInput<'_>,
    backend: &dyn CompletionBackend,
    cache: &ResponseCache,
    parallelism: usize,
) -> Result<AnnotationRun> {
    let task = input.task();
    let template = task.template();
    let model = backend.model_name().to_string();
    let calls = AtomicUsize::new(0);
    let hits = AtomicUsize::new(0);

    let work = jobs(records, input);
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(parallelism.max(1))
        .build()
        .map_err(|e| Error::Config(e.to_string()))?;

    let outcomes: Vec<Outcome> = pool.install(|| {
        work.par_iter()
            .map(|job| {
                let fail = |kind: FailureKind, reason: String, completion: Option<String>| {
                    Outcome::Failed(AnnotationFailure {
                        doc_id: job.doc_id.to_string(),
                        kind,
                        reason,
                        completion,
                    })
                };
                let fields = match &job.fields {
                    Ok(f) => f,
                    Err(reason) => return fail(FailureKind::Input, reason.clone(), None),
                };
                let prompt = match render_prompt(template, fields) {
                    Ok(p) => p,
                    Err(e) => return fail(FailureKind::Input, e.to_string(), None),
                };
                let key = ResponseCache::key(template, &prompt, &model);
                let completion = match cache.get(&key) {
                    Some(c) => {
                        hits.fetch_add(1, Ordering::Relaxed);
                        c
                    }
                    None => {
                        calls.fetch_add(1, Ordering::Relaxed);
                        match backend.complete(&prompt) {
                            Ok(c) => {
                                if let Err(e) = cache.put(&key, template, &model, &c) {
                                    log::warn!("cache write failed for {}: {e}", job.doc_id);
                                }
                                c
                            }
                            Err(e) => return fail(FailureKind::Endpoint, e.to_string(), None),
                        }
                    }
                };
                let parsed = match task {
                    Task::Qa => parse_qa_response(&completion).map(|(question, answer)| {
                        Outcome::Qa(QaAnnotation {
                            doc_id: job.doc_id.to_string(),
                            question,
                            answer,
                            score: None,
                            model_name: model.clone(),
                            template_id: QaTemplate::Prompt1,
                        })
                    }),
                    Task::Summary => parse_summary_response(&completion).map(|(summary, score)| {
                        Outcome::Summary(SummaryAnnotation {
                            doc_id: job.doc_id.to_string(),
                            summary,
                            score,
                            model_name: model.clone(),
                        })
                    }),
                    Task::QaScore => parse_score_response(&completion).map(|score| {
                        let pair = job.pair.expect("scoring jobs carry their pair");
                        Outcome::Qa(QaAnnotation {
                            doc_id: job.doc_id.to_string(),
                            question: pair.question.clone(),
                            answer: pair.answer.clone(),
                            score: Some(score),
                            model_name: model.clone(),
                            template_id: QaTemplate::Prompt3,
                        })
                    }),
                };
                parsed.unwrap_or_else(|e| fail(FailureKind::Parse, e.to_string(), Some(completion)))
            })
            .collect()
    });

    let mut run = AnnotationRun {
        endpoint_calls: calls.into_inner(),
        cache_hits: hits.into_inner(),
        ..Default::default()
    };
    let mut qa = BTreeMap::new();
    let mut summaries = BTreeMap::new();
    for outcome in outcomes {
        match outcome {
            Outcome::Qa(a) => {
                qa.insert(a.doc_id.clone(), a);
            }
            Outcome::Summary(s) => {
                summaries.insert(s.doc_id.clone(), s);
            }
            Outcome::Failed(f) => run.failures.push(f),
        }
    }
    run.qa = qa.into_values().collect();
    run.summaries = summaries.into_values().collect();
    run.failures.sort_by(|a, b| a.doc_id.cmp(&b.doc_id));
    Ok(run)
}
