//! Model inputs in the four document/question/answer layouts, with a token
//! budget that only ever shortens the document part.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{DocumentRecord, QaAnnotation};
use crate::tokenizer::{token_spans, Vocabulary};

pub const DEFAULT_BUDGET: usize = 512;

const DOCUMENT_MARKER: &str = "Document: ";

/// (a) document only, (b) question, (c) answer, (d) question and answer.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum InputFormat {
    #[serde(rename = "a")]
    DocumentOnly,
    #[serde(rename = "b")]
    Question,
    #[serde(rename = "c")]
    Answer,
    #[serde(rename = "d")]
    QuestionAnswer,
}

impl InputFormat {
    pub fn letter(self) -> char {
        match self {
            InputFormat::DocumentOnly => 'a',
            InputFormat::Question => 'b',
            InputFormat::Answer => 'c',
            InputFormat::QuestionAnswer => 'd',
        }
    }

    pub fn needs_qa(self) -> bool {
        self != InputFormat::DocumentOnly
    }
}

impl fmt::Display for InputFormat {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.letter())
    }
}

impl FromStr for InputFormat {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "a" => Ok(InputFormat::DocumentOnly),
            "b" => Ok(InputFormat::Question),
            "c" => Ok(InputFormat::Answer),
            "d" => Ok(InputFormat::QuestionAnswer),
            other => Err(Error::InvalidArgument(format!("unknown input format `{other}`"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ComposedExample {
    pub doc_id: String,
    pub input_text: String,
    pub target_summary: Option<String>,
    pub format: InputFormat,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub input_token_count: Option<usize>,
    /// Byte offset where the document text starts inside `input_text`.
    #[serde(skip)]
    document_offset: Option<usize>,
}

impl ComposedExample {
    pub fn with_target(mut self, summary: impl Into<String>) -> Self {
        self.target_summary = Some(summary.into());
        self
    }

    pub fn document_offset(&self) -> usize {
        self.document_offset.unwrap_or_else(|| {
            self.input_text
                .find(DOCUMENT_MARKER)
                .map(|i| i + DOCUMENT_MARKER.len())
                .unwrap_or(self.input_text.len())
        })
    }

    /// Everything before the document text, `Document:` included.
    pub fn prefix(&self) -> &str {
        &self.input_text[..self.document_offset()]
    }

    pub fn document(&self) -> &str {
        &self.input_text[self.document_offset()..]
    }
}

fn require<'a>(qa: Option<&'a QaAnnotation>, format: InputFormat, field: &'static str) -> Result<&'a str> {
    let qa = qa.ok_or(Error::MissingQaField {
        format: format.letter(),
        field,
    })?;
    let value = if field == "question" { &qa.question } else { &qa.answer };
    if value.trim().is_empty() {
        return Err(Error::MissingQaField {
            format: format.letter(),
            field,
        });
    }
    Ok(value.trim())
}

pub fn compose_input(record: &DocumentRecord, qa: Option<&QaAnnotation>, format: InputFormat) -> Result<ComposedExample> {
    let mut prefix = String::new();
    if matches!(format, InputFormat::Question | InputFormat::QuestionAnswer) {
        prefix.push_str("Question: ");
        prefix.push_str(require(qa, format, "question")?);
        prefix.push(' ');
    }
    if matches!(format, InputFormat::Answer | InputFormat::QuestionAnswer) {
        prefix.push_str("Answer: ");
        prefix.push_str(require(qa, format, "answer")?);
        prefix.push(' ');
    }
    prefix.push_str(DOCUMENT_MARKER);
    let offset = prefix.len();
    let mut input_text = prefix;
    input_text.push_str(&record.ocr_text);
    Ok(ComposedExample {
        doc_id: record.doc_id.clone(),
        input_text,
        target_summary: None,
        format,
        input_token_count: None,
        document_offset: Some(offset),
    })
}

/// Cuts document tokens from the end until the whole input fits in `budget`
/// tokens. The question/answer prefix is never shortened.
pub fn truncate_to_budget(example: &ComposedExample, vocab: &Vocabulary, budget: usize) -> Result<ComposedExample> {
    let offset = example.document_offset();
    let prefix_tokens = vocab.token_count(example.prefix());
    if prefix_tokens > budget {
        return Err(Error::PrefixOverBudget { prefix_tokens, budget });
    }
    let document = example.document();
    let spans = token_spans(document);
    let keep = spans.len().min(budget - prefix_tokens);

    let mut out = example.clone();
    if keep < spans.len() {
        let end = if keep == 0 { 0 } else { spans[keep - 1].1 };
        out.input_text.truncate(offset + end);
    }
    out.input_token_count = Some(prefix_tokens + keep);
    out.document_offset = Some(offset);
    Ok(out)
}
