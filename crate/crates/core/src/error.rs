use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("I/O error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("{path}:{line}: malformed record: {message}")]
    MalformedLine {
        path: PathBuf,
        line: usize,
        message: String,
    },

    #[error("duplicate doc_id `{0}`")]
    DuplicateId(String),

    #[error("invalid record `{doc_id}`: {message}")]
    InvalidRecord { doc_id: String, message: String },

    #[error("no documents found in {0}")]
    NoDocuments(PathBuf),

    #[error("empty corpus")]
    EmptyCorpus,

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("missing placeholder `{0}`")]
    MissingPlaceholder(String),

    #[error("input format ({format}) requires a {field}")]
    MissingQaField { format: char, field: &'static str },

    #[error("prefix of {prefix_tokens} tokens exceeds budget of {budget}")]
    PrefixOverBudget { prefix_tokens: usize, budget: usize },

    #[error("LLM endpoint returned status {status} after {attempts} attempt(s)")]
    LlmStatus { status: u16, attempts: u32 },

    #[error("LLM transport error: {0}")]
    LlmTransport(String),

    #[error("unparsable endpoint payload: {0}")]
    LlmPayload(String),

    #[error("missing API key (set {0})")]
    MissingApiKey(&'static str),

    #[error("doc_ids missing from {side}: {ids:?}")]
    UnmatchedIds { side: &'static str, ids: Vec<String> },

    #[error("config error: {0}")]
    Config(String),
}

impl Error {
    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    /// Short machine-readable kind, used by the CLI error summary.
    pub fn kind(&self) -> &'static str {
        match self {
            Error::Io { .. } => "io",
            Error::MalformedLine { .. } => "malformed_line",
            Error::DuplicateId(_) => "duplicate_id",
            Error::InvalidRecord { .. } => "invalid_record",
            Error::NoDocuments(_) => "no_documents",
            Error::EmptyCorpus => "empty_corpus",
            Error::InvalidArgument(_) => "invalid_argument",
            Error::MissingPlaceholder(_) => "missing_placeholder",
            Error::MissingQaField { .. } => "missing_qa_field",
            Error::PrefixOverBudget { .. } => "prefix_over_budget",
            Error::LlmStatus { .. } => "llm_status",
            Error::LlmTransport(_) => "llm_transport",
            Error::LlmPayload(_) => "llm_payload",
            Error::MissingApiKey(_) => "missing_api_key",
            Error::UnmatchedIds { .. } => "unmatched_ids",
            Error::Config(_) => "config",
        }
    }
}
