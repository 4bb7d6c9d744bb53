//! Word-level tokenizer with fixed special ids.
//!
//! Tokens are lowercased maximal runs of alphanumeric characters; every other
//! non-whitespace character is a token of its own. The vocabulary file holds
//! one token per line and the line number is the id.

use std::collections::HashMap;
use std::path::Path;

use crate::error::{Error, Result};
use crate::jsonl::atomic_write;

pub const PAD_ID: u32 = 0;
pub const BOS_ID: u32 = 1;
pub const EOS_ID: u32 = 2;
pub const UNK_ID: u32 = 3;
pub const MASK_ID: u32 = 4;

pub const SPECIAL_TOKENS: [&str; 5] = ["<pad>", "<s>", "</s>", "<unk>", "<mask>"];

/// Byte ranges of the tokens in `text`, in order.
pub fn token_spans(text: &str) -> Vec<(usize, usize)> {
    let mut spans = Vec::new();
    let mut run_start: Option<usize> = None;
    for (i, c) in text.char_indices() {
        if c.is_alphanumeric() {
            run_start.get_or_insert(i);
            continue;
        }
        if let Some(start) = run_start.take() {
            spans.push((start, i));
        }
        if !c.is_whitespace() {
            spans.push((i, i + c.len_utf8()));
        }
    }
    if let Some(start) = run_start {
        spans.push((start, text.len()));
    }
    spans
}

pub fn tokenize(text: &str) -> Vec<String> {
    token_spans(text)
        .into_iter()
        .map(|(s, e)| text[s..e].to_lowercase())
        .collect()
}

/// Canonical text form: lowercased tokens joined by single spaces.
pub fn normalize(text: &str) -> String {
    tokenize(text).join(" ")
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Vocabulary {
    tokens: Vec<String>,
    ids: HashMap<String, u32>,
}

impl Vocabulary {
    fn from_tokens(tokens: Vec<String>) -> Result<Self> {
        for (i, special) in SPECIAL_TOKENS.iter().enumerate() {
            if tokens.get(i).map(String::as_str) != Some(*special) {
                return Err(Error::Config(format!(
                    "vocabulary line {i} must be `{special}`"
                )));
            }
        }
        let mut ids = HashMap::with_capacity(tokens.len());
        for (i, tok) in tokens.iter().enumerate() {
            if ids.insert(tok.clone(), i as u32).is_some() {
                return Err(Error::Config(format!("duplicate vocabulary token `{tok}`")));
            }
        }
        Ok(Vocabulary { tokens, ids })
    }

    pub fn size(&self) -> usize {
        self.tokens.len()
    }

    pub fn id(&self, token: &str) -> Option<u32> {
        self.ids.get(token).copied()
    }

    pub fn token(&self, id: u32) -> Option<&str> {
        self.tokens.get(id as usize).map(String::as_str)
    }

    pub fn is_special(id: u32) -> bool {
        (id as usize) < SPECIAL_TOKENS.len()
    }

    pub fn encode(&self, text: &str, add_bos_eos: bool) -> Vec<u32> {
        let mut out = Vec::new();
        if add_bos_eos {
            out.push(BOS_ID);
        }
        out.extend(tokenize(text).iter().map(|t| self.id(t).unwrap_or(UNK_ID)));
        if add_bos_eos {
            out.push(EOS_ID);
        }
        out
    }

    /// Joins tokens with single spaces, dropping `<pad>`, `<s>` and `</s>`.
    pub fn decode(&self, ids: &[u32]) -> String {
        ids.iter()
            .filter(|&&id| !matches!(id, PAD_ID | BOS_ID | EOS_ID))
            .map(|&id| self.token(id).unwrap_or(SPECIAL_TOKENS[UNK_ID as usize]))
            .collect::<Vec<_>>()
            .join(" ")
    }

    pub fn token_count(&self, text: &str) -> usize {
        token_spans(text).len()
    }

    pub fn to_file_string(&self) -> String {
        let mut s = String::new();
        for tok in &self.tokens {
            s.push_str(tok);
            s.push('\n');
        }
        s
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        use std::io::Write;
        let body = self.to_file_string();
        atomic_write(path, |w| w.write_all(body.as_bytes()))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_tokens(text.lines().map(str::to_string).collect())
    }
}

/// Builds a vocabulary from the most frequent tokens of `texts`.
///
/// Keeps at most `max_size - 5` corpus tokens with frequency at least
/// `min_freq`, ordered by descending frequency then lexicographically.
pub fn build_vocab<'a, I>(texts: I, max_size: usize, min_freq: usize) -> Result<Vocabulary>
where
    I: IntoIterator<Item = &'a str>,
{
    if max_size < SPECIAL_TOKENS.len() {
        return Err(Error::InvalidArgument(format!(
            "max_size {max_size} smaller than the {} special tokens",
            SPECIAL_TOKENS.len()
        )));
    }
    let mut counts: HashMap<String, usize> = HashMap::new();
    let mut docs = 0usize;
    for text in texts {
        docs += 1;
        for tok in tokenize(text) {
            *counts.entry(tok).or_default() += 1;
        }
    }
    if docs == 0 {
        return Err(Error::EmptyCorpus);
    }
    let mut ranked: Vec<(String, usize)> = counts
        .into_iter()
        .filter(|(_, c)| *c >= min_freq.max(1))
        .collect();
    ranked.sort_by(|a, b| b.1.cmp(&a.1).then_with(|| a.0.cmp(&b.0)));
    ranked.truncate(max_size - SPECIAL_TOKENS.len());

    let tokens = SPECIAL_TOKENS
        .iter()
        .map(|s| s.to_string())
        .chain(ranked.into_iter().map(|(t, _)| t))
        .collect();
    Vocabulary::from_tokens(tokens)
}
