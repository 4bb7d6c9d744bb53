//! Marker-based parsing of LLM completions. Every input yields either a value
//! or a typed [`ParseFailure`].

use thiserror::Error;

const QUESTION: &str = "Question:";
const ANSWER: &str = "Answer:";
const GOLD_SUMMARY: &str = "Gold Summary:";
const SCORE: &str = "Score:";

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ParseFailure {
    #[error("marker `{0}` not found")]
    MissingMarker(&'static str),
    #[error("`Answer:` appears only before `Question:`")]
    MarkersOutOfOrder,
    #[error("empty {0}")]
    EmptyField(&'static str),
    #[error("unparsable score `{0}`")]
    InvalidScore(String),
    #[error("score {0} outside [0, 1]")]
    ScoreOutOfRange(f64),
}

fn clean_field(s: &str, name: &'static str) -> Result<String, ParseFailure> {
    let t = s.trim();
    if t.is_empty() || t == "{}" {
        return Err(ParseFailure::EmptyField(name));
    }
    Ok(t.to_string())
}

/// Extracts `(question, answer)`. The last `Question:` that is followed by an
/// `Answer:` wins, so an echoed instruction block is skipped.
pub fn parse_qa_response(text: &str) -> Result<(String, String), ParseFailure> {
    let questions: Vec<usize> = text.match_indices(QUESTION).map(|(i, _)| i).collect();
    if questions.is_empty() {
        return Err(ParseFailure::MissingMarker(QUESTION));
    }
    if !text.contains(ANSWER) {
        return Err(ParseFailure::MissingMarker(ANSWER));
    }
    for &q in questions.iter().rev() {
        let q_end = q + QUESTION.len();
        if let Some(rel) = text[q_end..].find(ANSWER) {
            let a = q_end + rel;
            let question = clean_field(&text[q_end..a], "question")?;
            let answer = clean_field(&text[a + ANSWER.len()..], "answer")?;
            return Ok((question, answer));
        }
    }
    Err(ParseFailure::MarkersOutOfOrder)
}

/// Reads the leading decimal number of `s` and checks it lies in [0, 1].
pub fn parse_score_value(s: &str) -> Result<f64, ParseFailure> {
    let s = s.trim_start();
    let numeric: String = s.chars().take_while(|c| c.is_ascii_digit() || *c == '.').collect();
    let numeric = numeric.trim_end_matches('.');
    if numeric.is_empty() || !numeric.bytes().any(|b| b.is_ascii_digit()) {
        let shown: String = s.chars().take(16).collect();
        return Err(ParseFailure::InvalidScore(shown));
    }
    let value: f64 = numeric
        .parse()
        .map_err(|_| ParseFailure::InvalidScore(numeric.to_string()))?;
    if !(0.0..=1.0).contains(&value) {
        return Err(ParseFailure::ScoreOutOfRange(value));
    }
    Ok(value)
}

/// Extracts `(summary, score)`. The last `Score:` is authoritative; the
/// summary is the text between `Gold Summary:` (when present) and that score.
pub fn parse_summary_response(text: &str) -> Result<(String, f64), ParseFailure> {
    let score_at = text.rfind(SCORE).ok_or(ParseFailure::MissingMarker(SCORE))?;
    let score = parse_score_value(&text[score_at + SCORE.len()..])?;
    let body = &text[..score_at];
    let summary = match body.rfind(GOLD_SUMMARY) {
        Some(g) => &body[g + GOLD_SUMMARY.len()..],
        None => body,
    };
    Ok((clean_field(summary, "summary")?, score))
}

/// A bare confidence score, optionally preceded by `Score:`.
pub fn parse_score_response(text: &str) -> Result<f64, ParseFailure> {
    match text.rfind(SCORE) {
        Some(at) => parse_score_value(&text[at + SCORE.len()..]),
        None => parse_score_value(text),
    }
}
