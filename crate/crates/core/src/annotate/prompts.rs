//! The three annotation prompts and their renderer.
//!
//! Templates are stored line by line. `{name}` is a placeholder; the literal
//! `{}` slots of the output indicators are left untouched.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TemplateId {
    Prompt1Qa,
    Prompt2Summary,
    Prompt3QaScore,
}

impl TemplateId {
    pub fn as_str(self) -> &'static str {
        match self {
            TemplateId::Prompt1Qa => "prompt1_qa",
            TemplateId::Prompt2Summary => "prompt2_summary",
            TemplateId::Prompt3QaScore => "prompt3_qa_score",
        }
    }
}

impl fmt::Display for TemplateId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for TemplateId {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "prompt1_qa" => Ok(TemplateId::Prompt1Qa),
            "prompt2_summary" => Ok(TemplateId::Prompt2Summary),
            "prompt3_qa_score" => Ok(TemplateId::Prompt3QaScore),
            other => Err(Error::InvalidArgument(format!("unknown template `{other}`"))),
        }
    }
}

enum Line {
    Always(&'static str),
    /// Emitted only when the named field is supplied.
    IfPresent(&'static str, &'static str),
}

use Line::{Always, IfPresent};

const PROMPT1_QA: &[Line] = &[
    Always("Based on the following elements from the administrative document, generate a clear and concise question-answer pair:"),
    Always("Category: {category}"),
    IfPresent("key", "Key: {key}"),
    Always("Document: {document}"),
    Always(""),
    Always("Instructions:"),
    Always("Formulate a question that directly asks for the key information related to the category, key points, and document."),
    Always("Ensure that the question is specific, relevant, and integrates all elements comprehensively."),
    Always("Provide a direct and informative answer to the question."),
    Always("The answer should elaborate on the main points, utilizing the information provided in the document."),
    Always("If sufficient information is unavailable, respond with \"I don't know\"."),
    Always("The answer must be concise, limited to a single sentence."),
    Always(""),
    Always("Question: {} Answer: {}"),
];

const PROMPT2_SUMMARY: &[Line] = &[
    Always("You are tasked with generating a concise summary from a document image."),
    Always("Ensure the summary is both comprehensive and relevant."),
    Always("The summary should consist of no more than three sentences."),
    Always("Document: {document}"),
    Always(""),
    Always("Instructions:"),
    Always("Utilize as much information from the document as possible."),
    Always("Provide a confidence score (ranging from 0 to 1)."),
    Always("Do not provide any commentary on the assigned score."),
    Always(""),
    Always("Gold Summary: {} Score: {}"),
];

const PROMPT3_QA_SCORE: &[Line] = &[
    Always("You are tasked with evaluating the answer to a question based on a document image."),
    Always("The answers are short text spans directly extracted from the document, consisting of contiguous tokens."),
    Always("Document: {document}"),
    Always("Question: {question}"),
    Always("Answer: {answer}"),
    Always(""),
    Always("Instructions:"),
    Always("Provide a confidence score to evaluate whether the [Answer] references the [Document] and is appropriate in answering what the [Question] is asking."),
    Always("If the [Answer] does not reference the [Document], or is inappropriate as an answer to the [Question], it is considered unacceptable."),
    Always("Score the result on a scale from 0 to 1, where 0 represents \"Strongly Disagree\" and 1 represents \"Strongly Agree\"."),
    Always("The output should only contain the confidence score, with no additional comments or explanations."),
    Always(""),
    Always("Score: {}"),
];

fn lines(id: TemplateId) -> &'static [Line] {
    match id {
        TemplateId::Prompt1Qa => PROMPT1_QA,
        TemplateId::Prompt2Summary => PROMPT2_SUMMARY,
        TemplateId::Prompt3QaScore => PROMPT3_QA_SCORE,
    }
}

/// Placeholder values. Unused fields are ignored by templates that do not
/// reference them.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct PromptFields {
    pub category: Option<String>,
    pub key: Option<String>,
    pub document: Option<String>,
    pub question: Option<String>,
    pub answer: Option<String>,
}

impl PromptFields {
    pub fn get(&self, name: &str) -> Option<&str> {
        match name {
            "category" => self.category.as_deref(),
            "key" => self.key.as_deref(),
            "document" => self.document.as_deref(),
            "question" => self.question.as_deref(),
            "answer" => self.answer.as_deref(),
            _ => None,
        }
    }
}

fn expand(line: &str, fields: &PromptFields, out: &mut String) -> Result<()> {
    let mut rest = line;
    while let Some(open) = rest.find('{') {
        out.push_str(&rest[..open]);
        let after = &rest[open + 1..];
        match after.find('}') {
            Some(close) if close > 0 && after[..close].bytes().all(|b| b.is_ascii_lowercase() || b == b'_') => {
                let name = &after[..close];
                let value = fields
                    .get(name)
                    .ok_or_else(|| Error::MissingPlaceholder(name.to_string()))?;
                out.push_str(value);
                rest = &after[close + 1..];
            }
            _ => {
                out.push('{');
                rest = after;
            }
        }
    }
    out.push_str(rest);
    Ok(())
}

/// Expands a template. Lines are joined with `\n`; there is no trailing
/// newline.
pub fn render_prompt(id: TemplateId, fields: &PromptFields) -> Result<String> {
    let mut out = String::new();
    let mut first = true;
    for line in lines(id) {
        let text = match line {
            Always(text) => *text,
            IfPresent(field, text) => match fields.get(field) {
                Some(_) => *text,
                None => continue,
            },
        };
        if !first {
            out.push('\n');
        }
        first = false;
        expand(text, fields, &mut out)?;
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn fields(doc: &str) -> PromptFields {
        PromptFields {
            document: Some(doc.into()),
            ..Default::default()
        }
    }

    #[test]
    fn key_line_is_conditional() {
        let mut f = fields("X");
        f.category = Some("memo".into());
        let without = render_prompt(TemplateId::Prompt1Qa, &f).unwrap();
        assert!(!without.contains("Key:"));
        f.key = Some("LARVICIDE".into());
        let with = render_prompt(TemplateId::Prompt1Qa, &f).unwrap();
        assert!(with.contains("\nCategory: memo\nKey: LARVICIDE\nDocument: X\n"));
        assert_eq!(with.lines().count(), without.lines().count() + 1);
    }

    #[test]
    fn output_indicator_braces_survive() {
        let p = render_prompt(TemplateId::Prompt2Summary, &fields("X")).unwrap();
        assert!(p.ends_with("Gold Summary: {} Score: {}"));
        assert!(p.contains("\nDocument: X\n"));
    }

    #[test]
    fn missing_placeholder_is_named() {
        let mut f = fields("X");
        f.question = Some("Q".into());
        match render_prompt(TemplateId::Prompt3QaScore, &f) {
            Err(Error::MissingPlaceholder(name)) => assert_eq!(name, "answer"),
            other => panic!("expected missing placeholder, got {other:?}"),
        }
        assert!(render_prompt(TemplateId::Prompt1Qa, &fields("X")).is_err());
    }

    #[test]
    fn values_are_not_re_expanded() {
        let mut f = fields("look: {category} and {}");
        f.category = Some("memo".into());
        let p = render_prompt(TemplateId::Prompt1Qa, &f).unwrap();
        assert!(p.contains("Document: look: {category} and {}\n"));
    }

    #[test]
    fn template_ids_round_trip() {
        for id in [TemplateId::Prompt1Qa, TemplateId::Prompt2Summary, TemplateId::Prompt3QaScore] {
            assert_eq!(id.as_str().parse::<TemplateId>().unwrap(), id);
        }
    }
}
