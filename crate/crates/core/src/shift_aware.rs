//! Topic-shift detection ahead of response generation, and the responder
//! prompt that carries the verdict.

use std::collections::HashSet;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::assembler::MultiPassage;

/// Line added to the responder prompt when a shift is detected.
pub const SHIFT_NOTE: &str = "Note: the topic has shifted in this turn.";

/// Function words ignored when comparing content.
pub const STOPWORDS: [&str; 50] = [
    "a", "an", "the", "and", "or", "but", "if", "of", "to", "in", "on", "at", "by", "for", "with",
    "about", "as", "from", "into", "is", "are", "was", "were", "be", "been", "being", "it", "its",
    "this", "that", "these", "those", "he", "she", "they", "them", "his", "her", "their", "what",
    "who", "whom", "which", "when", "where", "why", "how", "do", "does", "did",
];

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ShiftVerdict {
    pub is_shift: bool,
    pub detector_name: String,
}

#[derive(Debug, Error)]
pub enum DetectError {
    #[error("transport error: {0}")]
    Transport(String),
}

pub trait ShiftDetector: Send + Sync {
    fn name(&self) -> &str;

    /// Whether `new_question` opens a new topic given `history`.
    fn is_shift(&self, history: &[(String, String)], new_question: &str) -> Result<bool, DetectError>;
}

pub fn detect_shift(
    detector: &dyn ShiftDetector,
    history: &[(String, String)],
    new_question: &str,
) -> Result<ShiftVerdict, DetectError> {
    Ok(ShiftVerdict {
        is_shift: detector.is_shift(history, new_question)?,
        detector_name: detector.name().to_string(),
    })
}

/// Lowercased alphanumeric tokens minus stopwords.
pub fn content_tokens(text: &str) -> HashSet<String> {
    text.to_lowercase()
        .split(|c: char| !c.is_alphanumeric())
        .filter(|t| !t.is_empty() && !STOPWORDS.contains(t))
        .map(str::to_string)
        .collect()
}

/// Flags a shift when the question shares no content token with the last
/// two history turns. The first turn is never a shift.
#[derive(Debug, Clone, Copy, Default)]
pub struct LexicalDetector;

/// History turns compared against the new question.
const LEXICAL_WINDOW: usize = 2;

impl ShiftDetector for LexicalDetector {
    fn name(&self) -> &str {
        "lexical"
    }

    fn is_shift(&self, history: &[(String, String)], new_question: &str) -> Result<bool, DetectError> {
        if history.is_empty() {
            return Ok(false);
        }
        let recent: HashSet<String> = history[history.len().saturating_sub(LEXICAL_WINDOW)..]
            .iter()
            .flat_map(|(q, a)| content_tokens(q).into_iter().chain(content_tokens(a)))
            .collect();
        Ok(content_tokens(new_question).is_disjoint(&recent))
    }
}

/// Responder prompt with the passages, the dialogue so far, and the new
/// question; the shift note appears only for a positive verdict.
pub fn augment_responder_input(
    passages: &MultiPassage,
    history: &[(String, String)],
    question: &str,
    verdict: &ShiftVerdict,
) -> String {
    let mut out = String::from(
        "Answer the last question of the dialogue using the passages below.\n\nPassages:\n",
    );
    for (i, p) in passages.passages.iter().enumerate() {
        out.push_str(&format!("[{}] {}\n", i + 1, p.entity));
        out.push_str(&p.sentences.join(" "));
        out.push('\n');
        if let Some(r) = passages.relation_sentences.get(i) {
            out.push_str(&format!("Relation: {r}\n"));
        }
    }
    out.push_str("\nDialogue:\n");
    for (q, a) in history {
        out.push_str(&format!("A: {q}\nB: {a}\n"));
    }
    if verdict.is_shift {
        out.push_str(SHIFT_NOTE);
        out.push('\n');
    }
    out.push_str(&format!("A: {question}\nB:"));
    out
}
