//! Turns a multi-passage into a raw dialogue, one generated question per
//! answer sentence, with a topic-shift instruction at relation-sentence turns.

mod chat;
mod generator;
mod prompt;

pub use chat::{ChatClient, ChatConfig, ChatError, API_KEY_ENV, BASE_URL_ENV, DEFAULT_BASE_URL};
pub use generator::{GenerationError, GeneratorKind, LlmGenerator, QuestionGenerator, StubGenerator};
pub use prompt::{render_prompt, PromptContext, TopicShift, BLANK_LINE, FILL_INSTRUCTION, SYSTEM_INSTRUCTION};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::assembler::MultiPassage;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SourceKind {
    PassageSentence,
    RelationSentence,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct QATurn {
    pub question: String,
    pub answer: String,
    /// 1-based topic number.
    pub topic_index: usize,
    pub is_topic_shift: bool,
    pub source_kind: SourceKind,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RawDialogue {
    pub turns: Vec<QATurn>,
    pub entities: Vec<String>,
    pub walk_id: String,
}

#[derive(Debug, Error)]
#[error("question generation failed at turn {turn}: {source}")]
pub struct TurnError {
    /// 0-based index of the turn being generated.
    pub turn: usize,
    #[source]
    pub source: GenerationError,
}

/// Generates the dialogue `D_1, Q_R1, R_1, D_2, ..., D_n` for `mp`.
///
/// Every turn's prompt carries all previous turns as history. Relation turns
/// belong to the topic they lead into.
pub fn dialogue_from_multipassage(
    mp: &MultiPassage,
    generator: &dyn QuestionGenerator,
) -> Result<RawDialogue, TurnError> {
    let mut turns: Vec<QATurn> = Vec::with_capacity(mp.sentence_count() + mp.relation_sentences.len());
    let mut history: Vec<(String, String)> = Vec::with_capacity(turns.capacity());

    let ask = |answer: &str, shift: Option<TopicShift>, history: &mut Vec<(String, String)>| {
        let ctx = PromptContext {
            history: history.clone(),
            target_answer: answer.to_string(),
            shift,
        };
        let turn = history.len();
        let question = generator
            .generate(&ctx)
            .map_err(|source| TurnError { turn, source })?;
        if question.trim().is_empty() {
            return Err(TurnError {
                turn,
                source: GenerationError::EmptyGeneration,
            });
        }
        history.push((question.clone(), answer.to_string()));
        Ok(question)
    };

    for (i, passage) in mp.passages.iter().enumerate() {
        let topic = i + 1;
        for sentence in &passage.sentences {
            let question = ask(sentence, None, &mut history)?;
            turns.push(QATurn {
                question,
                answer: sentence.clone(),
                topic_index: topic,
                is_topic_shift: false,
                source_kind: SourceKind::PassageSentence,
            });
        }
        if let (Some(relation), Some(next)) = (mp.relation_sentences.get(i), mp.passages.get(i + 1)) {
            let shift = TopicShift::new(&passage.entity, &next.entity);
            let question = ask(relation, Some(shift), &mut history)?;
            turns.push(QATurn {
                question,
                answer: relation.clone(),
                topic_index: topic + 1,
                is_topic_shift: true,
                source_kind: SourceKind::RelationSentence,
            });
        }
    }

    Ok(RawDialogue {
        turns,
        entities: mp.entities().map(str::to_string).collect(),
        walk_id: mp.walk_id.clone(),
    })
}
