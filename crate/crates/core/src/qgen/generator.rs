use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use super::chat::{ChatClient, ChatError};
use super::prompt::{render_prompt, PromptContext};

#[derive(Debug, Error)]
pub enum GenerationError {
    #[error("transport error after {attempts} attempt(s): {message}")]
    Transport { attempts: u32, message: String },
    #[error("generator returned an empty question")]
    EmptyGeneration,
}

impl From<ChatError> for GenerationError {
    fn from(e: ChatError) -> Self {
        match e {
            ChatError::Transport { attempts, message } => Self::Transport { attempts, message },
            ChatError::Empty => Self::EmptyGeneration,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum GeneratorKind {
    Stub,
    Llm,
}

impl fmt::Display for GeneratorKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            GeneratorKind::Stub => "stub",
            GeneratorKind::Llm => "llm",
        })
    }
}

/// Produces the question whose answer is `ctx.target_answer`.
pub trait QuestionGenerator: Send + Sync {
    fn generate(&self, ctx: &PromptContext) -> Result<String, GenerationError>;

    fn kind(&self) -> GeneratorKind;

    fn model(&self) -> Option<&str> {
        None
    }
}

const STUB_PREFIX: &str = "What can you tell me about ";
const STUB_TOKENS: usize = 5;

/// Offline generator: "What can you tell me about <first five answer tokens>?".
#[derive(Debug, Clone, Copy, Default)]
pub struct StubGenerator;

impl StubGenerator {
    pub fn question_for(answer: &str) -> String {
        let head: Vec<&str> = answer
            .split_whitespace()
            .take(STUB_TOKENS)
            .map(|tok| tok.trim_matches(|c: char| c.is_ascii_punctuation()))
            .filter(|tok| !tok.is_empty())
            .collect();
        format!("{STUB_PREFIX}{}?", head.join(" "))
    }
}

impl QuestionGenerator for StubGenerator {
    fn generate(&self, ctx: &PromptContext) -> Result<String, GenerationError> {
        Ok(Self::question_for(&ctx.target_answer))
    }

    fn kind(&self) -> GeneratorKind {
        GeneratorKind::Stub
    }
}

/// Renders the prompt and asks a chat-completion endpoint to fill the blank.
pub struct LlmGenerator {
    client: ChatClient,
}

impl LlmGenerator {
    pub fn new(client: ChatClient) -> Self {
        Self { client }
    }

    pub fn client(&self) -> &ChatClient {
        &self.client
    }

    /// Sends an already rendered prompt.
    pub fn generate_from_prompt(&self, prompt: &str) -> Result<String, GenerationError> {
        Ok(self.client.complete(prompt)?)
    }
}

impl QuestionGenerator for LlmGenerator {
    fn generate(&self, ctx: &PromptContext) -> Result<String, GenerationError> {
        self.generate_from_prompt(&render_prompt(ctx))
    }

    fn kind(&self) -> GeneratorKind {
        GeneratorKind::Llm
    }

    fn model(&self) -> Option<&str> {
        Some(&self.client.config().model)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn stub_takes_five_tokens() {
        assert_eq!(
            StubGenerator::question_for(
                "VeraCrypt is a free and open-source utility for on-the-fly encryption."
            ),
            "What can you tell me about VeraCrypt is a free and?"
        );
    }

    #[test]
    fn stub_short_answer() {
        assert_eq!(StubGenerator::question_for("Hi."), "What can you tell me about Hi?");
    }

    #[test]
    fn stub_strips_edge_punctuation_only() {
        assert_eq!(
            StubGenerator::question_for("\"Open-source\" (software), built in 2012."),
            "What can you tell me about Open-source software built in 2012?"
        );
    }

    #[test]
    fn stub_uses_context_answer() {
        let ctx = PromptContext {
            history: vec![("q".into(), "a".into())],
            target_answer: "Paris is big.".into(),
            shift: None,
        };
        assert_eq!(
            StubGenerator.generate(&ctx).unwrap(),
            "What can you tell me about Paris is big?"
        );
        assert_eq!(StubGenerator.kind(), GeneratorKind::Stub);
        assert_eq!(StubGenerator.model(), None);
    }
}
