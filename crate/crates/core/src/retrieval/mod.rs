//! Entity → passage retrieval and passage truncation.

mod local;
mod remote;
mod segment;

pub use local::LocalRetriever;
pub use remote::{WikiConfig, WikiRetriever};
pub use segment::{RuleSegmenter, SentenceSegmenter, ABBREVIATIONS};

use rand::Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Bounds of the uniform draw used when truncating passages.
pub const TRUNCATE_MIN: usize = 3;
pub const TRUNCATE_MAX: usize = 6;

#[derive(Debug, Error)]
pub enum RetrievalError {
    #[error("no passage found for `{0}`")]
    NotFound(String),
    #[error("transport error after {attempts} attempt(s): {message}")]
    Transport { attempts: u32, message: String },
    #[error("corpus error: {0}")]
    Corpus(String),
}

/// Sentences retrieved for one entity, in document order.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Passage {
    pub entity: String,
    pub sentences: Vec<String>,
}

/// A leading slice of a [`Passage`].
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TruncatedPassage {
    pub entity: String,
    pub sentences: Vec<String>,
}

impl Passage {
    /// Segments `text` into a passage; empty text is `NotFound`.
    pub fn from_text(
        entity: &str,
        text: &str,
        segmenter: &dyn SentenceSegmenter,
    ) -> Result<Self, RetrievalError> {
        let sentences = segmenter.segment(text);
        if sentences.is_empty() {
            return Err(RetrievalError::NotFound(entity.to_string()));
        }
        Ok(Self {
            entity: entity.to_string(),
            sentences,
        })
    }

    /// Keeps the first `min(m, draw)` sentences, `draw` uniform on 3..=6.
    pub fn truncate<R: Rng + ?Sized>(&self, rng: &mut R) -> TruncatedPassage {
        let draw = rng.random_range(TRUNCATE_MIN..=TRUNCATE_MAX);
        self.truncate_to(draw)
    }

    pub fn truncate_to(&self, limit: usize) -> TruncatedPassage {
        let k = self.sentences.len().min(limit);
        TruncatedPassage {
            entity: self.entity.clone(),
            sentences: self.sentences[..k].to_vec(),
        }
    }
}

/// Source of passages keyed by entity name.
pub trait Retriever: Send + Sync {
    fn retrieve(&self, query: &str) -> Result<Passage, RetrievalError>;
}

impl<T: Retriever + ?Sized> Retriever for Box<T> {
    fn retrieve(&self, query: &str) -> Result<Passage, RetrievalError> {
        (**self).retrieve(query)
    }
}

impl<T: Retriever + ?Sized> Retriever for std::sync::Arc<T> {
    fn retrieve(&self, query: &str) -> Result<Passage, RetrievalError> {
        (**self).retrieve(query)
    }
}
