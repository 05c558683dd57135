//! Builds the multi-passage for a walk: one truncated passage per entity,
//! interleaved with the walk's relation sentences.

use rand::Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::kg::Walk;
use crate::retrieval::{RetrievalError, Retriever, TruncatedPassage};

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct MultiPassage {
    pub passages: Vec<TruncatedPassage>,
    pub relation_sentences: Vec<String>,
    pub walk_id: String,
}

impl MultiPassage {
    pub fn entities(&self) -> impl Iterator<Item = &str> {
        self.passages.iter().map(|p| p.entity.as_str())
    }

    /// Total number of answer sentences across passages.
    pub fn sentence_count(&self) -> usize {
        self.passages.iter().map(|p| p.sentences.len()).sum()
    }
}

#[derive(Debug, Error)]
pub enum AssembleError {
    /// An entity on the walk has no passage; the caller should sample another walk.
    #[error("skipping walk: no passage for `{0}`")]
    SkipWalk(String),
    #[error(transparent)]
    Retrieval(RetrievalError),
}

pub fn build_multipassage<R: Rng + ?Sized>(
    walk: &Walk,
    retriever: &dyn Retriever,
    rng: &mut R,
) -> Result<MultiPassage, AssembleError> {
    let mut passages = Vec::with_capacity(walk.entities.len());
    for entity in &walk.entities {
        let passage = retriever.retrieve(entity).map_err(|e| match e {
            RetrievalError::NotFound(_) => AssembleError::SkipWalk(entity.clone()),
            other => AssembleError::Retrieval(other),
        })?;
        passages.push(passage.truncate(rng));
    }
    Ok(MultiPassage {
        passages,
        relation_sentences: walk.relation_sentences.clone(),
        walk_id: walk.id(),
    })
}
