//! Synthesis of conversational QA dialogues with topic shifts.
//!
//! A walk over an entity knowledge graph picks the topics; each topic is
//! backed by a retrieved passage; every passage sentence becomes an answer
//! whose question is generated from the dialogue so far, and relation
//! sentences between consecutive entities become the topic-shift turns.
//! The [`eval`] module scores segmentation, shift detection, and responses.

pub mod assembler;
pub mod eval;
pub mod http;
pub mod kg;
pub mod pipeline;
pub mod postproc;
pub mod qgen;
pub mod retrieval;
pub mod shift_aware;

pub use assembler::{build_multipassage, AssembleError, MultiPassage};
pub use kg::{KnowledgeGraph, Triplet, Walk};
pub use postproc::{finalize_dialogue, strip_speaker_prefix, Dialogue, GeneratorMeta};
pub use qgen::{dialogue_from_multipassage, QATurn, QuestionGenerator, RawDialogue, SourceKind};
pub use retrieval::{Passage, Retriever, TruncatedPassage};
