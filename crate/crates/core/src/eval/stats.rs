use std::collections::HashSet;

use serde::{Deserialize, Serialize};

use crate::postproc::Dialogue;

/// Corpus summary in the shape of a dataset statistics table.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DatasetStats {
    pub dialogues: usize,
    pub turns: usize,
    pub avg_topics: f64,
    /// Whitespace tokens of question plus answer, averaged over turns.
    pub avg_tokens_per_turn: f64,
    pub unique_tokens: usize,
}

/// Mergeable partial tallies, so shards can be counted independently.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct StatsAccumulator {
    dialogues: usize,
    turns: usize,
    topics: usize,
    tokens: usize,
    vocabulary: HashSet<String>,
}

impl StatsAccumulator {
    pub fn add(&mut self, dialogue: &Dialogue) {
        self.dialogues += 1;
        self.turns += dialogue.turns.len();
        self.topics += dialogue.topic_count();
        for turn in &dialogue.turns {
            for tok in turn.question.split_whitespace().chain(turn.answer.split_whitespace()) {
                self.tokens += 1;
                self.vocabulary.insert(tok.to_lowercase());
            }
        }
    }

    pub fn merge(mut self, other: StatsAccumulator) -> StatsAccumulator {
        self.dialogues += other.dialogues;
        self.turns += other.turns;
        self.topics += other.topics;
        self.tokens += other.tokens;
        self.vocabulary.extend(other.vocabulary);
        self
    }

    /// `None` when nothing was added.
    pub fn finish(&self) -> Option<DatasetStats> {
        if self.dialogues == 0 {
            return None;
        }
        Some(DatasetStats {
            dialogues: self.dialogues,
            turns: self.turns,
            avg_topics: self.topics as f64 / self.dialogues as f64,
            avg_tokens_per_turn: if self.turns == 0 {
                0.0
            } else {
                self.tokens as f64 / self.turns as f64
            },
            unique_tokens: self.vocabulary.len(),
        })
    }
}

pub fn dataset_stats<'a, I: IntoIterator<Item = &'a Dialogue>>(dialogues: I) -> Option<DatasetStats> {
    let mut acc = StatsAccumulator::default();
    for d in dialogues {
        acc.add(d);
    }
    acc.finish()
}
