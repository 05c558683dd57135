//! Rule-based clean-up of generated dialogues and the dialogue JSONL schema.

use std::io::{BufRead, Write};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::qgen::{GeneratorKind, QATurn, RawDialogue};

/// How a dialogue was produced.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct GeneratorMeta {
    pub generator: GeneratorKind,
    pub model: Option<String>,
    pub seed: u64,
}

/// A finished dialogue, one JSONL line in generated datasets.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Dialogue {
    pub id: String,
    pub entities: Vec<String>,
    pub turns: Vec<QATurn>,
    /// 0-based segment per turn.
    pub segment_labels: Vec<usize>,
    #[serde(rename = "meta")]
    pub created_with: GeneratorMeta,
}

impl Dialogue {
    /// Per-turn shift flags, the gold labels for shift detection.
    pub fn shift_flags(&self) -> Vec<bool> {
        self.turns.iter().map(|t| t.is_topic_shift).collect()
    }

    pub fn topic_count(&self) -> usize {
        let mut labels = self.segment_labels.clone();
        labels.sort_unstable();
        labels.dedup();
        labels.len()
    }
}

/// Removes one leading `A:` or `B:` speaker tag and the spaces after it.
pub fn strip_speaker_prefix(question: &str) -> String {
    let trimmed = question.trim();
    let rest = trimmed
        .strip_prefix("A:")
        .or_else(|| trimmed.strip_prefix("B:"))
        .unwrap_or(trimmed);
    rest.trim().to_string()
}

fn has_speaker_prefix(question: &str) -> bool {
    question.starts_with("A:") || question.starts_with("B:")
}

/// Strips speaker tags, derives segment labels, and assigns a content id.
///
/// Tags are stripped repeatedly until none remains so finished questions
/// never start with a speaker tag.
pub fn finalize_dialogue(raw: &RawDialogue, meta: GeneratorMeta) -> Dialogue {
    let turns: Vec<QATurn> = raw
        .turns
        .iter()
        .map(|t| {
            let mut question = strip_speaker_prefix(&t.question);
            while has_speaker_prefix(&question) {
                question = strip_speaker_prefix(&question);
            }
            QATurn {
                question,
                ..t.clone()
            }
        })
        .collect();
    let segment_labels = turns.iter().map(|t| t.topic_index.saturating_sub(1)).collect();
    let id = content_id(&raw.entities, &turns, &meta);
    Dialogue {
        id,
        entities: raw.entities.clone(),
        turns,
        segment_labels,
        created_with: meta,
    }
}

fn content_id(entities: &[String], turns: &[QATurn], meta: &GeneratorMeta) -> String {
    let payload = serde_json::to_vec(&(entities, turns, meta)).expect("dialogue content serializes");
    let digest = Sha256::digest(&payload);
    hex::encode(&digest[..8])
}

pub fn write_dialogue<W: Write>(mut out: W, dialogue: &Dialogue) -> std::io::Result<()> {
    serde_json::to_writer(&mut out, dialogue)?;
    out.write_all(b"\n")
}

/// Parses dialogue JSONL, skipping blank lines. Errors carry the line number.
pub fn read_dialogues<R: BufRead>(reader: R) -> Result<Vec<Dialogue>, String> {
    let mut out = Vec::new();
    for (idx, line) in reader.lines().enumerate() {
        let line = line.map_err(|e| format!("line {}: {e}", idx + 1))?;
        if line.trim().is_empty() {
            continue;
        }
        let d: Dialogue = serde_json::from_str(&line).map_err(|e| format!("line {}: {e}", idx + 1))?;
        out.push(d);
    }
    Ok(out)
}
