//! Topic segmentation and shift detection metrics, BLEU-4, and dataset
//! statistics.

mod bleu;
mod metrics;
mod stats;

pub use bleu::{bleu4, tokenize};
pub use metrics::{
    boundaries, detect_metrics, detect_metrics_with, f1, seg_metrics, seg_metrics_with,
    validate_segment_labels, Averaging, DetectionInstance, MetricsReport, SegmentationInstance,
};
pub use stats::{dataset_stats, DatasetStats, StatsAccumulator};

use std::collections::HashMap;
use std::io::BufRead;

use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::postproc::Dialogue;

#[derive(Debug, Error)]
pub enum EvalError {
    #[error("instance {instance}: {message}")]
    Validation { instance: usize, message: String },
    #[error("no instances to evaluate")]
    Empty,
    #[error("no predictions for {} dialogue id(s): {}", .0.len(), .0.join(", "))]
    MissingPredictions(Vec<String>),
    #[error("duplicate prediction for id `{0}`")]
    DuplicatePrediction(String),
    #[error("{0}")]
    Parse(String),
}

impl EvalError {
    pub(crate) fn validation(instance: usize, message: impl Into<String>) -> Self {
        Self::Validation {
            instance,
            message: message.into(),
        }
    }
}

/// One line of a segmentation prediction file.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SegPrediction {
    pub id: String,
    pub pred_labels: Vec<usize>,
}

/// One line of a shift-detection prediction file.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DetectPrediction {
    pub id: String,
    pub pred_shifts: Vec<bool>,
}

/// Parses JSONL, skipping blank lines.
pub fn read_jsonl<T: DeserializeOwned, R: BufRead>(reader: R) -> Result<Vec<T>, EvalError> {
    let mut out = Vec::new();
    for (idx, line) in reader.lines().enumerate() {
        let line = line.map_err(|e| EvalError::Parse(format!("line {}: {e}", idx + 1)))?;
        if line.trim().is_empty() {
            continue;
        }
        out.push(
            serde_json::from_str(&line).map_err(|e| EvalError::Parse(format!("line {}: {e}", idx + 1)))?,
        );
    }
    Ok(out)
}

fn index_by_id<T>(
    preds: &[T],
    id: impl Fn(&T) -> &str,
) -> Result<HashMap<&str, &T>, EvalError> {
    if preds.is_empty() {
        return Err(EvalError::Empty);
    }
    let mut map = HashMap::with_capacity(preds.len());
    for p in preds {
        if map.insert(id(p), p).is_some() {
            return Err(EvalError::DuplicatePrediction(id(p).to_string()));
        }
    }
    Ok(map)
}

fn join<'a, T, I>(
    gold: &'a [Dialogue],
    preds: &'a [T],
    id: impl Fn(&T) -> &str,
    mut make: impl FnMut(&'a Dialogue, &'a T) -> I,
) -> Result<Vec<I>, EvalError> {
    let by_id = index_by_id(preds, id)?;
    let missing: Vec<String> = gold
        .iter()
        .filter(|d| !by_id.contains_key(d.id.as_str()))
        .map(|d| d.id.clone())
        .collect();
    if !missing.is_empty() {
        return Err(EvalError::MissingPredictions(missing));
    }
    Ok(gold.iter().map(|d| make(d, by_id[d.id.as_str()])).collect())
}

/// Pairs each gold dialogue with its prediction by id.
pub fn join_segmentation(
    gold: &[Dialogue],
    preds: &[SegPrediction],
) -> Result<Vec<SegmentationInstance>, EvalError> {
    join(gold, preds, |p| &p.id, |d, p| SegmentationInstance {
        gold_labels: d.segment_labels.clone(),
        pred_labels: p.pred_labels.clone(),
    })
}

pub fn join_detection(
    gold: &[Dialogue],
    preds: &[DetectPrediction],
) -> Result<Vec<DetectionInstance>, EvalError> {
    join(gold, preds, |p| &p.id, |d, p| DetectionInstance {
        gold: d.shift_flags(),
        pred: p.pred_shifts.clone(),
    })
}
