use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};

use super::EvalError;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SegmentationInstance {
    pub gold_labels: Vec<usize>,
    pub pred_labels: Vec<usize>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DetectionInstance {
    pub gold: Vec<bool>,
    pub pred: Vec<bool>,
}

/// How per-instance counts are combined.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Averaging {
    /// Pool true/false positives over all instances, then divide.
    #[default]
    Micro,
    /// Score each instance, then take the mean.
    Macro,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricsReport {
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
    pub exact_match: f64,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub turn_accuracy: Option<f64>,
    pub instances: usize,
    pub averaging: Averaging,
}

/// Confusion counts over positive events (boundaries or shifts).
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
struct Counts {
    tp: usize,
    fp: usize,
    fn_: usize,
}

impl Counts {
    fn add(&mut self, other: Counts) {
        self.tp += other.tp;
        self.fp += other.fp;
        self.fn_ += other.fn_;
    }

    fn scores(&self) -> (f64, f64, f64) {
        let precision = ratio(self.tp, self.tp + self.fp);
        let recall = ratio(self.tp, self.tp + self.fn_);
        (precision, recall, f1(precision, recall))
    }
}

fn ratio(num: usize, den: usize) -> f64 {
    if den == 0 {
        0.0
    } else {
        num as f64 / den as f64
    }
}

/// Harmonic mean, 0 when both inputs are 0.
pub fn f1(precision: f64, recall: f64) -> f64 {
    if precision + recall == 0.0 {
        0.0
    } else {
        2.0 * precision * recall / (precision + recall)
    }
}

fn combine(per_instance: &[Counts], averaging: Averaging) -> (f64, f64, f64) {
    match averaging {
        Averaging::Micro => {
            let mut total = Counts::default();
            for c in per_instance {
                total.add(*c);
            }
            total.scores()
        }
        Averaging::Macro => {
            let n = per_instance.len() as f64;
            let (p, r, f) = per_instance.iter().fold((0.0, 0.0, 0.0), |acc, c| {
                let (p, r, f) = c.scores();
                (acc.0 + p, acc.1 + r, acc.2 + f)
            });
            (p / n, r / n, f / n)
        }
    }
}

/// Checks that `labels` starts at 0 and never steps by more than 1 or back.
pub fn validate_segment_labels(labels: &[usize]) -> Result<(), String> {
    if let Some(&first) = labels.first() {
        if first != 0 {
            return Err(format!("labels start at {first}, expected 0"));
        }
    }
    for (t, w) in labels.windows(2).enumerate() {
        if w[1] < w[0] || w[1] - w[0] > 1 {
            return Err(format!("label step {} -> {} at turn {}", w[0], w[1], t + 1));
        }
    }
    Ok(())
}

/// Turn indices where a new segment begins.
pub fn boundaries(labels: &[usize]) -> BTreeSet<usize> {
    (1..labels.len()).filter(|&t| labels[t] > labels[t - 1]).collect()
}

pub fn seg_metrics(instances: &[SegmentationInstance]) -> Result<MetricsReport, EvalError> {
    seg_metrics_with(instances, Averaging::Micro)
}

/// Boundary precision/recall/F1 plus exact match of the full label sequence.
pub fn seg_metrics_with(
    instances: &[SegmentationInstance],
    averaging: Averaging,
) -> Result<MetricsReport, EvalError> {
    if instances.is_empty() {
        return Err(EvalError::Empty);
    }
    let mut counts = Vec::with_capacity(instances.len());
    let mut exact = 0usize;
    for (i, inst) in instances.iter().enumerate() {
        if inst.gold_labels.len() != inst.pred_labels.len() {
            return Err(EvalError::validation(
                i,
                format!(
                    "gold has {} labels, prediction has {}",
                    inst.gold_labels.len(),
                    inst.pred_labels.len()
                ),
            ));
        }
        validate_segment_labels(&inst.gold_labels).map_err(|m| EvalError::validation(i, format!("gold: {m}")))?;
        validate_segment_labels(&inst.pred_labels).map_err(|m| EvalError::validation(i, format!("pred: {m}")))?;

        let gold = boundaries(&inst.gold_labels);
        let pred = boundaries(&inst.pred_labels);
        let tp = gold.intersection(&pred).count();
        counts.push(Counts {
            tp,
            fp: pred.len() - tp,
            fn_: gold.len() - tp,
        });
        if inst.gold_labels == inst.pred_labels {
            exact += 1;
        }
    }
    let (precision, recall, f1) = combine(&counts, averaging);
    Ok(MetricsReport {
        precision,
        recall,
        f1,
        exact_match: ratio(exact, instances.len()),
        turn_accuracy: None,
        instances: instances.len(),
        averaging,
    })
}

pub fn detect_metrics(instances: &[DetectionInstance]) -> Result<MetricsReport, EvalError> {
    detect_metrics_with(instances, Averaging::Micro)
}

/// Shift-as-positive precision/recall/F1, per-turn accuracy, and exact match.
pub fn detect_metrics_with(
    instances: &[DetectionInstance],
    averaging: Averaging,
) -> Result<MetricsReport, EvalError> {
    if instances.is_empty() {
        return Err(EvalError::Empty);
    }
    let mut counts = Vec::with_capacity(instances.len());
    let mut exact = 0usize;
    let mut correct_turns = 0usize;
    let mut total_turns = 0usize;
    for (i, inst) in instances.iter().enumerate() {
        if inst.gold.len() != inst.pred.len() {
            return Err(EvalError::validation(
                i,
                format!("gold has {} turns, prediction has {}", inst.gold.len(), inst.pred.len()),
            ));
        }
        if inst.gold.first() == Some(&true) {
            return Err(EvalError::validation(i, "first turn cannot be a gold shift"));
        }
        let mut c = Counts::default();
        let mut correct = 0usize;
        for (&g, &p) in inst.gold.iter().zip(&inst.pred) {
            match (g, p) {
                (true, true) => c.tp += 1,
                (false, true) => c.fp += 1,
                (true, false) => c.fn_ += 1,
                (false, false) => {}
            }
            correct += usize::from(g == p);
        }
        if correct == inst.gold.len() {
            exact += 1;
        }
        correct_turns += correct;
        total_turns += inst.gold.len();
        counts.push(c);
    }
    let (precision, recall, f1) = combine(&counts, averaging);
    let turn_accuracy = match averaging {
        Averaging::Micro => ratio(correct_turns, total_turns),
        Averaging::Macro => {
            instances
                .iter()
                .map(|inst| {
                    let ok = inst.gold.iter().zip(&inst.pred).filter(|(g, p)| g == p).count();
                    if inst.gold.is_empty() {
                        1.0
                    } else {
                        ok as f64 / inst.gold.len() as f64
                    }
                })
                .sum::<f64>()
                / instances.len() as f64
        }
    };
    Ok(MetricsReport {
        precision,
        recall,
        f1,
        exact_match: ratio(exact, instances.len()),
        turn_accuracy: Some(turn_accuracy),
        instances: instances.len(),
        averaging,
    })
}
