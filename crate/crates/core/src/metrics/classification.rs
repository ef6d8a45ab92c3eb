use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub const DEFAULT_F1_EPSILON: f64 = 1e-9;

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ConfusionCounts {
    pub tp: u64,
    pub fp: u64,
    #[serde(rename = "fn")]
    pub fn_: u64,
    pub tn: u64,
}

impl ConfusionCounts {
    pub fn total(&self) -> u64 {
        self.tp + self.fp + self.fn_ + self.tn
    }

    pub fn add(&mut self, intervene: bool, gold: bool) {
        match (intervene, gold) {
            (true, true) => self.tp += 1,
            (true, false) => self.fp += 1,
            (false, true) => self.fn_ += 1,
            (false, false) => self.tn += 1,
        }
    }
}

pub fn confusion(decisions: &[bool], gold: &[bool]) -> Result<ConfusionCounts> {
    if decisions.len() != gold.len() {
        return Err(Error::domain(format!(
            "{} decisions but {} gold labels",
            decisions.len(),
            gold.len()
        )));
    }
    let mut c = ConfusionCounts::default();
    for (&d, &g) in decisions.iter().zip(gold) {
        c.add(d, g);
    }
    Ok(c)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ClassificationMetrics {
    pub recall: f64,
    pub precision: f64,
    pub accuracy: f64,
    /// `fp / (tp + fp)`, i.e. the share of interventions that were not wanted.
    pub false_alarm: f64,
    pub f1: f64,
    pub epsilon: f64,
}

fn ratio(num: u64, den: u64) -> f64 {
    if den == 0 {
        0.0
    } else {
        num as f64 / den as f64
    }
}

/// `2PR / (P + R + epsilon)`.
pub fn f1_score(precision: f64, recall: f64, epsilon: f64) -> f64 {
    2.0 * precision * recall / (precision + recall + epsilon)
}

/// Ratios with zero-denominator conventions: recall, precision and false
/// alarm are 0 when undefined. Accuracy over no events is an error.
pub fn classification_metrics(counts: &ConfusionCounts, epsilon: f64) -> Result<ClassificationMetrics> {
    if !(epsilon.is_finite() && epsilon > 0.0) {
        return Err(Error::domain(format!("F1 epsilon must be > 0, got {epsilon}")));
    }
    if counts.total() == 0 {
        return Err(Error::domain("accuracy is undefined on an empty evaluation"));
    }
    let recall = ratio(counts.tp, counts.tp + counts.fn_);
    let precision = ratio(counts.tp, counts.tp + counts.fp);
    Ok(ClassificationMetrics {
        recall,
        precision,
        accuracy: ratio(counts.tp + counts.tn, counts.total()),
        false_alarm: ratio(counts.fp, counts.tp + counts.fp),
        f1: f1_score(precision, recall, epsilon),
        epsilon,
    })
}

/// Nearest-rank P95 (`ceil(0.95 n)`-th smallest value).
pub fn p95_nearest_rank(values: &[f64]) -> Option<f64> {
    percentile_nearest_rank(values, 0.95)
}

pub fn percentile_nearest_rank(values: &[f64], q: f64) -> Option<f64> {
    if values.is_empty() {
        return None;
    }
    let mut v = values.to_vec();
    v.sort_by(f64::total_cmp);
    let rank = ((q * v.len() as f64).ceil() as usize).clamp(1, v.len());
    Some(v[rank - 1])
}
