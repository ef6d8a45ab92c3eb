//! Evaluation metrics: detection scores, benefit-burden area, paired
//! bootstrap, rater agreement and Pareto extraction.

pub mod agreement;
pub mod audbc;
pub mod bootstrap;
pub mod classification;
pub mod pareto;

use serde::{Deserialize, Serialize};

pub use agreement::{agreement_rate, agreement_report, cohen_kappa, flip_rate, flip_rate_by_id, mcc, AgreementReport};
pub use audbc::{
    audbc, curve_from_points, default_cfn_grid, delta_utility_curve, delta_utility_point, delta_utility_raw,
    parse_grid, AudbcConfig, AudbcInput, AudbcResult, CurvePoint, LabeledInput, TauImpl,
};
pub use bootstrap::{bootstrap_compare, BootstrapMetric, BootstrapReport, Outcome, ResampleUnit};
pub use classification::{
    classification_metrics, confusion, f1_score, p95_nearest_rank, ClassificationMetrics, ConfusionCounts,
    DEFAULT_F1_EPSILON,
};
pub use pareto::{pareto_frontier, ParetoPoint};

use crate::error::{Error, Result};
use crate::gate::{GateOutcome, Mode};

/// Detection scores plus the compute a policy spent.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricsReport {
    pub recall: f64,
    pub precision: f64,
    pub accuracy: f64,
    pub false_alarm: f64,
    pub f1: f64,
    pub epsilon: f64,
    pub mean_tokens: f64,
    pub total_tokens: u64,
    pub p95_latency_ms: f64,
    pub slow_rate: f64,
    pub slow_count: usize,
    pub n_events: usize,
    pub counts: ConfusionCounts,
}

/// Scores gate outcomes against gold labels (same order, same length).
pub fn policy_report(outcomes: &[GateOutcome], gold: &[bool], epsilon: f64) -> Result<MetricsReport> {
    if outcomes.len() != gold.len() {
        return Err(Error::domain(format!("{} outcomes but {} gold labels", outcomes.len(), gold.len())));
    }
    let decisions: Vec<bool> = outcomes.iter().map(|o| o.decision.intervene).collect();
    let counts = confusion(&decisions, gold)?;
    let m = classification_metrics(&counts, epsilon)?;
    let n = outcomes.len();
    let total_tokens: u64 = outcomes.iter().map(|o| o.tokens).sum();
    let slow_count = outcomes.iter().filter(|o| o.decision.mode == Mode::Slow).count();
    let latencies: Vec<f64> = outcomes.iter().map(|o| o.latency_ms).collect();
    Ok(MetricsReport {
        recall: m.recall,
        precision: m.precision,
        accuracy: m.accuracy,
        false_alarm: m.false_alarm,
        f1: m.f1,
        epsilon,
        mean_tokens: total_tokens as f64 / n as f64,
        total_tokens,
        p95_latency_ms: p95_nearest_rank(&latencies).unwrap_or(0.0),
        slow_rate: slow_count as f64 / n as f64,
        slow_count,
        n_events: n,
        counts,
    })
}
