use serde::{Deserialize, Serialize};

/// An operating point: lower latency and higher AUDBC are better.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ParetoPoint {
    pub latency_ms: f64,
    pub audbc: f64,
    pub tag: String,
}

impl ParetoPoint {
    pub fn new(latency_ms: f64, audbc: f64, tag: impl Into<String>) -> Self {
        Self { latency_ms, audbc, tag: tag.into() }
    }

    /// No worse on both axes and strictly better on at least one.
    pub fn dominates(&self, other: &ParetoPoint) -> bool {
        self.latency_ms <= other.latency_ms
            && self.audbc >= other.audbc
            && (self.latency_ms < other.latency_ms || self.audbc > other.audbc)
    }
}

/// Non-dominated subset, sorted by latency (then AUDBC descending).
/// Points tied on both axes are all kept.
pub fn pareto_frontier(points: &[ParetoPoint]) -> Vec<ParetoPoint> {
    let mut front: Vec<ParetoPoint> = points
        .iter()
        .filter(|p| !points.iter().any(|q| q.dominates(p)))
        .cloned()
        .collect();
    front.sort_by(|a, b| a.latency_ms.total_cmp(&b.latency_ms).then(b.audbc.total_cmp(&a.audbc)));
    front
}
