//! Cost-sensitive selective intervention.
//!
//! A gate decides whether an assistant should speak up, given calibrated
//! estimates of whether help is needed (`p_need`) and whether an offer would
//! be accepted (`p_accept`), and the asymmetric costs of false alarms and
//! missed help. Around that gate this crate provides:
//!
//! * [`gate`]: the threshold rule, its expected-cost oracle and the
//!   slow-on-margin dual-process controller;
//! * [`calibration`]: temperature scaling, ECE, Brier and reliability bins;
//! * [`metrics`]: detection metrics, benefit-burden area (AUDBC), paired
//!   bootstrap, rater agreement and Pareto extraction;
//! * [`rdc`]: decision-consistent scoring and curation of teacher traces;
//! * [`sim`]: a seeded event-stream simulator and policy replay;
//! * [`trace`]: the JSON Lines event format and its validation.

pub mod calibration;
pub mod error;
pub mod gate;
pub mod metrics;
pub mod rdc;
pub mod sim;
pub mod trace;
pub mod types;

pub use error::{Error, Result};
pub use gate::{
    decide, decide_bayes_oracle, margin_distance, route, run_dual_process, threshold, threshold_odds, Decision,
    EstimatorPort, GateOutcome, Mode, RecordEstimator,
};
pub use metrics::MetricsReport;
pub use trace::{validate_trace, EventRecord, ValidationReport, Violation, ViolationKind};
pub use types::{gold_label, CostModel, GateConfig, GoldLabel, ProbPair};
