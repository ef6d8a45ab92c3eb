//! The cost-sensitive intervention gate and the slow-on-margin controller.
//!
//! The gate intervenes iff `p_accept >= tau(p_need)` with
//! `tau = c_fa / (c_fa + p_need * c_fn)`. A single slow estimation pass is
//! requested only when the fast acceptance estimate lies within
//! `delta_slow` of `tau` (inclusive). Routing always looks at the fast
//! estimates and the unbiased threshold; the drift bias only moves the
//! final comparison.

use num_rational::BigRational;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::trace::EventRecord;
use crate::types::{check_unit, CostModel, GateConfig, ProbPair};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Mode {
    Fast,
    Slow,
}

/// Decision plus the values it was derived from.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Decision {
    pub intervene: bool,
    pub mode: Mode,
    /// Unbiased threshold for `probs_used.p_need`.
    pub threshold: f64,
    /// Distance of the *fast* acceptance estimate from its threshold.
    pub margin_distance: f64,
    pub probs_used: ProbPair,
}

/// Acceptance threshold `c_fa / (c_fa + p_need * c_fn)`, in `(0, 1]`.
pub fn threshold(p_need: f64, costs: &CostModel) -> Result<f64> {
    check_unit("p_need", p_need)?;
    Ok(costs.c_fa() / (costs.c_fa() + p_need * costs.c_fn()))
}

/// The odds-form threshold `c_fn * q / (c_fa + c_fn * q)` used by the
/// benefit-burden sweep. It is the complement of [`threshold`].
pub fn threshold_odds(p_need: f64, costs: &CostModel) -> Result<f64> {
    check_unit("p_need", p_need)?;
    let w = costs.c_fn() * p_need;
    Ok(w / (costs.c_fa() + w))
}

/// `clamp(tau - bias, 0, 1)`; a positive bias loosens the gate.
pub fn effective_threshold(tau: f64, bias_epsilon: f64) -> f64 {
    (tau - bias_epsilon).clamp(0.0, 1.0)
}

pub fn margin_distance(probs: &ProbPair, costs: &CostModel) -> Result<f64> {
    probs.check()?;
    Ok((probs.p_accept - threshold(probs.p_need, costs)?).abs())
}

pub fn route(fast: &ProbPair, config: &GateConfig) -> Result<Mode> {
    let d = margin_distance(fast, &config.costs())?;
    Ok(if d <= config.delta_slow() { Mode::Slow } else { Mode::Fast })
}

// Both comparisons below are decided in exact arithmetic on the f64
// inputs: a float filter settles clear cases and a rational fallback
// handles anything inside the rounding band. Ties therefore intervene
// exactly when the real-valued quantities are equal.
const FILTER: f64 = 1e-12;
const FILTER_FLOOR: f64 = 1e-280;

fn exact(x: f64) -> BigRational {
    BigRational::from_float(x).expect("finite input")
}

/// `p >= clamp(c_fa / (c_fa + q * c_fn) - bias, 0, 1)`, i.e.
/// `p == 1 || (p + bias) * (c_fa + q * c_fn) >= c_fa` (the lower clamp is
/// implied because `p >= 0`).
fn clears_threshold(p: f64, q: f64, costs: &CostModel, bias: f64) -> bool {
    if p == 1.0 {
        return true;
    }
    let (c_fa, c_fn) = (costs.c_fa(), costs.c_fn());
    let lhs = (p + bias) * (c_fa + q * c_fn);
    if c_fa > FILTER_FLOOR {
        if lhs > c_fa * (1.0 + FILTER) {
            return true;
        }
        if lhs < c_fa * (1.0 - FILTER) {
            return false;
        }
    }
    (exact(p) + exact(bias)) * (exact(c_fa) + exact(q) * exact(c_fn)) >= exact(c_fa)
}

/// `(1 - p) * c_fa <= p * q * c_fn`.
fn intervene_cost_not_higher(p: f64, q: f64, costs: &CostModel) -> bool {
    let (c_fa, c_fn) = (costs.c_fa(), costs.c_fn());
    let a = (1.0 - p) * c_fa;
    let b = p * q * c_fn;
    let scale = a.max(b);
    if scale > FILTER_FLOOR && (a - b).abs() > FILTER * scale {
        return a <= b;
    }
    let one = BigRational::from_integer(1.into());
    (one - exact(p)) * exact(c_fa) <= exact(p) * exact(q) * exact(c_fn)
}

fn decide_with(probs: ProbPair, config: &GateConfig, mode: Mode, margin: f64) -> Result<Decision> {
    probs.check()?;
    let tau = threshold(probs.p_need, &config.costs())?;
    let intervene = clears_threshold(probs.p_accept, probs.p_need, &config.costs(), config.bias_epsilon());
    Ok(Decision { intervene, mode, threshold: tau, margin_distance: margin, probs_used: probs })
}

/// Single-pass gate decision on the given estimates.
pub fn decide(probs: &ProbPair, config: &GateConfig) -> Result<Decision> {
    let margin = margin_distance(probs, &config.costs())?;
    decide_with(*probs, config, Mode::Fast, margin)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ExpectedCosts {
    /// Paid only on a false alarm: `(1 - p_accept) * c_fa`.
    pub intervene: f64,
    /// Paid only on missed help: `p_accept * p_need * c_fn`.
    pub silence: f64,
}

pub fn expected_costs(probs: &ProbPair, costs: &CostModel) -> Result<ExpectedCosts> {
    probs.check()?;
    Ok(ExpectedCosts {
        intervene: (1.0 - probs.p_accept) * costs.c_fa(),
        silence: probs.p_accept * probs.p_need * costs.c_fn(),
    })
}

/// Bayes-risk decision: pick the action with the lower expected cost,
/// intervening on ties.
pub fn decide_bayes_oracle(probs: &ProbPair, costs: &CostModel) -> Result<Decision> {
    probs.check()?;
    let tau = threshold(probs.p_need, costs)?;
    Ok(Decision {
        intervene: intervene_cost_not_higher(probs.p_accept, probs.p_need, costs),
        mode: Mode::Fast,
        threshold: tau,
        margin_distance: (probs.p_accept - tau).abs(),
        probs_used: *probs,
    })
}

/// Source of probability estimates for one event.
///
/// Implementations used by parallel replay must be `Sync`; a port that can
/// only serve one consumer should simply not implement `Sync`.
pub trait EstimatorPort {
    fn tier(&self) -> Mode;
    fn estimate(&self, record: &EventRecord) -> Result<ProbPair>;
}

/// Reads the estimates already stored on the record (`fast` or `slow`).
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct RecordEstimator {
    tier: Mode,
}

impl RecordEstimator {
    pub const FAST: RecordEstimator = RecordEstimator { tier: Mode::Fast };
    pub const SLOW: RecordEstimator = RecordEstimator { tier: Mode::Slow };
}

impl EstimatorPort for RecordEstimator {
    fn tier(&self) -> Mode {
        self.tier
    }

    fn estimate(&self, record: &EventRecord) -> Result<ProbPair> {
        match self.tier {
            Mode::Fast => Ok(record.fast),
            Mode::Slow => record
                .slow
                .ok_or_else(|| Error::domain(format!("record {} has no slow estimates", record.id))),
        }
    }
}

/// Decision for one event with the compute it was charged.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GateOutcome {
    pub id: String,
    pub decision: Decision,
    pub tokens: u64,
    pub latency_ms: f64,
}

/// Fast pass, route, and at most one slow pass.
pub fn run_dual_process(
    record: &EventRecord,
    fast_port: &dyn EstimatorPort,
    slow_port: Option<&dyn EstimatorPort>,
    config: &GateConfig,
) -> Result<GateOutcome> {
    let fast = fast_port.estimate(record)?;
    let margin = margin_distance(&fast, &config.costs())?;
    let mode = if margin <= config.delta_slow() { Mode::Slow } else { Mode::Fast };

    let (decision, tokens, latency_ms) = match mode {
        Mode::Fast => (
            decide_with(fast, config, Mode::Fast, margin)?,
            record.tokens_fast,
            record.latency_fast_ms,
        ),
        Mode::Slow => {
            let port = slow_port.ok_or_else(|| {
                Error::config(format!("record {} routed to slow pass but no slow estimator is configured", record.id))
            })?;
            let slow = port.estimate(record)?;
            (
                decide_with(slow, config, Mode::Slow, margin)?,
                record.tokens_fast + record.tokens_slow,
                record.latency_fast_ms + record.latency_slow_ms,
            )
        }
    };
    Ok(GateOutcome { id: record.id.clone(), decision, tokens, latency_ms })
}
