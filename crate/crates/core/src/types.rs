//! Domain values shared by the gate, metrics, calibration and simulator.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Asymmetric unit costs of a false alarm (`c_fa`) and of missed help (`c_fn`).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawCostModel")]
pub struct CostModel {
    c_fa: f64,
    c_fn: f64,
}

#[derive(Deserialize)]
struct RawCostModel {
    c_fa: f64,
    c_fn: f64,
}

impl TryFrom<RawCostModel> for CostModel {
    type Error = Error;

    fn try_from(raw: RawCostModel) -> Result<Self> {
        CostModel::new(raw.c_fa, raw.c_fn)
    }
}

impl CostModel {
    pub fn new(c_fa: f64, c_fn: f64) -> Result<Self> {
        if !(c_fa.is_finite() && c_fa > 0.0) {
            return Err(Error::domain(format!("c_fa must be finite and > 0, got {c_fa}")));
        }
        if !(c_fn.is_finite() && c_fn >= 0.0) {
            return Err(Error::domain(format!("c_fn must be finite and >= 0, got {c_fn}")));
        }
        Ok(Self { c_fa, c_fn })
    }

    pub fn c_fa(&self) -> f64 {
        self.c_fa
    }

    pub fn c_fn(&self) -> f64 {
        self.c_fn
    }

    /// Same false-alarm cost, different miss cost.
    pub fn with_c_fn(&self, c_fn: f64) -> Result<Self> {
        Self::new(self.c_fa, c_fn)
    }
}

/// A pair of probabilities: help is needed, and an offer would be accepted.
///
/// Fields are public so that traces with out-of-range values can still be
/// loaded and reported on by [`crate::trace::validate_trace`]; use
/// [`ProbPair::new`] or [`ProbPair::check`] where validity matters.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ProbPair {
    pub p_need: f64,
    pub p_accept: f64,
}

impl ProbPair {
    pub fn new(p_need: f64, p_accept: f64) -> Result<Self> {
        let pair = Self { p_need, p_accept };
        pair.check()?;
        Ok(pair)
    }

    pub fn check(&self) -> Result<()> {
        check_unit("p_need", self.p_need)?;
        check_unit("p_accept", self.p_accept)
    }

    pub fn is_valid(&self) -> bool {
        self.check().is_ok()
    }
}

pub(crate) fn check_unit(name: &str, v: f64) -> Result<()> {
    if (0.0..=1.0).contains(&v) {
        Ok(())
    } else {
        Err(Error::domain(format!("{name} must lie in [0, 1], got {v}")))
    }
}

/// Parameters of the intervention gate and the slow-on-margin router.
///
/// Ties (`p_accept` exactly on the effective threshold) always intervene.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawGateConfig")]
pub struct GateConfig {
    costs: CostModel,
    delta_slow: f64,
    bias_epsilon: f64,
}

#[derive(Deserialize)]
struct RawGateConfig {
    costs: CostModel,
    #[serde(default)]
    delta_slow: f64,
    #[serde(default)]
    bias_epsilon: f64,
}

impl TryFrom<RawGateConfig> for GateConfig {
    type Error = Error;

    fn try_from(raw: RawGateConfig) -> Result<Self> {
        GateConfig::new(raw.costs, raw.delta_slow, raw.bias_epsilon)
    }
}

impl GateConfig {
    pub fn new(costs: CostModel, delta_slow: f64, bias_epsilon: f64) -> Result<Self> {
        if !(0.0..=1.0).contains(&delta_slow) {
            return Err(Error::domain(format!("delta_slow must lie in [0, 1], got {delta_slow}")));
        }
        if !(-1.0..=1.0).contains(&bias_epsilon) {
            return Err(Error::domain(format!(
                "bias_epsilon must lie in [-1, 1], got {bias_epsilon}"
            )));
        }
        Ok(Self { costs, delta_slow, bias_epsilon })
    }

    /// Fast-only gate: no slow margin, no bias.
    pub fn fast_only(costs: CostModel) -> Self {
        Self { costs, delta_slow: 0.0, bias_epsilon: 0.0 }
    }

    pub fn costs(&self) -> CostModel {
        self.costs
    }

    pub fn delta_slow(&self) -> f64 {
        self.delta_slow
    }

    pub fn bias_epsilon(&self) -> f64 {
        self.bias_epsilon
    }

    pub fn with_delta(&self, delta_slow: f64) -> Result<Self> {
        Self::new(self.costs, delta_slow, self.bias_epsilon)
    }

    pub fn with_bias(&self, bias_epsilon: f64) -> Result<Self> {
        Self::new(self.costs, self.delta_slow, bias_epsilon)
    }
}

/// Ground truth for detection metrics: help was needed *and* would be accepted.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct GoldLabel(pub bool);

impl GoldLabel {
    pub fn from_labels(y_need: Option<bool>, y_accept: Option<bool>) -> Result<Self> {
        gold_label(y_need, y_accept).map(GoldLabel)
    }

    pub fn value(self) -> bool {
        self.0
    }
}

/// `y_need AND y_accept`; either label missing is an error.
pub fn gold_label(y_need: Option<bool>, y_accept: Option<bool>) -> Result<bool> {
    match (y_need, y_accept) {
        (Some(n), Some(a)) => Ok(n && a),
        (None, _) => Err(Error::MissingLabel("y_need".into())),
        (_, None) => Err(Error::MissingLabel("y_accept".into())),
    }
}
