//! Area under the benefit-burden curve.
//!
//! [`audbc`] sweeps the miss cost over a grid with the false-alarm cost held
//! fixed. At each grid value an event triggers iff
//! `p_e >= tau(q_e) && n_e > 0`; burden is the trigger rate and benefit the
//! mean of `trigger * p_e`. Points are deduplicated, sorted by burden and
//! integrated with the trapezoidal rule over the observed points only.
//!
//! [`delta_utility_curve`] is the label-based variant: benefit is the
//! normalised utility gain over staying silent and burden is the
//! false-alarm rate.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::gate::{threshold, threshold_odds};
use crate::metrics::classification::ConfusionCounts;
use crate::trace::EventRecord;
use crate::types::{CostModel, ProbPair};

pub const DEFAULT_GRID_LEN: usize = 16;
pub const DEFAULT_GRID_MIN: f64 = 0.05;
pub const DEFAULT_GRID_MAX: f64 = 8.0;

/// Which threshold the sweep compares `p_e` against.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum TauImpl {
    /// `c_fn q / (c_fa + c_fn q)`
    #[default]
    Odds,
    /// `c_fa / (c_fa + q c_fn)`, the runtime gate threshold
    Bayes,
}

impl TauImpl {
    pub fn threshold(self, q_need: f64, costs: &CostModel) -> Result<f64> {
        match self {
            TauImpl::Odds => threshold_odds(q_need, costs),
            TauImpl::Bayes => threshold(q_need, costs),
        }
    }
}

impl FromStr for TauImpl {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim() {
            "odds" => Ok(TauImpl::Odds),
            "bayes" => Ok(TauImpl::Bayes),
            other => Err(Error::config(format!("unknown tau implementation {other:?} (expected \"odds\" or \"bayes\")"))),
        }
    }
}

impl fmt::Display for TauImpl {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            TauImpl::Odds => "odds",
            TauImpl::Bayes => "bayes",
        })
    }
}

/// `DEFAULT_GRID_LEN` log-spaced miss costs spanning
/// `[DEFAULT_GRID_MIN, DEFAULT_GRID_MAX]`.
pub fn default_cfn_grid() -> Vec<f64> {
    let ratio = DEFAULT_GRID_MAX / DEFAULT_GRID_MIN;
    let last = (DEFAULT_GRID_LEN - 1) as f64;
    (0..DEFAULT_GRID_LEN)
        .map(|k| match k {
            0 => DEFAULT_GRID_MIN,
            k if k == DEFAULT_GRID_LEN - 1 => DEFAULT_GRID_MAX,
            k => DEFAULT_GRID_MIN * ratio.powf(k as f64 / last),
        })
        .collect()
}

/// Parses a comma-separated list of decimals, e.g. `"0.5,1,2"`.
pub fn parse_grid(s: &str) -> Result<Vec<f64>> {
    let values = s
        .split(',')
        .map(str::trim)
        .filter(|t| !t.is_empty())
        .map(|t| {
            t.parse::<f64>()
                .map_err(|_| Error::config(format!("grid value {t:?} is not a decimal number")))
        })
        .collect::<Result<Vec<_>>>()?;
    if values.is_empty() {
        return Err(Error::config("grid is empty"));
    }
    Ok(values)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AudbcConfig {
    pub c_fa: f64,
    /// Sorted, deduplicated, non-negative.
    pub cfn_grid: Vec<f64>,
    #[serde(default)]
    pub tau_impl: TauImpl,
    /// Normaliser of the utility-gain variant; `None` means "number of events".
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub z_normalizer: Option<f64>,
}

impl AudbcConfig {
    /// Validates the grid and normalises it to strictly increasing order.
    pub fn new(c_fa: f64, mut cfn_grid: Vec<f64>, tau_impl: TauImpl) -> Result<Self> {
        CostModel::new(c_fa, 0.0).map_err(|e| Error::config(e.to_string()))?;
        if cfn_grid.is_empty() {
            return Err(Error::config("c_fn grid is empty"));
        }
        if let Some(v) = cfn_grid.iter().find(|v| !(v.is_finite() && **v >= 0.0)) {
            return Err(Error::config(format!("c_fn grid value {v} must be finite and >= 0")));
        }
        cfn_grid.sort_by(f64::total_cmp);
        cfn_grid.dedup();
        Ok(Self { c_fa, cfn_grid, tau_impl, z_normalizer: None })
    }

    pub fn with_z(mut self, z: f64) -> Result<Self> {
        if !(z.is_finite() && z > 0.0) {
            return Err(Error::config(format!("z normaliser must be > 0, got {z}")));
        }
        self.z_normalizer = Some(z);
        Ok(self)
    }

    fn cost_at(&self, c_fn: f64) -> Result<CostModel> {
        CostModel::new(self.c_fa, c_fn)
    }
}

impl Default for AudbcConfig {
    fn default() -> Self {
        Self { c_fa: 1.0, cfn_grid: default_cfn_grid(), tau_impl: TauImpl::Odds, z_normalizer: None }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CurvePoint {
    pub burden: f64,
    pub benefit: f64,
    pub c_fn: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AudbcResult {
    pub points: Vec<CurvePoint>,
    pub area: f64,
}

/// What the sweep needs from one event.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AudbcInput {
    pub p_accept: f64,
    pub q_need: f64,
    pub n_candidates: u32,
}

impl AudbcInput {
    pub fn new(probs: &ProbPair, n_candidates: u32) -> Self {
        Self { p_accept: probs.p_accept, q_need: probs.p_need, n_candidates }
    }

    pub fn from_fast(r: &EventRecord) -> Self {
        Self::new(&r.fast, r.n_candidates)
    }

    /// Slow estimates where present, fast otherwise.
    pub fn from_slow(r: &EventRecord) -> Self {
        Self::new(r.slow.as_ref().unwrap_or(&r.fast), r.n_candidates)
    }
}

/// Trapezoidal sum over points already sorted by burden.
pub fn trapezoid_area(points: &[CurvePoint]) -> f64 {
    points
        .windows(2)
        .map(|w| (w[1].burden - w[0].burden) * 0.5 * (w[0].benefit + w[1].benefit))
        .sum()
}

/// Drops exact-duplicate (burden, benefit) pairs and sorts by burden.
pub fn normalize_curve(mut points: Vec<CurvePoint>) -> Vec<CurvePoint> {
    points.sort_by(|a, b| {
        a.burden
            .total_cmp(&b.burden)
            .then(a.benefit.total_cmp(&b.benefit))
            .then(a.c_fn.total_cmp(&b.c_fn))
    });
    points.dedup_by(|b, a| a.burden == b.burden && a.benefit == b.benefit);
    points
}

pub fn curve_from_points(points: Vec<CurvePoint>) -> AudbcResult {
    let points = normalize_curve(points);
    let area = trapezoid_area(&points);
    AudbcResult { points, area }
}

/// Trigger indicator for one event at one cost setting.
pub fn triggers(input: &AudbcInput, costs: &CostModel, tau_impl: TauImpl) -> Result<bool> {
    let tau = tau_impl.threshold(input.q_need, costs)?;
    Ok(input.p_accept >= tau && input.n_candidates > 0)
}

pub fn audbc(inputs: &[AudbcInput], config: &AudbcConfig) -> Result<AudbcResult> {
    if inputs.is_empty() {
        return Err(Error::domain("AUDBC needs at least one event"));
    }
    if config.cfn_grid.is_empty() {
        return Err(Error::config("c_fn grid is empty"));
    }
    if let Some(bad) = inputs.iter().find(|e| !(0.0..=1.0).contains(&e.p_accept)) {
        return Err(Error::domain(format!("p_accept {} outside [0, 1]", bad.p_accept)));
    }
    let n = inputs.len() as f64;
    let mut points = Vec::with_capacity(config.cfn_grid.len());
    for &c_fn in &config.cfn_grid {
        let costs = config.cost_at(c_fn)?;
        let (mut hits, mut benefit) = (0usize, 0.0f64);
        for e in inputs {
            if triggers(e, &costs, config.tau_impl)? {
                hits += 1;
                benefit += e.p_accept;
            }
        }
        points.push(CurvePoint { burden: hits as f64 / n, benefit: benefit / n, c_fn });
    }
    Ok(curve_from_points(points))
}

/// Utility gain over always-silent, before clamping:
/// `(tp - c_fa fp - c_fn fn) / z`.
pub fn delta_utility_raw(counts: &ConfusionCounts, c_fa: f64, c_fn: f64, z: f64) -> f64 {
    (counts.tp as f64 - c_fa * counts.fp as f64 - c_fn * counts.fn_ as f64) / z
}

/// One point of the utility-gain curve: burden is `fp / (tp + fp)`, benefit
/// is the raw gain clamped to `[0, 1]`.
pub fn delta_utility_point(counts: &ConfusionCounts, c_fa: f64, c_fn: f64, z: f64) -> CurvePoint {
    let flagged = counts.tp + counts.fp;
    let burden = if flagged == 0 { 0.0 } else { counts.fp as f64 / flagged as f64 };
    CurvePoint { burden, benefit: delta_utility_raw(counts, c_fa, c_fn, z).clamp(0.0, 1.0), c_fn }
}

/// Labeled event for the utility-gain curve.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LabeledInput {
    pub input: AudbcInput,
    pub gold: bool,
}

/// Utility-gain curve: at each grid value the events are gated with the
/// configured threshold and scored against gold.
pub fn delta_utility_curve(events: &[LabeledInput], config: &AudbcConfig) -> Result<AudbcResult> {
    if events.is_empty() {
        return Err(Error::domain("utility curve needs at least one event"));
    }
    let z = config.z_normalizer.unwrap_or(events.len() as f64);
    let mut points = Vec::with_capacity(config.cfn_grid.len());
    for &c_fn in &config.cfn_grid {
        let costs = config.cost_at(c_fn)?;
        let mut counts = ConfusionCounts::default();
        for e in events {
            counts.add(triggers(&e.input, &costs, config.tau_impl)?, e.gold);
        }
        points.push(delta_utility_point(&counts, config.c_fa, c_fn, z));
    }
    Ok(curve_from_points(points))
}

/// Builds labeled inputs from a trace; unlabeled events are an error.
pub fn labeled_inputs(records: &[EventRecord], slow: bool) -> Result<Vec<LabeledInput>> {
    records
        .iter()
        .map(|r| {
            let input = if slow { AudbcInput::from_slow(r) } else { AudbcInput::from_fast(r) };
            Ok(LabeledInput { input, gold: r.gold()? })
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn pt(b: f64, u: f64) -> CurvePoint {
        CurvePoint { burden: b, benefit: u, c_fn: 0.0 }
    }

    #[test]
    fn hand_trapezoid() {
        let r = curve_from_points(vec![pt(1.0, 0.4), pt(0.2, 0.1), pt(0.6, 0.3)]);
        assert!((r.area - 0.22).abs() < 1e-15);
        assert_eq!(r.points.len(), 3);
    }

    #[test]
    fn single_point_has_zero_area() {
        assert_eq!(curve_from_points(vec![pt(0.3, 0.2)]).area, 0.0);
        assert_eq!(curve_from_points(vec![pt(0.3, 0.2), pt(0.3, 0.2)]).points.len(), 1);
    }

    #[test]
    fn forced_off_indicator() {
        let inputs: Vec<_> = (0..10)
            .map(|i| AudbcInput { p_accept: i as f64 / 10.0, q_need: 0.5, n_candidates: 0 })
            .collect();
        let r = audbc(&inputs, &AudbcConfig::default()).unwrap();
        assert_eq!(r.area, 0.0);
        assert!(r.points.iter().all(|p| p.burden == 0.0 && p.benefit == 0.0));
    }

    #[test]
    fn empty_inputs_and_grid() {
        assert!(matches!(audbc(&[], &AudbcConfig::default()), Err(Error::Domain(_))));
        assert!(matches!(AudbcConfig::new(1.0, vec![], TauImpl::Odds), Err(Error::Config(_))));
        assert!(AudbcConfig::new(1.0, vec![-1.0], TauImpl::Odds).is_err());
        assert!(AudbcConfig::new(0.0, vec![1.0], TauImpl::Odds).is_err());
    }

    #[test]
    fn grid_parsing() {
        assert_eq!(parse_grid("1,2,4").unwrap(), vec![1.0, 2.0, 4.0]);
        assert_eq!(parse_grid(" 0.5 , 3 ").unwrap(), vec![0.5, 3.0]);
        assert!(matches!(parse_grid("1,x"), Err(Error::Config(_))));
        assert!(parse_grid("").is_err());
    }

    #[test]
    fn default_grid_shape() {
        let g = default_cfn_grid();
        assert_eq!(g.len(), 16);
        assert_eq!(g[0], 0.05);
        assert_eq!(g[15], 8.0);
        assert!(g.windows(2).all(|w| w[0] < w[1]));
        let r0 = g[1] / g[0];
        assert!(g.windows(2).all(|w| ((w[1] / w[0]) - r0).abs() < 1e-9));
    }

    #[test]
    fn tau_impl_parse() {
        assert_eq!("odds".parse::<TauImpl>().unwrap(), TauImpl::Odds);
        assert_eq!("bayes".parse::<TauImpl>().unwrap(), TauImpl::Bayes);
        assert!("median".parse::<TauImpl>().is_err());
        assert_eq!(TauImpl::default(), TauImpl::Odds);
    }

    #[test]
    fn delta_utility_examples() {
        let silent = ConfusionCounts { tp: 0, fp: 0, fn_: 3, tn: 7 };
        assert_eq!(delta_utility_raw(&silent, 1.0, 2.0, 10.0), -0.6);
        assert_eq!(delta_utility_point(&silent, 1.0, 2.0, 10.0).benefit, 0.0);

        let perfect = ConfusionCounts { tp: 4, fp: 0, fn_: 0, tn: 6 };
        let p = delta_utility_point(&perfect, 1.0, 5.0, 10.0);
        assert_eq!((p.burden, p.benefit), (0.0, 0.4));

        let mixed = ConfusionCounts { tp: 8, fp: 2, fn_: 1, tn: 0 };
        let p = delta_utility_point(&mixed, 1.0, 2.0, 10.0);
        assert!((p.benefit - 0.4).abs() < 1e-15);
        assert!((p.burden - 0.2).abs() < 1e-15);
    }

    #[test]
    fn delta_utility_curve_defaults_z_to_event_count() {
        let events: Vec<LabeledInput> = [(0.9, true), (0.8, true), (0.2, false), (0.7, false)]
            .iter()
            .map(|&(p, g)| LabeledInput {
                input: AudbcInput { p_accept: p, q_need: 1.0, n_candidates: 1 },
                gold: g,
            })
            .collect();
        let cfg = AudbcConfig::new(1.0, vec![1.0], TauImpl::Bayes).unwrap();
        // tau = 0.5: interventions on 0.9, 0.8, 0.7 -> tp 2, fp 1, fn 0
        let r = delta_utility_curve(&events, &cfg).unwrap();
        assert_eq!(r.points.len(), 1);
        assert!((r.points[0].benefit - 0.25).abs() < 1e-15);
        assert!((r.points[0].burden - 1.0 / 3.0).abs() < 1e-15);
    }
}
