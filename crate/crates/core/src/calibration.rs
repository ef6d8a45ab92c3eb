//! Post-hoc temperature scaling and calibration diagnostics.
//!
//! The temperature map works on the logit scale:
//! `p -> sigmoid(logit(p) / t)`, with inputs clamped to
//! `[PROB_CLAMP, 1 - PROB_CLAMP]` first. `t = 1` returns the input untouched.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::types::ProbPair;

pub const PROB_CLAMP: f64 = 1e-6;
pub const DEFAULT_BINS: usize = 10;
pub const T_SEARCH_MIN: f64 = 0.05;
pub const T_SEARCH_MAX: f64 = 20.0;
const SEARCH_REL_TOL: f64 = 1e-4;

pub fn logit(p: f64) -> f64 {
    let p = p.clamp(PROB_CLAMP, 1.0 - PROB_CLAMP);
    (p / (1.0 - p)).ln()
}

pub fn sigmoid(x: f64) -> f64 {
    if x >= 0.0 {
        1.0 / (1.0 + (-x).exp())
    } else {
        let e = x.exp();
        e / (1.0 + e)
    }
}

pub fn apply_temperature(p: f64, t: f64) -> Result<f64> {
    if !(t.is_finite() && t > 0.0) {
        return Err(Error::domain(format!("temperature must be finite and > 0, got {t}")));
    }
    if p.is_nan() {
        return Err(Error::domain("probability is NaN"));
    }
    if t == 1.0 {
        return Ok(p);
    }
    Ok(sigmoid(logit(p) / t))
}

/// Per-signal temperatures plus the threshold bias consumed by the gate.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CalibrationParams {
    pub t_need: f64,
    pub t_accept: f64,
    #[serde(default)]
    pub bias_epsilon: f64,
}

impl Default for CalibrationParams {
    fn default() -> Self {
        Self { t_need: 1.0, t_accept: 1.0, bias_epsilon: 0.0 }
    }
}

impl CalibrationParams {
    pub fn new(t_need: f64, t_accept: f64, bias_epsilon: f64) -> Result<Self> {
        for (name, t) in [("t_need", t_need), ("t_accept", t_accept)] {
            if !(t.is_finite() && t > 0.0) {
                return Err(Error::domain(format!("{name} must be finite and > 0, got {t}")));
            }
        }
        if !(-1.0..=1.0).contains(&bias_epsilon) {
            return Err(Error::domain(format!("bias_epsilon must lie in [-1, 1], got {bias_epsilon}")));
        }
        Ok(Self { t_need, t_accept, bias_epsilon })
    }

    /// Same drift temperature on both signals.
    pub fn shared(t: f64, bias_epsilon: f64) -> Result<Self> {
        Self::new(t, t, bias_epsilon)
    }
}

/// Rescales both probabilities with their own temperature. The bias is left
/// for the gate.
pub fn perturb(params: &CalibrationParams, probs: &ProbPair) -> Result<ProbPair> {
    Ok(ProbPair {
        p_need: apply_temperature(probs.p_need, params.t_need)?,
        p_accept: apply_temperature(probs.p_accept, params.t_accept)?,
    })
}

fn check_inputs(preds: &[f64], labels: &[bool]) -> Result<()> {
    if preds.is_empty() {
        return Err(Error::domain("no predictions"));
    }
    if preds.len() != labels.len() {
        return Err(Error::domain(format!(
            "{} predictions but {} labels",
            preds.len(),
            labels.len()
        )));
    }
    if let Some(p) = preds.iter().find(|p| !(0.0..=1.0).contains(*p)) {
        return Err(Error::domain(format!("prediction {p} outside [0, 1]")));
    }
    Ok(())
}

/// Mean negative log-likelihood of the labels under temperature `t`.
pub fn temperature_nll(preds: &[f64], labels: &[bool], t: f64) -> f64 {
    let n = preds.len() as f64;
    preds
        .iter()
        .zip(labels)
        .map(|(&p, &y)| {
            let z = logit(p) / t;
            // -log sigmoid(z) = softplus(-z)
            let s = if y { -z } else { z };
            softplus(s)
        })
        .sum::<f64>()
        / n
}

fn softplus(x: f64) -> f64 {
    if x > 0.0 {
        x + (-x).exp().ln_1p()
    } else {
        x.exp().ln_1p()
    }
}

/// Temperature minimising the labels' NLL, found by golden-section search
/// on `ln t` over `[T_SEARCH_MIN, T_SEARCH_MAX]`.
pub fn fit_temperature(preds: &[f64], labels: &[bool]) -> Result<f64> {
    check_inputs(preds, labels)?;
    let pos = labels.iter().filter(|&&y| y).count();
    if pos == 0 || pos == labels.len() {
        return Err(Error::DegenerateFit("labels contain a single class".into()));
    }

    let f = |log_t: f64| temperature_nll(preds, labels, log_t.exp());
    let inv_phi = (5f64.sqrt() - 1.0) / 2.0;
    let (mut a, mut b) = (T_SEARCH_MIN.ln(), T_SEARCH_MAX.ln());
    let mut c = b - inv_phi * (b - a);
    let mut d = a + inv_phi * (b - a);
    let (mut fc, mut fd) = (f(c), f(d));
    // interval width in ln t approximates relative tolerance in t
    while b - a > SEARCH_REL_TOL {
        if fc <= fd {
            b = d;
            d = c;
            fd = fc;
            c = b - inv_phi * (b - a);
            fc = f(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + inv_phi * (b - a);
            fd = f(d);
        }
    }
    let mid = 0.5 * (a + b);
    let mut best = (f(mid), mid.exp());
    // monotone objectives converge onto a bound; report the bound itself
    for t in [T_SEARCH_MIN, T_SEARCH_MAX] {
        let v = temperature_nll(preds, labels, t);
        if v < best.0 {
            best = (v, t);
        }
    }
    Ok(best.1)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ReliabilityBin {
    pub lo: f64,
    pub hi: f64,
    pub count: usize,
    pub mean_confidence: f64,
    pub empirical_accuracy: f64,
}

/// Equal-width bin index; 1.0 falls in the last bin.
fn bin_index(p: f64, n_bins: usize) -> usize {
    ((p * n_bins as f64).floor() as usize).min(n_bins - 1)
}

/// Equal-width bins over `[0, 1]`. Empty bins report zero confidence and
/// accuracy.
pub fn reliability_bins(preds: &[f64], labels: &[bool], n_bins: usize) -> Result<Vec<ReliabilityBin>> {
    check_inputs(preds, labels)?;
    if n_bins == 0 {
        return Err(Error::domain("n_bins must be >= 1"));
    }
    let mut sums = vec![(0usize, 0.0f64, 0usize); n_bins];
    for (&p, &y) in preds.iter().zip(labels) {
        let s = &mut sums[bin_index(p, n_bins)];
        s.0 += 1;
        s.1 += p;
        s.2 += y as usize;
    }
    Ok(sums
        .into_iter()
        .enumerate()
        .map(|(i, (count, conf, pos))| {
            let (mean_confidence, empirical_accuracy) = if count == 0 {
                (0.0, 0.0)
            } else {
                (conf / count as f64, pos as f64 / count as f64)
            };
            ReliabilityBin {
                lo: i as f64 / n_bins as f64,
                hi: (i + 1) as f64 / n_bins as f64,
                count,
                mean_confidence,
                empirical_accuracy,
            }
        })
        .collect())
}

pub fn ece_from_bins(bins: &[ReliabilityBin]) -> f64 {
    let n: usize = bins.iter().map(|b| b.count).sum();
    if n == 0 {
        return 0.0;
    }
    bins.iter()
        .filter(|b| b.count > 0)
        .map(|b| b.count as f64 / n as f64 * (b.empirical_accuracy - b.mean_confidence).abs())
        .sum()
}

pub fn ece(preds: &[f64], labels: &[bool], n_bins: usize) -> Result<f64> {
    Ok(ece_from_bins(&reliability_bins(preds, labels, n_bins)?))
}

pub fn brier(preds: &[f64], labels: &[bool]) -> Result<f64> {
    check_inputs(preds, labels)?;
    let n = preds.len() as f64;
    Ok(preds
        .iter()
        .zip(labels)
        .map(|(&p, &y)| {
            let r = p - if y { 1.0 } else { 0.0 };
            r * r
        })
        .sum::<f64>()
        / n)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CalibrationReport {
    pub ece: f64,
    pub brier: f64,
    pub bins: Vec<ReliabilityBin>,
    pub fitted_temperature: Option<f64>,
}

pub fn calibration_report(
    preds: &[f64],
    labels: &[bool],
    n_bins: usize,
    fitted_temperature: Option<f64>,
) -> Result<CalibrationReport> {
    let bins = reliability_bins(preds, labels, n_bins)?;
    Ok(CalibrationReport {
        ece: ece_from_bins(&bins),
        brier: brier(preds, labels)?,
        bins,
        fitted_temperature,
    })
}

/// Before/after diagnostics around a fitted temperature.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RecalibrationSummary {
    pub n: usize,
    pub fitted_temperature: f64,
    pub before: CalibrationReport,
    pub after: CalibrationReport,
}

pub fn recalibrate(preds: &[f64], labels: &[bool], n_bins: usize) -> Result<RecalibrationSummary> {
    let t = fit_temperature(preds, labels)?;
    let scaled = preds
        .iter()
        .map(|&p| apply_temperature(p, t))
        .collect::<Result<Vec<_>>>()?;
    Ok(RecalibrationSummary {
        n: preds.len(),
        fitted_temperature: t,
        before: calibration_report(preds, labels, n_bins, None)?,
        after: calibration_report(&scaled, labels, n_bins, Some(t))?,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn temperature_examples() {
        assert_eq!(apply_temperature(0.5, 3.7).unwrap(), 0.5);
        assert_eq!(apply_temperature(0.123, 1.0).unwrap(), 0.123);
        assert!((apply_temperature(0.8, 2.0).unwrap() - 2.0 / 3.0).abs() < 1e-12);
        assert!(apply_temperature(0.8, 0.0).is_err());
        assert!(apply_temperature(0.8, -1.0).is_err());
    }

    #[test]
    fn fit_two_points_hits_lower_bound() {
        // NLL falls monotonically as t shrinks for perfectly separated points
        let preds = [0.9, 0.1];
        let labels = [true, false];
        let grid: Vec<f64> = [0.05, 0.1, 0.5, 1.0, 5.0, 20.0]
            .iter()
            .map(|&t| temperature_nll(&preds, &labels, t))
            .collect();
        assert!(grid.windows(2).all(|w| w[0] < w[1]));
        assert_eq!(fit_temperature(&preds, &labels).unwrap(), T_SEARCH_MIN);
    }

    #[test]
    fn fit_rejects_single_class() {
        let err = fit_temperature(&[0.3, 0.7], &[true, true]).unwrap_err();
        assert!(matches!(err, Error::DegenerateFit(_)));
    }

    #[test]
    fn ece_examples() {
        assert_eq!(ece(&[1.0; 8], &[true; 8], 10).unwrap(), 0.0);
        let labels: Vec<bool> = (0..10).map(|i| i % 2 == 0).collect();
        assert_eq!(ece(&[0.5; 10], &labels, 10).unwrap(), 0.0);
        let labels: Vec<bool> = (0..10).map(|i| i < 7).collect();
        assert!((ece(&[0.9; 10], &labels, 10).unwrap() - 0.2).abs() < 1e-12);
        assert!(ece(&[], &[], 10).is_err());
        assert!(ece(&[0.5], &[true], 0).is_err());
    }

    #[test]
    fn brier_examples() {
        assert_eq!(brier(&[1.0, 0.0], &[true, false]).unwrap(), 0.0);
        assert_eq!(brier(&[0.5; 3], &[true, false, true]).unwrap(), 0.25);
        assert!((brier(&[0.8, 0.3], &[true, false]).unwrap() - 0.065).abs() < 1e-12);
        assert!(brier(&[], &[]).is_err());
    }

    #[test]
    fn bins_partition() {
        let preds = [0.31, 0.33, 0.35];
        let bins = reliability_bins(&preds, &[true, false, true], 10).unwrap();
        assert_eq!(bins.iter().filter(|b| b.count > 0).count(), 1);
        let preds: Vec<f64> = (0..=100).map(|i| i as f64 / 100.0).collect();
        let labels = vec![false; preds.len()];
        let bins = reliability_bins(&preds, &labels, 7).unwrap();
        assert_eq!(bins.iter().map(|b| b.count).sum::<usize>(), preds.len());
        assert!(bins.windows(2).all(|w| w[0].hi == w[1].lo));
        assert_eq!(bins[0].lo, 0.0);
        assert_eq!(bins[6].hi, 1.0);
    }

    #[test]
    fn single_bin_ece_is_global_gap() {
        let preds = [0.2, 0.9, 0.6, 0.4];
        let labels = [false, true, true, true];
        let gap = (0.75f64 - 0.525).abs();
        assert!((ece(&preds, &labels, 1).unwrap() - gap).abs() < 1e-12);
    }

    #[test]
    fn perturb_examples() {
        let id = CalibrationParams::default();
        let p = ProbPair::new(0.3, 0.8).unwrap();
        assert_eq!(perturb(&id, &p).unwrap(), p);
        let two = CalibrationParams::shared(2.0, 0.0).unwrap();
        let q = perturb(&two, &ProbPair::new(0.8, 0.8).unwrap()).unwrap();
        assert!((q.p_need - 2.0 / 3.0).abs() < 1e-12 && (q.p_accept - 2.0 / 3.0).abs() < 1e-12);
        let half = ProbPair::new(0.5, 0.5).unwrap();
        assert_eq!(perturb(&CalibrationParams::new(0.3, 4.0, 0.0).unwrap(), &half).unwrap(), half);
    }
}
