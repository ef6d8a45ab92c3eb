//! Binary rater agreement: raw agreement, Cohen's kappa, Matthews
//! correlation, and the decision flip rate between two policies.

use std::collections::HashMap;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::metrics::classification::ConfusionCounts;

fn check_pair(a: &[bool], b: &[bool]) -> Result<()> {
    if a.is_empty() {
        return Err(Error::domain("agreement needs at least one item"));
    }
    if a.len() != b.len() {
        return Err(Error::domain(format!("label vectors differ in length ({} vs {})", a.len(), b.len())));
    }
    Ok(())
}

pub fn agreement_rate(a: &[bool], b: &[bool]) -> Result<f64> {
    check_pair(a, b)?;
    Ok(a.iter().zip(b).filter(|(x, y)| x == y).count() as f64 / a.len() as f64)
}

/// `(p_o - p_e) / (1 - p_e)` with chance agreement from the marginals.
/// When `p_e == 1` both raters used one identical constant label and the
/// result is 1.
pub fn cohen_kappa(a: &[bool], b: &[bool]) -> Result<f64> {
    check_pair(a, b)?;
    let n = a.len() as f64;
    let p_o = agreement_rate(a, b)?;
    let pa = a.iter().filter(|&&x| x).count() as f64 / n;
    let pb = b.iter().filter(|&&x| x).count() as f64 / n;
    let p_e = pa * pb + (1.0 - pa) * (1.0 - pb);
    if p_e >= 1.0 {
        return Ok(if p_o >= 1.0 { 1.0 } else { 0.0 });
    }
    Ok((p_o - p_e) / (1.0 - p_e))
}

/// Matthews correlation, treating `a` as reference and `b` as prediction.
/// Zero when any marginal factor is zero.
pub fn mcc(a: &[bool], b: &[bool]) -> Result<f64> {
    check_pair(a, b)?;
    let mut c = ConfusionCounts::default();
    for (&x, &y) in a.iter().zip(b) {
        c.add(y, x);
    }
    let (tp, fp, fn_, tn) = (c.tp as f64, c.fp as f64, c.fn_ as f64, c.tn as f64);
    let den = (tp + fp) * (tp + fn_) * (tn + fp) * (tn + fn_);
    if den == 0.0 {
        return Ok(0.0);
    }
    Ok((tp * tn - fp * fn_) / den.sqrt())
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AgreementReport {
    pub agreement_rate: f64,
    pub kappa: f64,
    pub mcc: f64,
    pub support: usize,
    /// Both raters gave one identical constant label; kappa is set to 1 by
    /// convention.
    pub degenerate: bool,
}

pub fn agreement_report(a: &[bool], b: &[bool]) -> Result<AgreementReport> {
    check_pair(a, b)?;
    let constant = |v: &[bool]| v.iter().all(|&x| x == v[0]);
    Ok(AgreementReport {
        agreement_rate: agreement_rate(a, b)?,
        kappa: cohen_kappa(a, b)?,
        mcc: mcc(a, b)?,
        support: a.len(),
        degenerate: constant(a) && constant(b) && a[0] == b[0],
    })
}

/// Share of positions where the two decision vectors differ.
pub fn flip_rate(a: &[bool], b: &[bool]) -> Result<f64> {
    Ok(1.0 - agreement_rate(a, b)?)
}

/// Flip rate over decisions keyed by event id; both sets must cover the
/// same ids.
pub fn flip_rate_by_id(a: &[(String, bool)], b: &[(String, bool)]) -> Result<f64> {
    if a.len() != b.len() {
        return Err(Error::Pairing(format!("decision sets differ in size ({} vs {})", a.len(), b.len())));
    }
    let lookup: HashMap<&str, bool> = b.iter().map(|(id, d)| (id.as_str(), *d)).collect();
    let mut xs = Vec::with_capacity(a.len());
    let mut ys = Vec::with_capacity(a.len());
    for (id, d) in a {
        let other = lookup
            .get(id.as_str())
            .ok_or_else(|| Error::Pairing(format!("id {id:?} missing from second decision set")))?;
        xs.push(*d);
        ys.push(*other);
    }
    flip_rate(&xs, &ys)
}
