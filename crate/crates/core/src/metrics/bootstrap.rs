//! Paired bootstrap comparison of two decision sets on the same events.
//!
//! Every replicate resamples event (or clip) indices with replacement and
//! evaluates both systems on that same resample. Replicate `i` draws from
//! its own generator seeded with `sub_seed(seed, i)`, so the result does not
//! depend on how replicates are scheduled across threads.

use std::collections::{BTreeMap, HashMap};
use std::fmt;
use std::str::FromStr;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::metrics::classification::{classification_metrics, ConfusionCounts, DEFAULT_F1_EPSILON};

pub const DEFAULT_ITERATIONS: usize = 10_000;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BootstrapMetric {
    Precision,
    Recall,
    F1,
    Accuracy,
    FalseAlarm,
}

impl BootstrapMetric {
    pub fn name(self) -> &'static str {
        match self {
            BootstrapMetric::Precision => "precision",
            BootstrapMetric::Recall => "recall",
            BootstrapMetric::F1 => "f1",
            BootstrapMetric::Accuracy => "accuracy",
            BootstrapMetric::FalseAlarm => "false_alarm",
        }
    }

    pub fn eval(self, counts: &ConfusionCounts) -> f64 {
        match classification_metrics(counts, DEFAULT_F1_EPSILON) {
            Ok(m) => match self {
                BootstrapMetric::Precision => m.precision,
                BootstrapMetric::Recall => m.recall,
                BootstrapMetric::F1 => m.f1,
                BootstrapMetric::Accuracy => m.accuracy,
                BootstrapMetric::FalseAlarm => m.false_alarm,
            },
            Err(_) => 0.0,
        }
    }
}

impl FromStr for BootstrapMetric {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Ok(match s {
            "precision" => BootstrapMetric::Precision,
            "recall" => BootstrapMetric::Recall,
            "f1" => BootstrapMetric::F1,
            "accuracy" => BootstrapMetric::Accuracy,
            "false_alarm" | "fa" => BootstrapMetric::FalseAlarm,
            other => return Err(Error::config(format!("unknown metric {other:?}"))),
        })
    }
}

impl fmt::Display for BootstrapMetric {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ResampleUnit {
    #[default]
    Event,
    Clip,
}

/// One system's decision on one event, with the gold label.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Outcome {
    pub id: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub clip_id: Option<String>,
    pub intervene: bool,
    pub gold: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BootstrapReport {
    pub metric_name: String,
    /// Metric(A) - metric(B) on the full sample.
    pub delta_observed: f64,
    /// Mean replicate delta.
    pub delta_mean: f64,
    pub ci_low: f64,
    pub ci_high: f64,
    pub p_value: f64,
    pub n_iterations: usize,
    pub seed: u64,
    pub n_events: usize,
    pub unit: ResampleUnit,
}

#[derive(Debug, Clone, Copy)]
struct Pair {
    a: bool,
    b: bool,
    gold: bool,
}

/// Matches `b` to `a` by id. The first id that cannot be matched (or whose
/// gold labels disagree) is reported.
fn pair_up(a: &[Outcome], b: &[Outcome]) -> Result<(Vec<Pair>, Vec<Option<String>>)> {
    let by_id: HashMap<&str, &Outcome> = b.iter().map(|o| (o.id.as_str(), o)).collect();
    if by_id.len() != b.len() {
        return Err(Error::Pairing("duplicate id in second outcome set".into()));
    }
    let mut pairs = Vec::with_capacity(a.len());
    let mut clips = Vec::with_capacity(a.len());
    for oa in a {
        let ob = by_id
            .get(oa.id.as_str())
            .ok_or_else(|| Error::Pairing(format!("id {:?} missing from second outcome set", oa.id)))?;
        if oa.gold != ob.gold {
            return Err(Error::Pairing(format!("gold labels disagree for id {:?}", oa.id)));
        }
        pairs.push(Pair { a: oa.intervene, b: ob.intervene, gold: oa.gold });
        clips.push(oa.clip_id.clone());
    }
    if a.len() != b.len() {
        let ids: std::collections::HashSet<&str> = a.iter().map(|o| o.id.as_str()).collect();
        let extra = b.iter().find(|o| !ids.contains(o.id.as_str())).map(|o| o.id.clone()).unwrap_or_default();
        return Err(Error::Pairing(format!("id {extra:?} missing from first outcome set")));
    }
    Ok((pairs, clips))
}

fn delta_on<I: Iterator<Item = usize>>(pairs: &[Pair], idx: I, metric: BootstrapMetric) -> f64 {
    let (mut ca, mut cb) = (ConfusionCounts::default(), ConfusionCounts::default());
    for i in idx {
        let p = pairs[i];
        ca.add(p.a, p.gold);
        cb.add(p.b, p.gold);
    }
    metric.eval(&ca) - metric.eval(&cb)
}

/// Seed of replicate `i` (SplitMix64 finaliser over seed and index).
pub fn sub_seed(seed: u64, i: u64) -> u64 {
    let mut z = seed ^ i.wrapping_add(1).wrapping_mul(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Linear-interpolated percentile of sorted data, `q` in `[0, 1]`.
pub fn percentile_sorted(sorted: &[f64], q: f64) -> f64 {
    let h = (sorted.len() - 1) as f64 * q;
    let lo = h.floor() as usize;
    let hi = (lo + 1).min(sorted.len() - 1);
    sorted[lo] + (h - lo as f64) * (sorted[hi] - sorted[lo])
}

pub fn bootstrap_compare(
    a: &[Outcome],
    b: &[Outcome],
    metric: BootstrapMetric,
    n_iterations: usize,
    seed: u64,
    unit: ResampleUnit,
) -> Result<BootstrapReport> {
    if n_iterations == 0 {
        return Err(Error::config("n_iterations must be >= 1"));
    }
    let (pairs, clips) = pair_up(a, b)?;
    if pairs.is_empty() {
        return Err(Error::domain("no paired events to compare"));
    }

    let groups: Vec<Vec<usize>> = match unit {
        ResampleUnit::Event => (0..pairs.len()).map(|i| vec![i]).collect(),
        ResampleUnit::Clip => {
            let mut by_clip: BTreeMap<String, Vec<usize>> = BTreeMap::new();
            for (i, c) in clips.iter().enumerate() {
                let c = c.as_ref().ok_or_else(|| {
                    Error::config("clip-level resampling requires a clip_id on every outcome")
                })?;
                by_clip.entry(c.clone()).or_default().push(i);
            }
            by_clip.into_values().collect()
        }
    };

    let delta_observed = delta_on(&pairs, 0..pairs.len(), metric);
    let mut deltas: Vec<f64> = (0..n_iterations as u64)
        .into_par_iter()
        .map(|i| {
            let mut rng = ChaCha8Rng::seed_from_u64(sub_seed(seed, i));
            let draws: Vec<usize> = (0..groups.len()).map(|_| rng.random_range(0..groups.len())).collect();
            delta_on(&pairs, draws.iter().flat_map(|&g| groups[g].iter().copied()), metric)
        })
        .collect();

    let delta_mean = deltas.iter().sum::<f64>() / deltas.len() as f64;
    let n = deltas.len() as f64;
    let le = deltas.iter().filter(|&&d| d <= 0.0).count() as f64 / n;
    let ge = deltas.iter().filter(|&&d| d >= 0.0).count() as f64 / n;
    deltas.sort_by(f64::total_cmp);

    Ok(BootstrapReport {
        metric_name: metric.name().to_string(),
        delta_observed,
        delta_mean,
        ci_low: percentile_sorted(&deltas, 0.025),
        ci_high: percentile_sorted(&deltas, 0.975),
        p_value: (2.0 * le.min(ge)).clamp(0.0, 1.0),
        n_iterations,
        seed,
        n_events: pairs.len(),
        unit,
    })
}
