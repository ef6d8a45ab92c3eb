//! Decision-consistent curation of teacher traces.
//!
//! Each trace is scored
//! `y_accept - (q_need - y_need)^2 - [y_need_pred = 1] (q_accept - y_accept)^2`,
//! traces are ranked by score (ties by ascending id) and the top of the
//! ranking is written out as supervision data.

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::trace::write_jsonl;
use crate::types::check_unit;

/// Binary labels serialised as 0/1; booleans are accepted on input.
mod binary {
    use serde::de::{self, Deserializer, Visitor};
    use serde::Serializer;
    use std::fmt;

    pub fn serialize<S: Serializer>(v: &bool, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_u8(*v as u8)
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<bool, D::Error> {
        struct V;
        impl Visitor<'_> for V {
            type Value = bool;
            fn expecting(&self, f: &mut fmt::Formatter) -> fmt::Result {
                f.write_str("0, 1, true or false")
            }
            fn visit_bool<E: de::Error>(self, v: bool) -> Result<bool, E> {
                Ok(v)
            }
            fn visit_u64<E: de::Error>(self, v: u64) -> Result<bool, E> {
                match v {
                    0 => Ok(false),
                    1 => Ok(true),
                    _ => Err(E::custom(format!("label must be 0 or 1, got {v}"))),
                }
            }
            fn visit_i64<E: de::Error>(self, v: i64) -> Result<bool, E> {
                if v < 0 {
                    return Err(E::custom(format!("label must be 0 or 1, got {v}")));
                }
                self.visit_u64(v as u64)
            }
        }
        d.deserialize_any(V)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TeacherTrace {
    pub id: String,
    pub q_need: f64,
    pub q_accept: f64,
    #[serde(with = "binary")]
    pub y_need: bool,
    #[serde(with = "binary")]
    pub y_accept: bool,
    #[serde(with = "binary")]
    pub y_need_pred: bool,
    /// Structured teacher output, copied through verbatim.
    #[serde(default)]
    pub payload: String,
}

impl TeacherTrace {
    pub fn validate(&self) -> Result<()> {
        check_unit("q_need", self.q_need)?;
        check_unit("q_accept", self.q_accept)
    }
}

/// Convenience rule `q_need >= 0.5`. Never applied implicitly.
pub fn derive_need_pred(q_need: f64) -> bool {
    q_need >= 0.5
}

#[derive(Debug, Clone, Copy, PartialEq, PartialOrd, Serialize, Deserialize)]
#[serde(transparent)]
pub struct RdcScore(pub f64);

impl RdcScore {
    pub const MIN: f64 = -2.0;
    pub const MAX: f64 = 1.0;

    pub fn value(self) -> f64 {
        self.0
    }
}

fn indicator(b: bool) -> f64 {
    if b {
        1.0
    } else {
        0.0
    }
}

pub fn rdc_score(t: &TeacherTrace) -> RdcScore {
    let need_err = t.q_need - indicator(t.y_need);
    let accept_err = t.q_accept - indicator(t.y_accept);
    let accept_penalty = if t.y_need_pred { accept_err * accept_err } else { 0.0 };
    RdcScore(indicator(t.y_accept) - need_err * need_err - accept_penalty)
}

/// How much of the ranked population to keep.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Budget {
    Count(usize),
    Fraction(f64),
}

impl Budget {
    /// Number of traces retained from a population of `n`. Fractions round
    /// up, with a small allowance for representation error.
    pub fn resolve(&self, n: usize) -> Result<usize> {
        match *self {
            Budget::Count(k) if k > n => {
                Err(Error::config(format!("budget {k} exceeds population of {n} traces")))
            }
            Budget::Count(k) => Ok(k),
            Budget::Fraction(f) if !(f > 0.0 && f <= 1.0) => {
                Err(Error::config(format!("budget fraction must lie in (0, 1], got {f}")))
            }
            Budget::Fraction(f) => Ok((((f * n as f64) - 1e-9).ceil().max(0.0) as usize).min(n)),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScoredTrace {
    pub trace: TeacherTrace,
    pub score: RdcScore,
}

/// Every trace with its score, best first; equal scores ordered by id.
pub fn rank(traces: &[TeacherTrace]) -> Result<Vec<ScoredTrace>> {
    for t in traces {
        t.validate().map_err(|e| Error::domain(format!("trace {}: {e}", t.id)))?;
    }
    let mut scored: Vec<ScoredTrace> =
        traces.iter().map(|t| ScoredTrace { score: rdc_score(t), trace: t.clone() }).collect();
    scored.sort_by(|a, b| b.score.0.total_cmp(&a.score.0).then_with(|| a.trace.id.cmp(&b.trace.id)));
    Ok(scored)
}

pub fn rank_and_filter(traces: &[TeacherTrace], budget: Budget) -> Result<Vec<ScoredTrace>> {
    let positive = match budget {
        Budget::Count(k) => k > 0,
        Budget::Fraction(_) => true,
    };
    if traces.is_empty() && positive {
        return Err(Error::domain("no traces to curate"));
    }
    let keep = budget.resolve(traces.len())?;
    let mut ranked = rank(traces)?;
    ranked.truncate(keep);
    Ok(ranked)
}

/// One line of the curated supervision file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CuratedRecord {
    pub id: String,
    pub payload: String,
    pub q_need: f64,
    pub q_accept: f64,
    #[serde(with = "binary")]
    pub y_need: bool,
    #[serde(with = "binary")]
    pub y_accept: bool,
    pub score: f64,
}

impl From<&ScoredTrace> for CuratedRecord {
    fn from(s: &ScoredTrace) -> Self {
        Self {
            id: s.trace.id.clone(),
            payload: s.trace.payload.clone(),
            q_need: s.trace.q_need,
            q_accept: s.trace.q_accept,
            y_need: s.trace.y_need,
            y_accept: s.trace.y_accept,
            score: s.score.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CurationManifest {
    pub count: usize,
    pub population: usize,
    pub budget: Budget,
    pub score_min: f64,
    pub score_max: f64,
    pub score_mean: f64,
    pub data_file: String,
}

/// `curated.jsonl` -> `curated.manifest.json`.
pub fn manifest_path(data_path: &Path) -> PathBuf {
    let stem = data_path.file_stem().and_then(|s| s.to_str()).unwrap_or("curated");
    data_path.with_file_name(format!("{stem}.manifest.json"))
}

/// Writes the curated JSON Lines file and its manifest next to it.
pub fn emit_dataset(
    curated: &[ScoredTrace],
    population: usize,
    budget: Budget,
    destination: &Path,
) -> Result<CurationManifest> {
    if curated.is_empty() {
        return Err(Error::domain("curated set is empty"));
    }
    let rows: Vec<CuratedRecord> = curated.iter().map(CuratedRecord::from).collect();
    write_jsonl(destination, &rows)?;

    let scores = rows.iter().map(|r| r.score);
    let manifest = CurationManifest {
        count: rows.len(),
        population,
        budget,
        score_min: scores.clone().fold(f64::INFINITY, f64::min),
        score_max: scores.clone().fold(f64::NEG_INFINITY, f64::max),
        score_mean: scores.sum::<f64>() / rows.len() as f64,
        data_file: destination.file_name().and_then(|s| s.to_str()).unwrap_or_default().to_string(),
    };
    let mut w = BufWriter::new(File::create(manifest_path(destination))?);
    serde_json::to_writer_pretty(&mut w, &manifest).map_err(std::io::Error::from)?;
    w.write_all(b"\n")?;
    w.flush()?;
    Ok(manifest)
}
