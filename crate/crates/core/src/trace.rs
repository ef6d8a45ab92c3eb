//! Event traces: the JSON Lines record format and its validation.
//!
//! One [`EventRecord`] per line, UTF-8, snake_case field names. Fields the
//! record does not know about are kept in [`EventRecord::extra`] and written
//! back unchanged.

use std::collections::{HashMap, HashSet};
use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Read, Write};
use std::path::Path;

use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::types::{gold_label, ProbPair};

/// One timestep of an event stream.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EventRecord {
    pub id: String,
    pub clip_id: String,
    pub step: u64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub domain_tag: Option<String>,
    pub fast: ProbPair,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub slow: Option<ProbPair>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub y_need: Option<u8>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub y_accept: Option<u8>,
    #[serde(default)]
    pub n_candidates: u32,
    #[serde(default)]
    pub tokens_fast: u64,
    #[serde(default)]
    pub tokens_slow: u64,
    #[serde(default)]
    pub latency_fast_ms: f64,
    #[serde(default)]
    pub latency_slow_ms: f64,
    /// Raw event context, carried but never interpreted.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub payload: Option<String>,
    #[serde(flatten)]
    pub extra: serde_json::Map<String, serde_json::Value>,
}

impl EventRecord {
    /// Minimal record with only the fast estimates set.
    pub fn new(id: impl Into<String>, clip_id: impl Into<String>, step: u64, fast: ProbPair) -> Self {
        Self {
            id: id.into(),
            clip_id: clip_id.into(),
            step,
            domain_tag: None,
            fast,
            slow: None,
            y_need: None,
            y_accept: None,
            n_candidates: 1,
            tokens_fast: 0,
            tokens_slow: 0,
            latency_fast_ms: 0.0,
            latency_slow_ms: 0.0,
            payload: None,
            extra: serde_json::Map::new(),
        }
    }

    pub fn with_labels(mut self, y_need: bool, y_accept: bool) -> Self {
        self.y_need = Some(y_need as u8);
        self.y_accept = Some(y_accept as u8);
        self
    }

    pub fn need_label(&self) -> Result<Option<bool>> {
        binary_label(&self.id, "y_need", self.y_need)
    }

    pub fn accept_label(&self) -> Result<Option<bool>> {
        binary_label(&self.id, "y_accept", self.y_accept)
    }

    /// Gold label `y_need AND y_accept`.
    pub fn gold(&self) -> Result<bool> {
        gold_label(self.need_label()?, self.accept_label()?).map_err(|e| match e {
            Error::MissingLabel(which) => Error::MissingLabel(format!("{which} on record {}", self.id)),
            other => other,
        })
    }

    pub fn is_labeled(&self) -> bool {
        self.y_need.is_some() && self.y_accept.is_some()
    }
}

fn binary_label(id: &str, name: &str, v: Option<u8>) -> Result<Option<bool>> {
    match v {
        None => Ok(None),
        Some(0) => Ok(Some(false)),
        Some(1) => Ok(Some(true)),
        Some(other) => Err(Error::domain(format!("{name} on record {id} must be 0 or 1, got {other}"))),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ViolationKind {
    EmptyId,
    DuplicateId,
    DuplicateKey,
    StepDecreasing,
    ProbabilityOutOfRange,
    LabelNotBinary,
    InvalidCost,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Violation {
    pub record_id: String,
    /// Zero-based position of the record in the trace.
    pub index: usize,
    pub kind: ViolationKind,
    pub message: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ValidationReport {
    pub ok: bool,
    pub records: usize,
    pub violations: Vec<Violation>,
}

/// Checks every record invariant and reports all breaches, in trace order.
pub fn validate_trace(records: &[EventRecord]) -> ValidationReport {
    let mut violations = Vec::new();
    let mut seen_ids: HashSet<&str> = HashSet::new();
    let mut seen_keys: HashSet<(&str, u64)> = HashSet::new();
    let mut last_step: HashMap<&str, u64> = HashMap::new();

    for (index, r) in records.iter().enumerate() {
        let mut push = |kind, message: String| {
            violations.push(Violation { record_id: r.id.clone(), index, kind, message })
        };

        if r.id.is_empty() {
            push(ViolationKind::EmptyId, "record id is empty".into());
        } else if !seen_ids.insert(r.id.as_str()) {
            push(ViolationKind::DuplicateId, format!("id {:?} appears more than once", r.id));
        }

        if !seen_keys.insert((r.clip_id.as_str(), r.step)) {
            push(
                ViolationKind::DuplicateKey,
                format!("(clip_id, step) = ({:?}, {}) is not unique", r.clip_id, r.step),
            );
        }
        match last_step.get(r.clip_id.as_str()) {
            Some(&prev) if r.step < prev => push(
                ViolationKind::StepDecreasing,
                format!("step {} follows step {} in clip {:?}", r.step, prev, r.clip_id),
            ),
            _ => {}
        }
        let entry = last_step.entry(r.clip_id.as_str()).or_insert(r.step);
        *entry = (*entry).max(r.step);

        let mut probs = vec![("fast.p_need", r.fast.p_need), ("fast.p_accept", r.fast.p_accept)];
        if let Some(slow) = &r.slow {
            probs.push(("slow.p_need", slow.p_need));
            probs.push(("slow.p_accept", slow.p_accept));
        }
        for (name, v) in probs {
            if !(0.0..=1.0).contains(&v) {
                push(ViolationKind::ProbabilityOutOfRange, format!("{name} = {v} outside [0, 1]"));
            }
        }

        for (name, v) in [("y_need", r.y_need), ("y_accept", r.y_accept)] {
            if let Some(v) = v {
                if v > 1 {
                    push(ViolationKind::LabelNotBinary, format!("{name} = {v} is not 0 or 1"));
                }
            }
        }

        for (name, v) in [("latency_fast_ms", r.latency_fast_ms), ("latency_slow_ms", r.latency_slow_ms)] {
            if !(v.is_finite() && v >= 0.0) {
                push(ViolationKind::InvalidCost, format!("{name} = {v} must be finite and >= 0"));
            }
        }
    }

    ValidationReport { ok: violations.is_empty(), records: records.len(), violations }
}

/// Parses JSON Lines from a reader. Blank lines are skipped.
pub fn parse_jsonl<T: DeserializeOwned, R: Read>(reader: R) -> Result<Vec<T>> {
    let mut out = Vec::new();
    for (i, line) in BufReader::new(reader).lines().enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let value = serde_json::from_str(&line)
            .map_err(|e| Error::Parse { line: i + 1, message: e.to_string() })?;
        out.push(value);
    }
    Ok(out)
}

pub fn read_jsonl<T: DeserializeOwned>(path: impl AsRef<Path>) -> Result<Vec<T>> {
    parse_jsonl(File::open(path)?)
}

pub fn write_jsonl<T: Serialize>(path: impl AsRef<Path>, rows: &[T]) -> Result<()> {
    let mut w = BufWriter::new(File::create(path)?);
    for row in rows {
        serde_json::to_writer(&mut w, row).map_err(std::io::Error::from)?;
        w.write_all(b"\n")?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_trace(path: impl AsRef<Path>) -> Result<Vec<EventRecord>> {
    read_jsonl(path)
}

pub fn write_trace(path: impl AsRef<Path>, records: &[EventRecord]) -> Result<()> {
    write_jsonl(path, records)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn rec(id: &str, clip: &str, step: u64) -> EventRecord {
        EventRecord::new(id, clip, step, ProbPair::new(0.5, 0.5).unwrap())
    }

    #[test]
    fn empty_trace_is_ok() {
        let r = validate_trace(&[]);
        assert!(r.ok);
        assert!(r.violations.is_empty());
    }

    #[test]
    fn out_of_range_probability_cites_record() {
        let mut r = rec("e1", "c", 0);
        r.fast.p_need = 1.2;
        let report = validate_trace(&[r]);
        assert!(!report.ok);
        assert_eq!(report.violations.len(), 1);
        assert_eq!(report.violations[0].record_id, "e1");
        assert_eq!(report.violations[0].kind, ViolationKind::ProbabilityOutOfRange);
    }

    #[test]
    fn duplicate_clip_step_is_one_violation() {
        let report = validate_trace(&[rec("a", "c", 3), rec("b", "c", 3)]);
        assert_eq!(report.violations.len(), 1);
        assert_eq!(report.violations[0].kind, ViolationKind::DuplicateKey);
        assert_eq!(report.violations[0].record_id, "b");
    }

    #[test]
    fn decreasing_step_and_bad_label() {
        let mut b = rec("b", "c", 1);
        b.y_need = Some(2);
        let report = validate_trace(&[rec("a", "c", 5), b, rec("z", "other", 0)]);
        let kinds: Vec<_> = report.violations.iter().map(|v| v.kind).collect();
        assert_eq!(kinds, vec![ViolationKind::StepDecreasing, ViolationKind::LabelNotBinary]);
    }

    #[test]
    fn validation_is_idempotent() {
        let mut bad = rec("a", "c", 0);
        bad.fast.p_accept = -0.1;
        let trace = vec![bad, rec("a", "c", 0)];
        assert_eq!(validate_trace(&trace), validate_trace(&trace));
    }

    #[test]
    fn unknown_fields_round_trip() {
        let line = r#"{"id":"e1","clip_id":"c1","step":0,"fast":{"p_need":0.2,"p_accept":0.9},"n_candidates":1,"vendor_note":{"k":[1,2]}}"#;
        let recs: Vec<EventRecord> = parse_jsonl(line.as_bytes()).unwrap();
        assert_eq!(recs[0].extra["vendor_note"]["k"][1], 2);
        let out = serde_json::to_string(&recs[0]).unwrap();
        let back: EventRecord = serde_json::from_str(&out).unwrap();
        assert_eq!(back, recs[0]);
    }

    #[test]
    fn parse_error_reports_line() {
        let text = "\n{\"id\":\"x\"}\n";
        match parse_jsonl::<EventRecord, _>(text.as_bytes()) {
            Err(Error::Parse { line, .. }) => assert_eq!(line, 2),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn missing_file_is_io_error() {
        let err = read_trace("/nonexistent/trace.jsonl").unwrap_err();
        assert!(err.is_io());
    }

    #[test]
    fn gold_requires_both_labels() {
        let r = rec("a", "c", 0);
        assert!(matches!(r.gold(), Err(Error::MissingLabel(_))));
        assert!(r.clone().with_labels(true, true).gold().unwrap());
    }
}
