use std::collections::BTreeMap;
use std::fs;
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::time::{SystemTime, UNIX_EPOCH};

use intervene_core::{MetricsReport, Result};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

pub const TOOL_VERSION: &str = env!("CARGO_PKG_VERSION");
pub const MANIFEST_FILE: &str = "manifest.json";

/// Provenance of one command run.
///
/// `config_digest` covers the resolved configuration together with the
/// digests of every input file, so equal digests mean equal inputs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub command: String,
    pub config_digest: String,
    pub seed: u64,
    pub tool_version: String,
    pub started_at: u64,
    pub finished_at: u64,
    pub inputs: BTreeMap<String, String>,
    pub outputs: Vec<String>,
    pub config: serde_json::Value,
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

pub fn file_digest(path: &Path) -> Result<String> {
    Ok(sha256_hex(&fs::read(path)?))
}

/// Unix seconds, or `SOURCE_DATE_EPOCH` when set so manifests can be
/// reproduced byte for byte.
pub fn now() -> u64 {
    if let Some(t) = std::env::var("SOURCE_DATE_EPOCH").ok().and_then(|v| v.trim().parse().ok()) {
        return t;
    }
    SystemTime::now().duration_since(UNIX_EPOCH).map(|d| d.as_secs()).unwrap_or(0)
}

/// Accumulates what a command read and wrote, then seals it into a manifest.
pub struct Run {
    command: String,
    started_at: u64,
    inputs: BTreeMap<String, String>,
    outputs: Vec<String>,
    out_dir: PathBuf,
}

impl Run {
    pub fn start(command: &str, out_dir: &Path) -> Result<Self> {
        fs::create_dir_all(out_dir)?;
        Ok(Self {
            command: command.into(),
            started_at: now(),
            inputs: BTreeMap::new(),
            outputs: Vec::new(),
            out_dir: out_dir.to_path_buf(),
        })
    }

    /// Records an input under a logical role (`trace`, `gold`, ...).
    pub fn input(&mut self, role: &str, path: &Path) -> Result<()> {
        self.inputs.insert(role.into(), file_digest(path)?);
        Ok(())
    }

    pub fn path(&mut self, name: &str) -> PathBuf {
        self.outputs.push(name.into());
        self.out_dir.join(name)
    }

    pub fn json<T: Serialize>(&mut self, name: &str, value: &T) -> Result<()> {
        let p = self.path(name);
        write_json(&p, value)
    }

    pub fn text(&mut self, name: &str, body: &str) -> Result<()> {
        let p = self.path(name);
        fs::write(p, body)?;
        Ok(())
    }

    pub fn finish<C: Serialize>(self, config: &C, seed: u64) -> Result<RunManifest> {
        let config = serde_json::to_value(config).map_err(io::Error::from)?;
        let keyed = serde_json::json!({ "config": config, "inputs": self.inputs });
        // serde_json maps are ordered, so the encoding is canonical
        let digest = sha256_hex(serde_json::to_string(&keyed).map_err(io::Error::from)?.as_bytes());
        let mut outputs = self.outputs;
        outputs.sort();
        let m = RunManifest {
            command: self.command,
            config_digest: digest,
            seed,
            tool_version: TOOL_VERSION.into(),
            started_at: self.started_at,
            finished_at: now(),
            inputs: self.inputs,
            outputs,
            config,
        };
        write_json(&self.out_dir.join(MANIFEST_FILE), &m)?;
        Ok(m)
    }
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let mut w = BufWriter::new(fs::File::create(path)?);
    serde_json::to_writer_pretty(&mut w, value).map_err(io::Error::from)?;
    w.write_all(b"\n")?;
    w.flush()?;
    Ok(())
}

/// Writes rows as CSV with a header.
pub fn write_csv<S: Serialize>(path: &Path, rows: &[S]) -> Result<()> {
    let mut w = csv::Writer::from_path(path).map_err(csv_err)?;
    for r in rows {
        w.serialize(r).map_err(csv_err)?;
    }
    w.flush()?;
    Ok(())
}

fn csv_err(e: csv::Error) -> intervene_core::Error {
    match e.into_kind() {
        csv::ErrorKind::Io(e) => e.into(),
        other => io::Error::other(format!("{other:?}")).into(),
    }
}

/// Left-aligned first column, right-aligned numbers.
pub fn render_table(headers: &[&str], rows: &[Vec<String>]) -> String {
    let mut widths: Vec<usize> = headers.iter().map(|h| h.len()).collect();
    for r in rows {
        for (w, c) in widths.iter_mut().zip(r) {
            *w = (*w).max(c.len());
        }
    }
    let line = |cells: Vec<&str>| {
        cells
            .iter()
            .zip(&widths)
            .enumerate()
            .map(|(i, (c, w))| if i == 0 { format!("{c:<w$}") } else { format!("{c:>w$}") })
            .collect::<Vec<_>>()
            .join("  ")
    };
    let mut out = line(headers.to_vec());
    out.push('\n');
    out.push_str(&widths.iter().map(|w| "-".repeat(*w)).collect::<Vec<_>>().join("  "));
    out.push('\n');
    for r in rows {
        out.push_str(&line(r.iter().map(String::as_str).collect()));
        out.push('\n');
    }
    out
}

pub const METRIC_HEADERS: [&str; 5] = ["Recall", "Precision", "Accuracy", "False-Alarm", "F1"];

pub fn pct(x: f64) -> String {
    format!("{:.2}", 100.0 * x)
}

/// The five detection columns as percentages.
pub fn metric_cells(r: &MetricsReport) -> Vec<String> {
    [r.recall, r.precision, r.accuracy, r.false_alarm, r.f1].into_iter().map(pct).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn table_columns_line_up() {
        let t = render_table(&["name", "F1"], &[vec!["gate".into(), "86.61".into()], vec!["x".into(), "1.00".into()]]);
        let lines: Vec<&str> = t.lines().collect();
        assert_eq!(lines.len(), 4);
        assert!(lines.iter().all(|l| l.len() == lines[0].len()));
        assert!(lines[2].ends_with("86.61"));
    }

    #[test]
    fn digest_is_hex_sha256() {
        assert_eq!(sha256_hex(b"abc"), "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad");
    }
}
