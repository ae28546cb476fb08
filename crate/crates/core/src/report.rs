//! Machine-readable verification reports: a versioned JSON bundle with one
//! pass/fail entry per enabled check, plus CSV tables for singular-value
//! spectra and convergence sweeps.
//!
//! Bundles are byte-deterministic for a fixed scenario + seed: entries are
//! plain ordered structs (no maps), floats serialize via the shortest
//! round-trip representation, and nothing records wall-clock time or paths.

use serde::{Deserialize, Serialize};
use std::path::Path;

/// Bumped whenever the JSON layout changes shape.
pub const SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CheckEntry {
    /// Stable identifier, e.g. `state.positivity`.
    pub id: String,
    /// What the check asserts, in domain terms.
    pub label: String,
    /// Measured value (residual, exponent, condition number, …).
    pub value: f64,
    /// Threshold the value was compared against; `None` for informational
    /// entries, which always pass.
    pub threshold: Option<f64>,
    pub pass: bool,
    /// Auxiliary measurements, in fixed order.
    pub details: Vec<(String, f64)>,
}

impl CheckEntry {
    /// A `value ≤ threshold` check.
    pub fn bounded(id: &str, label: &str, value: f64, threshold: f64) -> Self {
        Self {
            id: id.into(),
            label: label.into(),
            value,
            threshold: Some(threshold),
            pass: value <= threshold,
            details: Vec::new(),
        }
    }

    /// A boolean check with a representative value attached.
    pub fn flag(id: &str, label: &str, value: f64, pass: bool) -> Self {
        Self {
            id: id.into(),
            label: label.into(),
            value,
            threshold: None,
            pass,
            details: Vec::new(),
        }
    }

    /// An informational entry (always passes).
    pub fn info(id: &str, label: &str, value: f64) -> Self {
        Self {
            id: id.into(),
            label: label.into(),
            value,
            threshold: None,
            pass: true,
            details: Vec::new(),
        }
    }

    pub fn with_detail(mut self, key: &str, value: f64) -> Self {
        self.details.push((key.into(), value));
        self
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ReportBundle {
    pub schema_version: u32,
    pub scenario: String,
    pub seed: u64,
    pub entries: Vec<CheckEntry>,
}

impl ReportBundle {
    pub fn new(scenario: &str, seed: u64) -> Self {
        Self {
            schema_version: SCHEMA_VERSION,
            scenario: scenario.into(),
            seed,
            entries: Vec::new(),
        }
    }

    pub fn push(&mut self, entry: CheckEntry) {
        self.entries.push(entry);
    }

    pub fn extend(&mut self, entries: impl IntoIterator<Item = CheckEntry>) {
        self.entries.extend(entries);
    }

    pub fn all_pass(&self) -> bool {
        self.entries.iter().all(|e| e.pass)
    }

    /// Canonical serialization (pretty JSON + trailing newline).
    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("report serializes");
        s.push('\n');
        s
    }

    pub fn from_json(s: &str) -> Result<Self, serde_json::Error> {
        serde_json::from_str(s)
    }

    pub fn write_json(&self, path: &Path) -> std::io::Result<()> {
        std::fs::write(path, self.to_json())
    }

    /// One line per entry, `PASS`/`FAIL` first for easy grepping.
    pub fn summary(&self) -> String {
        let mut out = String::new();
        for e in &self.entries {
            let status = if e.pass { "PASS" } else { "FAIL" };
            let thr = match e.threshold {
                Some(t) => format!(" (threshold {t:.3e})"),
                None => String::new(),
            };
            out.push_str(&format!(
                "{status} {} = {:.6e}{thr} — {}\n",
                e.id, e.value, e.label
            ));
        }
        out
    }
}

/// Write a numeric CSV table with a header row.
pub fn write_csv(path: &Path, header: &[&str], rows: &[Vec<f64>]) -> anyhow::Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    w.write_record(header)?;
    for row in rows {
        w.write_record(row.iter().map(|v| format!("{v:.16e}")))?;
    }
    w.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn bundle_round_trips_and_is_deterministic() {
        let mut b = ReportBundle::new("demo", 7);
        b.push(CheckEntry::bounded("a.b", "bounded residual", 1e-9, 1e-8));
        b.push(CheckEntry::flag("c.d", "boolean check", 0.5, false).with_detail("extra", 2.0));
        b.push(CheckEntry::info("e.f", "informational", 0.1));
        assert!(!b.all_pass());
        let s1 = b.to_json();
        let round = ReportBundle::from_json(&s1).unwrap();
        assert_eq!(s1, round.to_json());
        assert!(b.summary().contains("FAIL c.d"));
        assert!(b.summary().contains("PASS a.b"));
    }

    #[test]
    fn csv_writer_emits_exact_rows() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("t.csv");
        write_csv(&path, &["x", "y"], &[vec![1.0, 2.0], vec![3.0, 4.5]]).unwrap();
        let text = std::fs::read_to_string(&path).unwrap();
        assert!(text.starts_with("x,y\n"));
        assert_eq!(text.lines().count(), 3);
    }
}
