use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};
use serde_json::Value;

/// Outcome of a sampled certificate. `Pass` only ever means "not falsified
/// at the samples that were examined".
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Verdict {
    Pass,
    Fail,
    Indeterminate,
}

/// One piece of numeric evidence: the point(s) examined and the scalar the
/// check computed there.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Evidence {
    pub label: String,
    pub points: Vec<Vec<f64>>,
    pub value: f64,
}

impl Evidence {
    pub fn at(label: impl Into<String>, point: &[f64], value: f64) -> Self {
        Evidence { label: label.into(), points: vec![point.to_vec()], value }
    }

    pub fn pair(label: impl Into<String>, x: &[f64], y: &[f64], value: f64) -> Self {
        Evidence { label: label.into(), points: vec![x.to_vec(), y.to_vec()], value }
    }
}

/// At most this many violation witnesses are kept per report.
pub const MAX_WITNESSES: usize = 16;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DiagnosticsReport {
    pub check: String,
    pub verdict: Verdict,
    pub parameters: BTreeMap<String, Value>,
    #[serde(default)]
    pub metrics: BTreeMap<String, f64>,
    #[serde(default)]
    pub notes: Vec<String>,
    pub evidence: Vec<Evidence>,
}

impl DiagnosticsReport {
    pub fn new(check: impl Into<String>) -> Self {
        DiagnosticsReport {
            check: check.into(),
            verdict: Verdict::Indeterminate,
            parameters: BTreeMap::new(),
            metrics: BTreeMap::new(),
            notes: Vec::new(),
            evidence: Vec::new(),
        }
    }

    pub fn param(mut self, key: &str, value: impl Into<Value>) -> Self {
        self.parameters.insert(key.to_string(), value.into());
        self
    }

    pub fn metric(&mut self, key: &str, value: f64) {
        self.metrics.insert(key.to_string(), value);
    }

    pub fn note(&mut self, note: impl Into<String>) {
        self.notes.push(note.into());
    }

    /// Record a witness, keeping at most [`MAX_WITNESSES`].
    pub fn witness(&mut self, evidence: Evidence) {
        let kept = self.evidence.iter().filter(|e| e.label.ends_with("violation")).count();
        if kept < MAX_WITNESSES {
            self.evidence.push(evidence);
        }
    }

    pub fn passed(&self) -> bool {
        self.verdict == Verdict::Pass
    }

    pub fn failed(&self) -> bool {
        self.verdict == Verdict::Fail
    }

    /// First violation witness, if any.
    pub fn first_witness(&self) -> Option<&Evidence> {
        self.evidence.iter().find(|e| e.label.ends_with("violation"))
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }
}
