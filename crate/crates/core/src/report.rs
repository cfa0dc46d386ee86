use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

/// Default verdict slack: `rhs - lhs >= -1e-8 (1 + |rhs|)`.
pub const VERDICT_REL_TOL: f64 = 1e-8;

pub fn verdict_tolerance(rhs: f64) -> f64 {
    VERDICT_REL_TOL * (1.0 + rhs.abs())
}

/// One evaluated inequality `lhs <= rhs`.
///
/// `verdict` is always `slack >= -tolerance`; constructors keep that in sync.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InequalityReport {
    pub name: String,
    pub lhs: f64,
    pub rhs: f64,
    pub slack: f64,
    pub tolerance: f64,
    pub verdict: bool,
    pub constants: BTreeMap<String, f64>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub notes: Vec<String>,
}

impl InequalityReport {
    pub fn new(name: impl Into<String>, lhs: f64, rhs: f64, tolerance: f64) -> Self {
        let slack = rhs - lhs;
        Self {
            name: name.into(),
            lhs,
            rhs,
            slack,
            tolerance,
            verdict: slack >= -tolerance,
            constants: BTreeMap::new(),
            notes: Vec::new(),
        }
    }

    /// Report with the default relative verdict tolerance.
    pub fn relative(name: impl Into<String>, lhs: f64, rhs: f64) -> Self {
        Self::new(name, lhs, rhs, verdict_tolerance(rhs))
    }

    pub fn with(mut self, key: &str, value: f64) -> Self {
        self.constants.insert(key.to_string(), value);
        self
    }

    pub fn with_note(mut self, note: impl Into<String>) -> Self {
        self.notes.push(note.into());
        self
    }

    /// Re-judges the verdict at a new tolerance.
    pub fn with_tolerance(mut self, tolerance: f64) -> Self {
        self.tolerance = tolerance;
        self.verdict = self.slack >= -tolerance;
        self
    }

    pub fn constant(&self, key: &str) -> Option<f64> {
        self.constants.get(key).copied()
    }

    pub fn to_json_line(&self) -> String {
        serde_json::to_string(self).expect("report serializes")
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn verdict_tracks_slack() {
        let ok = InequalityReport::new("x", 1.0, 1.0 - 1e-12, 1e-10);
        assert!(ok.verdict);
        let bad = InequalityReport::new("x", 1.0, 0.5, 1e-10);
        assert!(!bad.verdict);
        assert_eq!(bad.slack, -0.5);
    }

    #[test]
    fn json_shape() {
        let r = InequalityReport::relative("demo", 1.0, 2.0).with("nu", 1.5);
        let v: serde_json::Value = serde_json::from_str(&r.to_json_line()).unwrap();
        for key in ["name", "lhs", "rhs", "slack", "tolerance", "verdict", "constants"] {
            assert!(v.get(key).is_some(), "missing {key}");
        }
        assert!(v.get("notes").is_none());
        assert_eq!(v["constants"]["nu"], 1.5);
    }
}
