//! The JSON report shared by every command.
//!
//! Field order is fixed by the struct layout and all maps are ordered, so a
//! report is byte-stable apart from `wall_time_s`.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};
use serde_json::Value;

/// Version of the report layout in `schema/report.schema.json`.
pub const REPORT_VERSION: &str = "1";

/// The published schema.
pub const REPORT_SCHEMA: &str = include_str!("../schema/report.schema.json");

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Norm {
    pub max: f64,
    pub l2: f64,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ConvergenceRow {
    pub h: f64,
    pub residual: f64,
    /// `log2` of the residual ratio to the previous (coarser) row.
    pub order: Option<f64>,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ScanRow {
    pub param: f64,
    pub residual: f64,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum BoundKind {
    /// Passes when `value ≤ bound`.
    AtMost,
    /// Passes when `value > bound`.
    Exceeds,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Check {
    pub name: String,
    pub value: f64,
    pub bound: f64,
    pub kind: BoundKind,
    pub pass: bool,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Tolerances {
    pub algebraic: f64,
    pub discrete: f64,
    pub solver: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Tolerances {
            algebraic: 1e-12,
            discrete: 1e-10,
            solver: 1e-7,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Report {
    pub version: String,
    pub command: Vec<String>,
    pub example: String,
    pub params: BTreeMap<String, Value>,
    pub grid: BTreeMap<String, Value>,
    pub residuals: BTreeMap<String, Norm>,
    pub convergence: Vec<ConvergenceRow>,
    pub scan: Vec<ScanRow>,
    pub coefficient_scan: Vec<ScanRow>,
    pub checks: Vec<Check>,
    pub pass: bool,
    pub tolerances: Tolerances,
    pub wall_time_s: f64,
}

impl Report {
    pub fn new(command: Vec<String>, example: &str, tolerances: Tolerances) -> Self {
        Report {
            version: REPORT_VERSION.to_string(),
            command,
            example: example.to_string(),
            params: BTreeMap::new(),
            grid: BTreeMap::new(),
            residuals: BTreeMap::new(),
            convergence: Vec::new(),
            scan: Vec::new(),
            coefficient_scan: Vec::new(),
            checks: Vec::new(),
            pass: true,
            tolerances,
            wall_time_s: 0.0,
        }
    }

    pub fn param(&mut self, key: &str, value: impl Serialize) {
        self.params.insert(
            key.to_string(),
            serde_json::to_value(value).expect("serializable"),
        );
    }

    pub fn grid(&mut self, key: &str, value: impl Serialize) {
        self.grid.insert(
            key.to_string(),
            serde_json::to_value(value).expect("serializable"),
        );
    }

    pub fn residual(&mut self, key: &str, max: f64, l2: f64) {
        self.residuals.insert(key.to_string(), Norm { max, l2 });
    }

    /// Records `value ≤ bound`.
    pub fn at_most(&mut self, name: &str, value: f64, bound: f64) {
        self.push_check(name, value, bound, BoundKind::AtMost, value <= bound);
    }

    /// Records `value > bound`.
    pub fn exceeds(&mut self, name: &str, value: f64, bound: f64) {
        self.push_check(name, value, bound, BoundKind::Exceeds, value > bound);
    }

    fn push_check(&mut self, name: &str, value: f64, bound: f64, kind: BoundKind, pass: bool) {
        self.pass &= pass;
        self.checks.push(Check {
            name: name.to_string(),
            value,
            bound,
            kind,
            pass,
        });
    }

    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("report serializes");
        s.push('\n');
        s
    }
}

/// Convergence table with `log2` ratios between consecutive rows.
pub fn convergence_table(rows: &[(f64, f64)]) -> Vec<ConvergenceRow> {
    rows.iter()
        .enumerate()
        .map(|(k, &(h, residual))| ConvergenceRow {
            h,
            residual,
            order: (k > 0).then(|| (rows[k - 1].1 / residual).log2()),
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn checks_drive_the_verdict() {
        let mut r = Report::new(vec![], "x", Tolerances::default());
        r.at_most("a", 1e-13, 1e-12);
        assert!(r.pass);
        r.exceeds("b", 1e-4, 1e-3);
        assert!(!r.pass);
        assert!(!r.checks[1].pass);
    }

    #[test]
    fn orders_from_ratios() {
        let t = convergence_table(&[(0.1, 4e-2), (0.05, 1e-2)]);
        assert_eq!(t[0].order, None);
        assert!((t[1].order.unwrap() - 2.0).abs() < 1e-12);
    }

    #[test]
    fn schema_is_valid_json_with_a_version() {
        let v: Value = serde_json::from_str(REPORT_SCHEMA).unwrap();
        assert_eq!(v["properties"]["version"]["const"], REPORT_VERSION);
    }
}
