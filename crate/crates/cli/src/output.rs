//! `results.csv` rows and the `summary.json` document.

use std::collections::BTreeMap;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::CliError;

pub const CSV_HEADER: [&str; 8] = ["experiment", "flow", "t", "epsilon", "delta", "count", "slope", "verdict"];

/// One line of `results.csv`. `experiment` is the experiment id, optionally
/// followed by `.series` to tell tables of one run apart.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ResultRow {
    pub experiment: String,
    pub flow: String,
    pub t: f64,
    pub epsilon: f64,
    pub delta: Option<f64>,
    pub count: u64,
    pub slope: Option<f64>,
    /// `pass:<inequality>` or `fail:<inequality>`.
    pub verdict: Option<String>,
}

impl ResultRow {
    pub fn count(experiment: &str, series: &str, flow: &str, t: f64, epsilon: f64, count: usize) -> Self {
        ResultRow {
            experiment: format!("{experiment}.{series}"),
            flow: flow.into(),
            t,
            epsilon,
            delta: None,
            count: count as u64,
            slope: None,
            verdict: None,
        }
    }

    pub fn with_delta(mut self, delta: f64) -> Self {
        self.delta = Some(delta);
        self
    }

    pub fn with_slope(mut self, slope: f64) -> Self {
        self.slope = Some(slope);
        self
    }

    pub fn with_verdict(mut self, passed: bool, inequality: &str) -> Self {
        self.verdict = Some(format!("{}:{inequality}", if passed { "pass" } else { "fail" }));
        self
    }

    pub fn is_finite(&self) -> bool {
        self.t.is_finite()
            && self.epsilon.is_finite()
            && self.delta.is_none_or(f64::is_finite)
            && self.slope.is_none_or(f64::is_finite)
    }
}

/// A named inequality with its verdict.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Check {
    pub name: String,
    pub value: f64,
    pub bound: f64,
    pub passed: bool,
}

impl Check {
    /// `value ≤ bound`.
    pub fn at_most(name: impl Into<String>, value: f64, bound: f64) -> Self {
        Check {
            name: name.into(),
            value,
            bound,
            passed: value <= bound,
        }
    }

    /// `value ≥ bound`.
    pub fn at_least(name: impl Into<String>, value: f64, bound: f64) -> Self {
        Check {
            name: name.into(),
            value,
            bound,
            passed: value >= bound,
        }
    }

    /// `value > bound`.
    pub fn above(name: impl Into<String>, value: f64, bound: f64) -> Self {
        Check {
            name: name.into(),
            value,
            bound,
            passed: value > bound,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ExperimentSummary {
    pub experiment: String,
    pub verdict: bool,
    pub checks: Vec<Check>,
    pub estimates: BTreeMap<String, f64>,
    pub notes: Vec<String>,
}

impl ExperimentSummary {
    pub fn new(experiment: &str) -> Self {
        ExperimentSummary {
            experiment: experiment.into(),
            verdict: true,
            checks: Vec::new(),
            estimates: BTreeMap::new(),
            notes: Vec::new(),
        }
    }

    pub fn check(&mut self, c: Check) {
        self.verdict &= c.passed;
        self.checks.push(c);
    }

    pub fn estimate(&mut self, key: impl Into<String>, value: f64) {
        self.estimates.insert(key.into(), value);
    }

    pub fn check_named(&self, name: &str) -> Option<&Check> {
        self.checks.iter().find(|c| c.name == name)
    }
}

pub const SCHEMA_VERSION: u32 = 1;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Summary {
    pub schema_version: u32,
    pub seed: u64,
    pub all_passed: bool,
    pub experiments: Vec<ExperimentSummary>,
}

impl Summary {
    pub fn new(seed: u64, experiments: Vec<ExperimentSummary>) -> Self {
        Summary {
            schema_version: SCHEMA_VERSION,
            seed,
            all_passed: experiments.iter().all(|e| e.verdict),
            experiments,
        }
    }
}

fn fmt_opt(x: Option<f64>) -> String {
    x.map(|v| v.to_string()).unwrap_or_default()
}

/// CSV text with the fixed header.
pub fn csv_string(rows: &[ResultRow]) -> Result<String, CliError> {
    let mut w = csv::Writer::from_writer(Vec::new());
    let io = |e: csv::Error| CliError::Io(std::io::Error::other(e));
    w.write_record(CSV_HEADER).map_err(io)?;
    for r in rows {
        if !r.is_finite() {
            return Err(CliError::Infeasible(rescal_core::Error::InsufficientData(format!(
                "non-finite value in result row {r:?}"
            ))));
        }
        w.write_record([
            r.experiment.clone(),
            r.flow.clone(),
            r.t.to_string(),
            r.epsilon.to_string(),
            fmt_opt(r.delta),
            r.count.to_string(),
            fmt_opt(r.slope),
            r.verdict.clone().unwrap_or_default(),
        ])
        .map_err(io)?;
    }
    let bytes = w.into_inner().map_err(|e| CliError::Io(std::io::Error::other(e.to_string())))?;
    Ok(String::from_utf8(bytes).expect("csv output is utf-8"))
}

pub fn summary_string(summary: &Summary) -> Result<String, CliError> {
    let mut s = serde_json::to_string_pretty(summary).map_err(|e| CliError::Io(std::io::Error::other(e)))?;
    s.push('\n');
    Ok(s)
}

/// Write `results.csv` and `summary.json` into `dir`.
pub fn write_outputs(dir: &Path, rows: &[ResultRow], summary: &Summary) -> Result<(), CliError> {
    std::fs::create_dir_all(dir)?;
    std::fs::write(dir.join("results.csv"), csv_string(rows)?)?;
    std::fs::write(dir.join("summary.json"), summary_string(summary)?)?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn header_and_optional_fields() {
        let rows = vec![
            ResultRow::count("E", "s", "F", 1.0, 0.5, 3),
            ResultRow::count("E", "s", "F", 2.0, 0.5, 4).with_delta(0.1).with_slope(0.25).with_verdict(true, "a<=b"),
        ];
        let s = csv_string(&rows).unwrap();
        let lines: Vec<&str> = s.lines().collect();
        assert_eq!(lines[0], "experiment,flow,t,epsilon,delta,count,slope,verdict");
        assert_eq!(lines[1], "E.s,F,1,0.5,,3,,");
        assert_eq!(lines[2], "E.s,F,2,0.5,0.1,4,0.25,pass:a<=b");
    }

    #[test]
    fn non_finite_rows_are_rejected() {
        let rows = vec![ResultRow::count("E", "s", "F", f64::NAN, 0.5, 3)];
        assert!(csv_string(&rows).is_err());
    }

    #[test]
    fn summary_verdict_aggregates_checks() {
        let mut e = ExperimentSummary::new("E");
        e.check(Check::at_most("x", 1.0, 2.0));
        assert!(e.verdict);
        e.check(Check::at_least("y", 1.0, 2.0));
        assert!(!e.verdict);
        let s = Summary::new(1, vec![e]);
        assert!(!s.all_passed);
        let json = summary_string(&s).unwrap();
        let back: Summary = serde_json::from_str(&json).unwrap();
        assert_eq!(back, s);
    }
}
