//! Report rows and the files written for a run.

use std::collections::BTreeMap;
use std::fs;
use std::io;
use std::path::Path;

use serde::Serialize;
use serde_json::Value;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Rule {
    /// value < tolerance
    Below,
    /// value ≤ tolerance
    AtMost,
    /// value > tolerance
    Above,
    /// value ≥ tolerance
    AtLeast,
}

impl Rule {
    fn holds(self, value: f64, tol: f64) -> bool {
        match self {
            Rule::Below => value < tol,
            Rule::AtMost => value <= tol,
            Rule::Above => value > tol,
            Rule::AtLeast => value >= tol,
        }
    }

    fn name(self) -> &'static str {
        match self {
            Rule::Below => "below",
            Rule::AtMost => "at_most",
            Rule::Above => "above",
            Rule::AtLeast => "at_least",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Row {
    pub suite: String,
    pub check: String,
    pub value: f64,
    pub tolerance: f64,
    pub rule: Rule,
    pub pass: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub note: Option<String>,
}

impl Row {
    pub fn new(suite: &str, check: &str, value: f64, tolerance: f64, rule: Rule) -> Row {
        Row::with_pass(suite, check, value, tolerance, rule, rule.holds(value, tolerance))
    }

    /// A row whose verdict was decided by the library.
    pub fn with_pass(suite: &str, check: &str, value: f64, tolerance: f64, rule: Rule, pass: bool) -> Row {
        Row { suite: suite.into(), check: check.into(), value, tolerance, rule, pass: pass && value.is_finite(), note: None }
    }

    pub fn failed(suite: &str, check: &str, note: String) -> Row {
        Row { suite: suite.into(), check: check.into(), value: f64::NAN, tolerance: f64::NAN, rule: Rule::Below, pass: false, note: Some(note) }
    }
}

/// Plot-ready data written as `<file>` in the output directory.
#[derive(Debug, Clone, PartialEq)]
pub struct Curve {
    pub file: String,
    pub header: String,
    pub lines: Vec<String>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SuiteOutput {
    pub rows: Vec<Row>,
    pub detail: Value,
    pub curves: Vec<Curve>,
}

/// Everything in report.json. It holds no timestamps or host data, so equal
/// scenarios give byte-identical files.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Report {
    pub scenario: String,
    pub description: String,
    /// SHA-256 of the parsed scenario.
    pub fingerprint: String,
    pub tolerance_scale: f64,
    pub pass: bool,
    pub rows: Vec<Row>,
    pub suites: BTreeMap<String, Value>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Metadata {
    pub scenario: String,
    pub version: &'static str,
    pub started_unix_seconds: u64,
    pub elapsed_seconds: f64,
    pub threads: usize,
}

fn number(x: f64) -> String {
    if x.is_finite() {
        format!("{x:e}")
    } else {
        String::new()
    }
}

pub fn defects_csv(rows: &[Row]) -> String {
    let mut s = String::from("suite,check,value,tolerance,rule,pass\n");
    for r in rows {
        s.push_str(&format!("{},\"{}\",{},{},{},{}\n", r.suite, r.check, number(r.value), number(r.tolerance), r.rule.name(), r.pass));
    }
    s
}

pub fn write_all(dir: &Path, report: &Report, meta: &Metadata, curves: &[Curve]) -> io::Result<()> {
    fs::create_dir_all(dir)?;
    let json = serde_json::to_string_pretty(report).map_err(io::Error::other)?;
    fs::write(dir.join("report.json"), json + "\n")?;
    fs::write(dir.join("metadata.json"), serde_json::to_string_pretty(meta).map_err(io::Error::other)? + "\n")?;
    fs::write(dir.join("defects.csv"), defects_csv(&report.rows))?;
    for c in curves {
        let mut s = c.header.clone();
        s.push('\n');
        for l in &c.lines {
            s.push_str(l);
            s.push('\n');
        }
        fs::write(dir.join(&c.file), s)?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rules_compare_as_named() {
        assert!(Row::new("s", "c", 1.0, 2.0, Rule::Below).pass);
        assert!(!Row::new("s", "c", 2.0, 2.0, Rule::Below).pass);
        assert!(Row::new("s", "c", 2.0, 2.0, Rule::AtMost).pass);
        assert!(Row::new("s", "c", 3.0, 2.0, Rule::Above).pass);
        assert!(Row::new("s", "c", 2.0, 2.0, Rule::AtLeast).pass);
        assert!(!Row::new("s", "c", f64::NAN, 2.0, Rule::AtMost).pass);
    }

    #[test]
    fn csv_quotes_check_names_and_blanks_non_finite() {
        let rows = [Row::new("gns", "a, b", 1e-3, 1e-2, Rule::Below), Row::failed("gns", "error", "boom".into())];
        let csv = defects_csv(&rows);
        assert!(csv.contains("gns,\"a, b\",1e-3,1e-2,below,true"));
        assert!(csv.contains("gns,\"error\",,,below,false"));
    }
}
