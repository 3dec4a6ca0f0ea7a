use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;

fn bin() -> Command {
    let mut c = Command::new(env!("CARGO_BIN_EXE_kreinwedge"));
    c.env_remove("KREINWEDGE_OUT_DIR");
    c
}

fn run(args: &[&str]) -> Output {
    bin().args(args).output().expect("binary runs")
}

fn report(dir: &Path, name: &str) -> Value {
    serde_json::from_str(&fs::read_to_string(dir.join(name).join("report.json")).unwrap()).unwrap()
}

fn row<'a>(r: &'a Value, suite: &str, check: &str) -> &'a Value {
    r["rows"].as_array().unwrap().iter().find(|x| x["suite"] == suite && x["check"] == check).unwrap_or_else(|| panic!("no row {suite}/{check}"))
}

#[test]
fn list_shows_the_bundled_catalog() {
    let out = run(&["list"]);
    assert_eq!(out.status.code(), Some(0));
    let text = String::from_utf8(out.stdout).unwrap();
    assert!(text.lines().count() >= 5);
    assert!(text.lines().next().unwrap().starts_with("free_field_bw"));
}

#[test]
fn list_json_is_a_parseable_array() {
    let out = run(&["list", "--json"]);
    assert_eq!(out.status.code(), Some(0));
    let v: Value = serde_json::from_slice(&out.stdout).unwrap();
    let names: Vec<&str> = v.as_array().unwrap().iter().map(|e| e["name"].as_str().unwrap()).collect();
    assert!(names.len() >= 5);
    for n in ["free_field_bw", "ghost_pair_bw", "control_wrong_wedge"] {
        assert!(names.contains(&n), "{names:?}");
    }
    assert_eq!(run(&["list", "--json"]).stdout, out.stdout);
}

#[test]
fn usage_and_config_errors_exit_2() {
    assert_eq!(run(&["list", "--colour"]).status.code(), Some(2));
    assert_eq!(run(&["frobnicate"]).status.code(), Some(2));
    assert_eq!(run(&["run", "no_such_scenario"]).status.code(), Some(2));
    assert_eq!(run(&["run", "heavy_free_field", "--tolerance-scale", "-1"]).status.code(), Some(2));
    assert_eq!(run(&["run", "heavy_free_field", "--threads", "0"]).status.code(), Some(2));

    let dir = tempfile::tempdir().unwrap();
    let bad = dir.path().join("bad.toml");
    fs::write(&bad, "name = \"bad\"\nsuites = [\"axioms\"]\n[model]\nshells = [{ mass = 0.0, weight = 1.0 }]\n").unwrap();
    let out = run(&["run", bad.to_str().unwrap(), "--out-dir", dir.path().to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("invalid scenario"));
    fs::write(&bad, "name = \"bad\"\nsuites = [\"axioms\"]\nmodel = 3\n").unwrap();
    assert_eq!(run(&["run", bad.to_str().unwrap()]).status.code(), Some(2));
    assert!(!dir.path().join("bad").exists());
}

#[test]
fn free_field_scenario_passes_and_is_thread_independent() {
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    let out = run(&["run", "free_field_bw", "--out-dir", a.path().to_str().unwrap(), "--threads", "1"]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stdout));
    let r = report(a.path(), "free_field_bw");
    assert_eq!(r["pass"], true);
    for check in ["kms", "bw", "tomita_budget"] {
        assert_eq!(row(&r, "modular", check)["pass"], true);
    }
    assert!(r["rows"].as_array().unwrap().iter().any(|x| x["check"].as_str().unwrap().starts_with("tomita sample")));
    for f in ["metadata.json", "defects.csv", "correlator_traces.csv", "density_curve.csv", "gns_spectrum.csv"] {
        assert!(a.path().join("free_field_bw").join(f).is_file(), "{f}");
    }

    let out = run(&["run", "free_field_bw", "--out-dir", b.path().to_str().unwrap(), "--threads", "3"]);
    assert_eq!(out.status.code(), Some(0));
    for f in ["report.json", "defects.csv", "correlator_traces.csv"] {
        assert_eq!(fs::read(a.path().join("free_field_bw").join(f)).unwrap(), fs::read(b.path().join("free_field_bw").join(f)).unwrap(), "{f}");
    }
}

#[test]
fn ghost_pair_scenario_reports_negative_directions() {
    let dir = tempfile::tempdir().unwrap();
    let out = run(&["run", "ghost_pair_bw", "--out-dir", dir.path().to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stdout));
    let r = report(dir.path(), "ghost_pair_bw");
    let sig = r["suites"]["gns"]["signature"].as_array().unwrap();
    assert!(sig[1].as_u64().unwrap() >= 1, "{sig:?}");
    assert_eq!(row(&r, "controls", "wrong_wedge_kms")["pass"], true);
}

#[test]
fn wrong_wedge_control_fails_its_kms_row() {
    let dir = tempfile::tempdir().unwrap();
    let out = run(&["run", "control_wrong_wedge", "--out-dir", dir.path().to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(1));
    let r = report(dir.path(), "control_wrong_wedge");
    let kms = row(&r, "modular", "kms");
    assert_eq!(kms["pass"], false);
    assert!(kms["value"].as_f64().unwrap() > 1e-2);
}

#[test]
fn repeated_runs_give_identical_reports() {
    let dir = tempfile::tempdir().unwrap();
    let target = dir.path().join("out");
    let mut first = None;
    for _ in 0..2 {
        // The output directory comes from the environment here.
        let out = bin().args(["run", "heavy_free_field"]).env("KREINWEDGE_OUT_DIR", &target).output().unwrap();
        assert_eq!(out.status.code(), Some(0));
        let bytes = fs::read(target.join("heavy_free_field").join("report.json")).unwrap();
        match &first {
            None => first = Some(bytes),
            Some(f) => assert_eq!(f, &bytes),
        }
    }
    let meta: Value = serde_json::from_str(&fs::read_to_string(target.join("heavy_free_field").join("metadata.json")).unwrap()).unwrap();
    assert!(meta["started_unix_seconds"].as_u64().unwrap() > 0);
}

#[test]
fn tightened_tolerances_fail_with_exit_1() {
    let dir = tempfile::tempdir().unwrap();
    let out = run(&["run", "heavy_free_field", "--out-dir", dir.path().to_str().unwrap(), "--tolerance-scale", "1e-30"]);
    assert_eq!(out.status.code(), Some(1));
    let r = report(dir.path(), "heavy_free_field");
    assert_eq!(r["tolerance_scale"], 1e-30);
    assert_eq!(r["pass"], false);
}

#[test]
fn scenario_files_run_from_a_path() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("tiny.toml");
    fs::write(
        &path,
        "name = \"tiny\"\nsuites = [\"mollifier\"]\n[model]\nshells = [{ mass = 1.0, weight = 1.0 }]\n[mollifier]\nepsilons = [0.3, 0.1]\n[tolerances]\nmollifier_ratio = 0.5\n",
    )
    .unwrap();
    let out = run(&["run", path.to_str().unwrap(), "--out-dir", dir.path().to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stdout));
    let curve = fs::read_to_string(dir.path().join("tiny").join("mollifier_curve.csv")).unwrap();
    assert_eq!(curve.lines().count(), 3);
}
