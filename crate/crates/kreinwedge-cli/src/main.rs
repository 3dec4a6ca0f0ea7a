//! `kreinwedge run <scenario>` and `kreinwedge list`.
//!
//! Exit status: 0 when every check passes, 1 when a check fails, 2 for usage
//! and configuration errors.

mod bundled;
mod report;
mod scenario;
mod suites;

use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::{Instant, SystemTime, UNIX_EPOCH};

use clap::{Parser, Subcommand};
use serde_json::json;

use report::{Metadata, Report};
use scenario::{ConfigError, Scenario};

/// Environment variable naming the default output directory.
const OUT_DIR_ENV: &str = "KREINWEDGE_OUT_DIR";
const DEFAULT_OUT_DIR: &str = "kreinwedge-out";

#[derive(Debug, Parser)]
#[command(name = "kreinwedge", version, about = "Run Krein-space wedge checks from scenario files")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Run a scenario file or a bundled scenario by name.
    Run {
        scenario: String,
        /// Directory for the report; a subdirectory per scenario is created.
        #[arg(long, env = OUT_DIR_ENV)]
        out_dir: Option<PathBuf>,
        /// Worker threads. Results do not depend on this.
        #[arg(long)]
        threads: Option<usize>,
        /// Multiplies every tolerance except the control thresholds.
        #[arg(long, default_value_t = 1.0)]
        tolerance_scale: f64,
    },
    /// List the bundled scenarios.
    List {
        #[arg(long)]
        json: bool,
    },
}

fn load(arg: &str) -> Result<Scenario, ConfigError> {
    let path = Path::new(arg);
    if path.is_file() {
        let text = std::fs::read_to_string(path).map_err(|source| ConfigError::Read { path: arg.into(), source })?;
        return Scenario::parse(&text);
    }
    match bundled::find(arg) {
        Some(text) => Scenario::parse(text),
        None => Err(ConfigError::Invalid(format!("{arg} is neither a file nor a bundled scenario (see `kreinwedge list`)"))),
    }
}

fn usage_error(msg: impl std::fmt::Display) -> ExitCode {
    eprintln!("error: {msg}");
    ExitCode::from(2)
}

fn run(arg: &str, out_dir: Option<PathBuf>, threads: Option<usize>, scale: f64) -> ExitCode {
    if !(scale > 0.0 && scale.is_finite()) {
        return usage_error(format!("--tolerance-scale must be positive and finite, got {scale}"));
    }
    if threads == Some(0) {
        return usage_error("--threads must be at least 1");
    }
    let sc = match load(arg) {
        Ok(s) => s,
        Err(e) => return usage_error(e),
    };
    if let Some(n) = threads {
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(n).build_global() {
            return usage_error(format!("cannot start {n} threads: {e}"));
        }
    }
    let dir = out_dir.or_else(|| sc.output.dir.clone()).unwrap_or_else(|| PathBuf::from(DEFAULT_OUT_DIR)).join(&sc.name);

    let started = SystemTime::now().duration_since(UNIX_EPOCH).map_or(0, |d| d.as_secs());
    let clock = Instant::now();
    let mut order = sc.suites.clone();
    order.sort();
    order.dedup();
    let mut rows = Vec::new();
    let mut curves = Vec::new();
    let mut details = std::collections::BTreeMap::new();
    for suite in order {
        let t = Instant::now();
        let out = suites::run(suite, &sc, scale);
        let failed = out.rows.iter().filter(|r| !r.pass).count();
        eprintln!("{:<10} {} checks, {} failed [{:.1}s]", suite.name(), out.rows.len(), failed, t.elapsed().as_secs_f64());
        rows.extend(out.rows);
        curves.extend(out.curves);
        details.insert(suite.name().to_string(), out.detail);
    }
    let pass = rows.iter().all(|r| r.pass);
    let report = Report {
        scenario: sc.name.clone(),
        description: sc.description.clone(),
        fingerprint: kreinwedge::modular::fingerprint_inputs(&sc),
        tolerance_scale: scale,
        pass,
        rows,
        suites: details,
    };
    let meta = Metadata {
        scenario: sc.name.clone(),
        version: env!("CARGO_PKG_VERSION"),
        started_unix_seconds: started,
        elapsed_seconds: clock.elapsed().as_secs_f64(),
        threads: rayon::current_num_threads(),
    };
    if let Err(e) = report::write_all(&dir, &report, &meta, &curves) {
        eprintln!("error: cannot write {}: {e}", dir.display());
        return ExitCode::from(2);
    }
    let mut out = std::io::stdout().lock();
    for r in report.rows.iter().filter(|r| !r.pass) {
        let _ = writeln!(out, "FAIL {}/{}: {:e} ({:?} {:e})", r.suite, r.check, r.value, r.rule, r.tolerance);
    }
    let _ = writeln!(out, "{} {} -> {}", if pass { "PASS" } else { "FAIL" }, sc.name, dir.display());
    if pass {
        ExitCode::SUCCESS
    } else {
        ExitCode::from(1)
    }
}

fn list(as_json: bool) -> ExitCode {
    let mut entries = Vec::new();
    for (name, text) in bundled::ALL {
        match Scenario::parse(text) {
            Ok(s) => entries.push((name, s.description, s.suites)),
            Err(e) => return usage_error(format!("bundled scenario {name}: {e}")),
        }
    }
    let mut out = std::io::stdout().lock();
    if as_json {
        let arr: Vec<_> = entries.iter().map(|(n, d, s)| json!({ "name": n, "description": d, "suites": s })).collect();
        let _ = writeln!(out, "{}", serde_json::to_string_pretty(&arr).expect("serializable"));
    } else {
        for (n, d, _) in &entries {
            let _ = writeln!(out, "{n:<24} {d}");
        }
    }
    ExitCode::SUCCESS
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match cli.command {
        Command::Run { scenario, out_dir, threads, tolerance_scale } => run(&scenario, out_dir, threads, tolerance_scale),
        Command::List { json } => list(json),
    }
}
