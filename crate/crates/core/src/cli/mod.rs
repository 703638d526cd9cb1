//! Command implementations behind the `semlift` binary: `lift`, `verify`
//! and `selftest`. Each returns an exit status and the text to print.

mod report;
mod selftest;

use std::fmt::Write;
use std::path::Path;
use std::str::FromStr;
use std::time::{SystemTime, UNIX_EPOCH};

use thiserror::Error;

use crate::frontend::{lower_to_icode, parse_kernel_source, validate_kernel, Severity};
use crate::icode::{is_power_of_two, IcodeProgram};
use crate::lifter::{candidate_matrix, kernel_matrix, run_lift, LiftConfig};
use crate::spl::parse_spl;

pub use report::{digest, CheckReport, FailureReport, ReportDocument, StageReport};
pub use selftest::{cooley_tukey, run_selftest, run_selftest_with, SelfCheck};

pub const EXIT_OK: i32 = 0;
pub const EXIT_INPUT: i32 = 1;
pub const EXIT_LIFT: i32 = 2;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum CliError {
    #[error("cannot read {path}: {message}")]
    Io { path: String, message: String },
    #[error("size {0} violates n = 2^k, k >= 1")]
    Size(i64),
    #[error("`{0}` is not a size list")]
    SizeList(String),
    #[error("tolerance must be positive, got {0}")]
    Tolerance(f64),
    #[error("unknown emit level `{0}` (expected sigma-spl, spl, equation, spec or trace)")]
    Emit(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub enum Emit {
    SigmaSpl,
    Spl,
    Equation,
    Spec,
    Trace,
}

impl Emit {
    pub const ALL: [Emit; 5] = [Emit::SigmaSpl, Emit::Spl, Emit::Equation, Emit::Spec, Emit::Trace];
}

impl FromStr for Emit {
    type Err = CliError;

    fn from_str(s: &str) -> Result<Self, CliError> {
        Ok(match s.trim() {
            "sigma-spl" => Emit::SigmaSpl,
            "spl" => Emit::Spl,
            "equation" => Emit::Equation,
            "spec" => Emit::Spec,
            "trace" => Emit::Trace,
            other => return Err(CliError::Emit(other.to_string())),
        })
    }
}

/// Comma-separated emit levels.
pub fn parse_emit(csv: &str) -> Result<Vec<Emit>, CliError> {
    csv.split(',').filter(|s| !s.trim().is_empty()).map(str::parse).collect()
}

/// Comma-separated sizes, each a power of two of at least 2.
pub fn parse_sizes(csv: &str) -> Result<Vec<i64>, CliError> {
    let sizes: Vec<i64> = csv
        .split(',')
        .map(|s| s.trim().parse::<i64>().map_err(|_| CliError::SizeList(csv.to_string())))
        .collect::<Result<_, _>>()?;
    if sizes.is_empty() {
        return Err(CliError::SizeList(csv.to_string()));
    }
    match sizes.iter().find(|&&n| n < 2 || !is_power_of_two(n)) {
        Some(&bad) => Err(CliError::Size(bad)),
        None => Ok(sizes),
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct LiftOptions {
    pub entry: Option<String>,
    pub emit: Vec<Emit>,
    pub sizes: Vec<i64>,
    pub tolerance: f64,
    pub json: bool,
}

impl Default for LiftOptions {
    fn default() -> Self {
        let c = LiftConfig::default();
        LiftOptions { entry: None, emit: Emit::ALL.to_vec(), sizes: c.check_sizes, tolerance: c.tolerance, json: false }
    }
}

impl LiftOptions {
    pub fn config(&self) -> Result<LiftConfig, CliError> {
        if self.tolerance.is_nan() || self.tolerance <= 0.0 {
            return Err(CliError::Tolerance(self.tolerance));
        }
        if let Some(&bad) = self.sizes.iter().find(|&&n| n < 2 || !is_power_of_two(n)) {
            return Err(CliError::Size(bad));
        }
        Ok(LiftConfig {
            probes: self.sizes.clone(),
            check_sizes: self.sizes.clone(),
            tolerance: self.tolerance,
            ..LiftConfig::default()
        })
    }
}

fn now() -> u64 {
    SystemTime::now().duration_since(UNIX_EPOCH).map(|d| d.as_secs()).unwrap_or(0)
}

fn read(path: &Path) -> Result<String, CliError> {
    std::fs::read_to_string(path)
        .map_err(|e| CliError::Io { path: path.display().to_string(), message: e.to_string() })
}

/// Parses, validates and lowers `text`, recording any input error in `doc`.
fn front(text: &str, source: &str, entry: Option<&str>, doc: &mut ReportDocument) -> Option<(IcodeProgram, String)> {
    let unit = match parse_kernel_source(text, source) {
        Ok(u) => u,
        Err(e) => {
            doc.fail("frontend", e.to_string());
            return None;
        }
    };
    let diags = validate_kernel(&unit);
    doc.add_diagnostics(&diags);
    if let Some(d) = diags.iter().find(|d| d.severity == Severity::Error) {
        doc.fail("validate", d.to_string());
        return None;
    }
    let entry = match (entry, unit.functions.as_slice()) {
        (Some(e), _) => e.to_string(),
        (None, [only]) => only.name.clone(),
        (None, fs) => {
            let names: Vec<&str> = fs.iter().map(|f| f.name.as_str()).collect();
            doc.fail("frontend", format!("several functions ({}); choose one with --entry", names.join(", ")));
            return None;
        }
    };
    match lower_to_icode(&unit, &entry) {
        Ok(p) => Some((p, entry)),
        Err(e) => {
            doc.fail("frontend", e.to_string());
            None
        }
    }
}

/// Runs the full lift on in-memory source. Exit status 0 on a matched
/// specification, 1 on input errors, 2 when lifting fails cleanly.
pub fn lift_source(text: &str, source: &str, opts: &LiftOptions, timestamp: u64) -> (i32, ReportDocument) {
    let mut doc = ReportDocument::new(source, text, timestamp);
    let config = match opts.config() {
        Ok(c) => c,
        Err(e) => {
            doc.fail("options", e.to_string());
            return (EXIT_INPUT, doc);
        }
    };
    let Some((program, entry)) = front(text, source, opts.entry.as_deref(), &mut doc) else {
        return (EXIT_INPUT, doc);
    };
    let trace = run_lift(&program, &entry, &config);
    doc.absorb(&trace);
    let code = if doc.succeeded() { EXIT_OK } else { EXIT_LIFT };
    (code, doc)
}

fn render(doc: &ReportDocument, opts: &LiftOptions) -> String {
    if opts.json {
        doc.to_json() + "\n"
    } else {
        doc.render_text(&opts.emit)
    }
}

pub fn cmd_lift(path: &Path, opts: &LiftOptions) -> (i32, String) {
    let source = path.display().to_string();
    match read(path) {
        Ok(text) => {
            let (code, doc) = lift_source(&text, &source, opts, now());
            (code, render(&doc, opts))
        }
        Err(e) => {
            let mut doc = ReportDocument::new(&source, "", now());
            doc.fail("frontend", e.to_string());
            (EXIT_INPUT, render(&doc, opts))
        }
    }
}

/// Kernel oracle versus a candidate SPL expression at each size.
pub fn verify_source(text: &str, source: &str, spl: &str, sizes: &[i64], tol: f64) -> (i32, String) {
    let mut out = String::new();
    let mut doc = ReportDocument::new(source, text, 0);
    if let Some(&bad) = sizes.iter().find(|&&n| n < 2 || !is_power_of_two(n)) {
        return (EXIT_INPUT, format!("error: {}\n", CliError::Size(bad)));
    }
    let candidate = match parse_spl(spl) {
        Ok(c) => c,
        Err(e) => return (EXIT_INPUT, format!("error: candidate: {e}\n")),
    };
    let Some((program, entry)) = front(text, source, None, &mut doc) else {
        let why: Vec<String> = doc.failures.iter().map(|f| format!("error: {}: {}", f.stage, f.reason)).collect();
        return (EXIT_INPUT, why.join("\n") + "\n");
    };
    let _ = writeln!(out, "{source}: {entry} versus {candidate}");
    let _ = writeln!(out, "  {:>6} {:>12}", "size", "deviation");
    let mut all_ok = true;
    for &n in sizes {
        let deviation = kernel_matrix(&program, &entry, n)
            .ok()
            .and_then(|m| Some((m, candidate_matrix(&candidate, n).ok()?)))
            .and_then(|(m, c)| m.max_abs_diff(&c));
        match deviation {
            Some(d) => {
                let _ = writeln!(out, "  {n:>6} {d:>12.3e}");
                all_ok &= d <= tol;
            }
            None => {
                let _ = writeln!(out, "  {n:>6} {:>12}", "mismatch");
                all_ok = false;
            }
        }
    }
    let _ = writeln!(out, "{}", if all_ok { "equivalent within tolerance" } else { "not equivalent" });
    (if all_ok { EXIT_OK } else { EXIT_LIFT }, out)
}

pub fn cmd_verify(path: &Path, spl: &str, sizes: &[i64], tol: f64) -> (i32, String) {
    match read(path) {
        Ok(text) => verify_source(&text, &path.display().to_string(), spl, sizes, tol),
        Err(e) => (EXIT_INPUT, format!("error: {e}\n")),
    }
}

/// Renders selftest results; exit 0 iff every identity holds.
pub fn selftest_report(checks: &[SelfCheck], json: bool) -> (i32, String) {
    let ok = checks.iter().all(|c| c.passed);
    let text = if json {
        serde_json::to_string_pretty(checks).expect("checks serialize") + "\n"
    } else {
        let mut out = String::new();
        for c in checks {
            let mark = if c.passed { "pass" } else { "FAIL" };
            let _ = writeln!(out, "{mark}  {:<40} {:>10.3e} (tol {:e})", c.name, c.deviation, c.tolerance);
        }
        let passed = checks.iter().filter(|c| c.passed).count();
        let _ = writeln!(out, "{passed}/{} identities hold", checks.len());
        out
    };
    (if ok { EXIT_OK } else { EXIT_INPUT }, text)
}

pub fn cmd_selftest(json: bool) -> (i32, String) {
    selftest_report(&run_selftest(), json)
}
