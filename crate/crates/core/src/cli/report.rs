use std::fmt::Write;

use serde::Serialize;
use sha2::{Digest, Sha256};

use crate::frontend::Diagnostic;
use crate::lifter::{Check, LiftFailure, LiftTrace, StepKind};

use super::Emit;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CheckReport {
    pub size: i64,
    pub deviation: f64,
}

impl From<&Check> for CheckReport {
    fn from(c: &Check) -> Self {
        CheckReport { size: c.size, deviation: c.deviation }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct StageReport {
    pub rule: String,
    pub kind: String,
    pub input: String,
    pub output: String,
    pub tolerance: f64,
    pub checks: Vec<CheckReport>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FailureReport {
    pub stage: String,
    pub reason: String,
    pub checks: Vec<CheckReport>,
}

impl From<&LiftFailure> for FailureReport {
    fn from(f: &LiftFailure) -> Self {
        FailureReport { stage: f.stage.clone(), reason: f.reason.clone(), checks: f.checks.iter().map(Into::into).collect() }
    }
}

/// Everything a `lift` run established, in one serializable record.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ReportDocument {
    pub source: String,
    pub source_digest: String,
    pub entry: Option<String>,
    pub stages: Vec<StageReport>,
    pub equation: Option<String>,
    pub closed_spl: Option<String>,
    pub assurance: Option<String>,
    pub specification: Option<String>,
    pub diagnostics: Vec<String>,
    pub failures: Vec<FailureReport>,
    pub trials: usize,
    pub trial_bound: usize,
    pub timestamp: u64,
}

pub fn digest(text: &str) -> String {
    hex::encode(Sha256::digest(text.as_bytes()))
}

fn kind_name(k: StepKind) -> &'static str {
    match k {
        StepKind::Permutation => "permutation",
        StepKind::Arithmetic => "arithmetic",
        StepKind::Multilinear => "multilinear",
        StepKind::Composition => "composition",
        StepKind::Equation => "equation",
        StepKind::BaseCase => "base_case",
        StepKind::Induction => "induction",
        StepKind::Specification => "specification",
    }
}

fn join_sizes(sizes: &[i64]) -> String {
    sizes.iter().map(i64::to_string).collect::<Vec<_>>().join(", ")
}

impl ReportDocument {
    pub fn new(source: &str, text: &str, timestamp: u64) -> Self {
        ReportDocument {
            source: source.to_string(),
            source_digest: digest(text),
            entry: None,
            stages: Vec::new(),
            equation: None,
            closed_spl: None,
            assurance: None,
            specification: None,
            diagnostics: Vec::new(),
            failures: Vec::new(),
            trials: 0,
            trial_bound: 0,
            timestamp,
        }
    }

    pub fn add_diagnostics(&mut self, diags: &[Diagnostic]) {
        self.diagnostics.extend(diags.iter().map(ToString::to_string));
    }

    pub fn fail(&mut self, stage: &str, reason: impl Into<String>) {
        self.failures.push(FailureReport { stage: stage.into(), reason: reason.into(), checks: Vec::new() });
    }

    pub fn absorb(&mut self, trace: &LiftTrace) {
        self.entry = Some(trace.entry.clone());
        self.stages = trace
            .steps
            .iter()
            .map(|s| StageReport {
                rule: s.rule.clone(),
                kind: kind_name(s.kind).into(),
                input: s.input.clone(),
                output: s.output.to_string(),
                tolerance: s.tolerance,
                checks: s.checks.iter().map(Into::into).collect(),
            })
            .collect();
        self.equation = trace.equation.as_ref().map(ToString::to_string);
        if let Some(c) = &trace.closed {
            self.closed_spl = Some(c.expr.to_string());
            let tol = trace.steps.iter().filter(|s| !s.checks.is_empty()).map(|s| s.tolerance).fold(0.0, f64::max);
            let claim = if trace.equation.is_some() { "induction" } else { "symbolic fragment lifting" };
            self.assurance = Some(format!(
                "verified at sizes {} with tolerance {tol:e}; parametric claim by {claim} ({} grade)",
                join_sizes(&c.checked_sizes),
                c.assurance
            ));
        }
        self.specification = trace.specification.as_ref().map(|s| s.summary.clone());
        self.failures.extend(trace.failures.iter().map(Into::into));
        self.trials = trace.trials;
        self.trial_bound = trace.trial_bound;
    }

    pub fn succeeded(&self) -> bool {
        self.failures.is_empty() && self.specification.is_some()
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }

    /// Human-readable rendering of the sections selected by `emit`.
    pub fn render_text(&self, emit: &[Emit]) -> String {
        let on = |e: Emit| emit.contains(&e);
        let mut out = String::new();
        let _ = writeln!(out, "source: {} (sha256 {})", self.source, self.source_digest);
        if let Some(e) = &self.entry {
            let _ = writeln!(out, "entry: {e}");
        }
        for d in &self.diagnostics {
            let _ = writeln!(out, "{d}");
        }
        let fragments: Vec<&StageReport> =
            self.stages.iter().filter(|s| matches!(s.kind.as_str(), "permutation" | "arithmetic" | "multilinear")).collect();
        if on(Emit::SigmaSpl) && !fragments.is_empty() {
            out.push_str("\nsigma-spl:\n");
            for s in &fragments {
                let _ = writeln!(out, "  [{}] {}", s.rule, s.input);
            }
        }
        if on(Emit::Spl) && !fragments.is_empty() {
            out.push_str("\nspl components:\n");
            for s in &fragments {
                let _ = writeln!(out, "  {}", s.output);
            }
        }
        if on(Emit::Equation) {
            if let Some(eq) = &self.equation {
                let _ = writeln!(out, "\nrecursive equation:\n  {eq}");
            }
        }
        if on(Emit::Spec) {
            if let Some(c) = &self.closed_spl {
                let _ = writeln!(out, "\nclosed spl:\n  {c}");
            }
            if let Some(a) = &self.assurance {
                let _ = writeln!(out, "  {a}");
            }
            if let Some(s) = &self.specification {
                let _ = writeln!(out, "\nspecification:\n  {s}");
            }
        }
        if on(Emit::Trace) {
            out.push_str("\nsoundness evidence:\n");
            let _ = writeln!(out, "  {:<4} {:<20} {:>6} {:>12}", "step", "rule", "size", "deviation");
            for (i, s) in self.stages.iter().enumerate() {
                for c in &s.checks {
                    let _ = writeln!(out, "  {:<4} {:<20} {:>6} {:>12.3e}", i, s.rule, c.size, c.deviation);
                }
            }
            let _ = writeln!(out, "  trials: {} of at most {}", self.trials, self.trial_bound);
        }
        for f in &self.failures {
            let _ = writeln!(out, "\nfailure at {}: {}", f.stage, f.reason);
            for c in &f.checks {
                let _ = writeln!(out, "  n = {:<6} deviation {:.3e}", c.size, c.deviation);
            }
        }
        out
    }
}
