//! The end-to-end driver and trace replay.

use crate::icode::{linearity_deviation, IcodeProgram, Stmt};
use crate::kb::KnowledgeBase;
use crate::sigma::analyze_program;
use crate::spl::{normalize, SizeExpr, SplExpr};

use super::fragment::{check_fragment, concrete_extents, RULES};
use super::function::{base_size, kernel_matrix, kernel_spaces, lift_function};
use super::induction::{base_case_matrix, close_by_induction, equivalence_match, BASE_FAMILIES};
use super::{Check, LiftConfig, LiftError, LiftFailure, LiftOutcome, LiftStep, LiftTrace, StepKind};

/// Structural tolerance for linearity and base-case matching.
const EXACT_TOL: f64 = 1e-12;

fn stage_of(e: &LiftError) -> &'static str {
    match e {
        LiftError::Unliftable { .. } => "lift",
        LiftError::RecursionShape(_) => "recursion",
        LiftError::Composition(_) | LiftError::Empty => "composition",
        LiftError::Nonlinear { .. } => "linearity",
        LiftError::BaseCase { .. } => "base_case",
        LiftError::InductionCheck { .. } | LiftError::TooFewSizes { .. } => "induction",
        _ => "lift",
    }
}

fn fail(trace: &mut LiftTrace, e: &LiftError, checks: Vec<Check>) {
    trace.failures.push(LiftFailure { stage: stage_of(e).to_string(), reason: e.to_string(), checks });
}

fn check_linearity(program: &IcodeProgram, entry: &str, config: &LiftConfig) -> Result<(), LiftError> {
    let (outputs, inputs) = kernel_spaces(program, entry)?;
    let extents = analyze_program(program)?.remove(entry).ok_or_else(|| LiftError::UnknownFunction(entry.into()))?;
    let outs: Vec<&str> = outputs.iter().map(String::as_str).collect();
    let ins: Vec<&str> = inputs.iter().map(String::as_str).collect();
    for &n in config.linearity_sizes.iter().filter(|&&n| program.size_constraint.admits(n)) {
        let Some(conc) = concrete_extents(&extents, n) else { continue };
        let d = linearity_deviation(program, entry, &outs, &ins, &conc, n, config.linearity_trials, config.seed)?;
        if d > EXACT_TOL {
            return Err(LiftError::Nonlinear { size: n, deviation: d });
        }
    }
    Ok(())
}

/// Deviation of `expr` from the kernel oracle at each size that evaluates.
pub(crate) fn deviation_table(program: &IcodeProgram, entry: &str, expr: &SplExpr, sizes: &[i64]) -> Vec<Check> {
    sizes
        .iter()
        .filter_map(|&n| {
            let oracle = kernel_matrix(program, entry, n).ok()?;
            let (_, deviation) = equivalence_match(&oracle, expr, n, f64::INFINITY).ok()?;
            Some(Check { size: n, deviation })
        })
        .collect()
}

/// Runs the whole pipeline against the built-in knowledge base.
pub fn run_lift(program: &IcodeProgram, entry: &str, config: &LiftConfig) -> LiftTrace {
    run_lift_with(program, entry, config, &KnowledgeBase::builtin())
}

/// Linearity check, fragment lifting, recursion closure and specification
/// match. Every failure is recorded in the trace rather than returned.
pub fn run_lift_with(program: &IcodeProgram, entry: &str, config: &LiftConfig, kb: &KnowledgeBase) -> LiftTrace {
    let loops = program.function(entry).map(|f| f.body.iter().filter(|s| matches!(s, Stmt::Loop { .. })).count());
    let mut trace = LiftTrace {
        entry: entry.to_string(),
        steps: Vec::new(),
        equation: None,
        closed: None,
        specification: None,
        failures: Vec::new(),
        trials: 0,
        trial_bound: loops.unwrap_or(0) * RULES.len(),
    };
    if let Err(e) = check_linearity(program, entry, config) {
        fail(&mut trace, &e, Vec::new());
        return trace;
    }
    let lifted = match lift_function(program, entry, config) {
        Ok(l) => l,
        Err(e) => {
            trace.trials = trace.trial_bound;
            let table = match &e {
                LiftError::Unliftable { rejected, .. } => rejected.clone(),
                _ => Vec::new(),
            };
            fail(&mut trace, &e, table);
            return trace;
        }
    };
    trace.trials = lifted.trials;
    trace.steps = lifted.steps;

    let closed = match lifted.outcome {
        LiftOutcome::Closed(c) => c,
        LiftOutcome::Recursive(eq) => {
            trace.steps.push(LiftStep {
                rule: "recursive_equation".into(),
                kind: StepKind::Equation,
                input: entry.to_string(),
                output: eq.rhs.clone(),
                checks: Vec::new(),
                tolerance: 0.0,
                fragment: None,
            });
            trace.equation = Some(eq.clone());
            match close_recursion(program, entry, config, &eq, &mut trace) {
                Some(c) => c,
                None => return trace,
            }
        }
    };

    match kb.match_specification(&closed.expr) {
        Some(spec) => {
            trace.steps.push(LiftStep {
                rule: "knowledge_base".into(),
                kind: StepKind::Specification,
                input: closed.expr.to_string(),
                output: normalize(&closed.expr),
                checks: Vec::new(),
                tolerance: 0.0,
                fragment: None,
            });
            trace.specification = Some(spec);
        }
        None => trace.failures.push(LiftFailure {
            stage: "knowledge_base".into(),
            reason: format!("no template matches {}", normalize(&closed.expr)),
            checks: Vec::new(),
        }),
    }
    trace.closed = Some(closed);
    trace
}

fn close_recursion(
    program: &IcodeProgram,
    entry: &str,
    config: &LiftConfig,
    eq: &super::RecursiveEquation,
    trace: &mut LiftTrace,
) -> Option<super::ClosedSpl> {
    let base = match base_size(program, entry).and_then(|n0| Ok((n0, base_case_matrix(program, entry, n0)?))) {
        Ok(b) => b,
        Err(e) => {
            fail(trace, &e, Vec::new());
            return None;
        }
    };
    let (n0, matrix) = base;
    let family = BASE_FAMILIES.iter().find_map(|f| {
        let candidate = (f.build)(SizeExpr::Const(n0 as u64));
        match equivalence_match(&matrix, &candidate, n0, EXACT_TOL) {
            Ok((true, d)) => Some((f, candidate, d)),
            _ => None,
        }
    });
    let Some((family, candidate, deviation)) = family else {
        let best = BASE_FAMILIES
            .iter()
            .filter_map(|f| equivalence_match(&matrix, &(f.build)(SizeExpr::Const(n0 as u64)), n0, EXACT_TOL).ok())
            .map(|(_, d)| d)
            .fold(f64::INFINITY, f64::min);
        fail(trace, &LiftError::BaseCase { size: n0 }, vec![Check { size: n0, deviation: best }]);
        return None;
    };
    trace.steps.push(LiftStep {
        rule: "base_case".into(),
        kind: StepKind::BaseCase,
        input: format!("{entry} at n = {n0}"),
        output: candidate,
        checks: vec![Check { size: n0, deviation }],
        tolerance: EXACT_TOL,
        fragment: None,
    });
    let build = |s: &SizeExpr| (family.build)(s.clone());
    let tol = config.tolerance_for(StepKind::Induction);
    match close_by_induction(program, entry, eq, &build, &config.check_sizes, tol) {
        Ok((closed, checks)) => {
            trace.steps.push(LiftStep {
                rule: "induction".into(),
                kind: StepKind::Induction,
                input: eq.to_string(),
                output: closed.expr.clone(),
                checks,
                tolerance: tol,
                fragment: None,
            });
            Some(closed)
        }
        Err(e) => {
            let substituted = eq.rhs.fill_hole(&eq.name, &build);
            let table = deviation_table(program, entry, &substituted, &config.check_sizes);
            fail(trace, &e, table);
            None
        }
    }
}

/// Re-runs every stored soundness check against the program.
pub fn verify_trace(program: &IcodeProgram, trace: &LiftTrace) -> Result<(), LiftError> {
    let entry = &trace.entry;
    let f = program.function(entry).ok_or_else(|| LiftError::UnknownFunction(entry.clone()))?;
    let extents = analyze_program(program)?.remove(entry.as_str()).ok_or_else(|| LiftError::UnknownFunction(entry.clone()))?;
    for (i, step) in trace.steps.iter().enumerate() {
        let sizes: Vec<i64> = step.checks.iter().map(|c| c.size).collect();
        let replayed = match (&step.fragment, step.kind) {
            (Some(fr), _) => {
                let stmt = &f.body[fr.index];
                check_fragment(stmt, &fr.outputs, &fr.inputs, &extents, &step.output, &sizes, f64::INFINITY)
                    .unwrap_or_default()
            }
            (None, StepKind::Composition | StepKind::Induction | StepKind::BaseCase) => {
                deviation_table(program, entry, &step.output, &sizes)
            }
            _ => continue,
        };
        if replayed.len() != sizes.len() {
            let size = sizes.iter().copied().find(|s| !replayed.iter().any(|c| c.size == *s)).unwrap_or(0);
            return Err(LiftError::Replay { step: i, size, deviation: f64::INFINITY });
        }
        if let Some(c) = replayed.iter().find(|c| c.deviation > step.tolerance) {
            return Err(LiftError::Replay { step: i, size: c.size, deviation: c.deviation });
        }
    }
    Ok(())
}
