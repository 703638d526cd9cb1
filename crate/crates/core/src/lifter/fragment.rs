//! Fixed-priority recognition of one loop nest, committed only after an
//! oracle check.

use std::collections::BTreeMap;

use crate::icode::{fragment_matrix, Stmt};
use crate::matrix::RealMat;
use crate::sigma::{lift_loop, ExtentMap, LiftedLoop, SigmaError, SIZE_VAR};
use crate::spl::{eval_rc, eval_real, SplError, SplExpr};

use super::butterfly::{butterfly_shape, NoMatch};
use super::multilinear::pointwise_shape;
use super::recognize::{recognize_complex_permutation, recognize_identity, recognize_stride_permutation, MIN_VALID_PROBES};
use super::{Check, FragmentRef, LiftConfig, LiftError, LiftStep, StepKind};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Rule {
    Identity,
    StridePermutation,
    InterleavedComplex,
    TwiddleButterfly,
    Multilinear,
}

/// Recognizers in priority order.
pub const RULES: [Rule; 5] =
    [Rule::Identity, Rule::StridePermutation, Rule::InterleavedComplex, Rule::TwiddleButterfly, Rule::Multilinear];

impl Rule {
    pub fn name(self) -> &'static str {
        match self {
            Rule::Identity => "identity",
            Rule::StridePermutation => "stride_permutation",
            Rule::InterleavedComplex => "interleaved_complex",
            Rule::TwiddleButterfly => "twiddle_butterfly",
            Rule::Multilinear => "multilinear",
        }
    }

    pub fn kind(self) -> StepKind {
        match self {
            Rule::Identity | Rule::StridePermutation | Rule::InterleavedComplex => StepKind::Permutation,
            Rule::TwiddleButterfly => StepKind::Arithmetic,
            Rule::Multilinear => StepKind::Multilinear,
        }
    }
}

/// Real matrix of a candidate: `RC`-wrapped and real operators directly,
/// bare complex operators in interleaved form.
pub fn candidate_matrix(expr: &SplExpr, n: i64) -> Result<RealMat, SplError> {
    match eval_real(expr, n) {
        Err(SplError::NotReal) => eval_rc(expr, n),
        other => other,
    }
}

pub(crate) fn concrete_extents(extents: &ExtentMap, n: i64) -> Option<BTreeMap<String, usize>> {
    extents
        .iter()
        .map(|(a, e)| e.eval_at(SIZE_VAR, n).ok().filter(|v| *v >= 0).map(|v| (a.clone(), v as usize)))
        .collect()
}

struct Proposal {
    candidate: SplExpr,
    input: String,
    outputs: Vec<String>,
    inputs: Vec<String>,
}

fn from_sigma(
    sigma: &Result<LiftedLoop, SigmaError>,
    recognize: impl Fn(&LiftedLoop) -> Option<SplExpr>,
    what: &str,
) -> Result<Proposal, String> {
    let lifted = sigma.as_ref().map_err(|e| format!("no Σ-SPL form ({e})"))?;
    let candidate = recognize(lifted).ok_or_else(|| format!("term is not {what}"))?;
    Ok(Proposal {
        candidate,
        input: lifted.term.to_string(),
        outputs: lifted.outputs.clone(),
        inputs: lifted.inputs.clone(),
    })
}

fn propose(
    rule: Rule,
    stmt: &Stmt,
    sigma: &Result<LiftedLoop, SigmaError>,
    extents: &ExtentMap,
    probes: &[i64],
) -> Result<Proposal, String> {
    match rule {
        Rule::Identity => from_sigma(sigma, |l| recognize_identity(&l.term, probes), "the identity"),
        Rule::StridePermutation => {
            from_sigma(sigma, |l| recognize_stride_permutation(&l.term, probes), "a real stride permutation")
        }
        Rule::InterleavedComplex => from_sigma(
            sigma,
            |l| recognize_complex_permutation(&l.term, probes),
            "an interleaved complex stride permutation",
        ),
        Rule::TwiddleButterfly => {
            let s = butterfly_shape(stmt, extents).map_err(|NoMatch(why)| why)?;
            Ok(Proposal { candidate: s.candidate, input: stmt.to_string(), outputs: s.outputs, inputs: s.inputs })
        }
        Rule::Multilinear => {
            let s = pointwise_shape(stmt, extents).map_err(|NoMatch(why)| why)?;
            Ok(Proposal { candidate: s.candidate, input: s.sigma.to_string(), outputs: s.outputs, inputs: s.inputs })
        }
    }
}

/// Compares `candidate` with the fragment's oracle matrix at each probe.
/// Probes where either side cannot be evaluated are skipped.
pub(crate) fn check_fragment(
    stmt: &Stmt,
    outputs: &[String],
    inputs: &[String],
    extents: &ExtentMap,
    candidate: &SplExpr,
    probes: &[i64],
    tol: f64,
) -> Result<Vec<Check>, String> {
    let outs: Vec<&str> = outputs.iter().map(String::as_str).collect();
    let ins: Vec<&str> = inputs.iter().map(String::as_str).collect();
    let mut checks = Vec::new();
    for &n in probes {
        let Some(conc) = concrete_extents(extents, n) else { continue };
        let Ok(oracle) = fragment_matrix(std::slice::from_ref(stmt), SIZE_VAR, &outs, &ins, &conc, n) else { continue };
        let Ok(cand) = candidate_matrix(candidate, n) else { continue };
        let Some(deviation) = oracle.max_abs_diff(&cand) else {
            return Err(format!(
                "candidate {candidate} is {:?} but the fragment is {:?} at n = {n}",
                cand.dims(),
                oracle.dims()
            ));
        };
        checks.push(Check { size: n, deviation });
        if deviation > tol {
            return Err(format!("candidate {candidate} deviates from the oracle at n = {n} by {deviation:.3e}"));
        }
    }
    if checks.len() < MIN_VALID_PROBES.min(probes.len()) || checks.is_empty() {
        return Err(format!("candidate {candidate} could be checked at only {} probe sizes", checks.len()));
    }
    Ok(checks)
}

/// Twiddle-butterfly recognition followed by its oracle check.
pub fn recognize_twiddle_butterfly(
    stmt: &Stmt,
    extents: &ExtentMap,
    probes: &[i64],
    tol: f64,
) -> Result<(SplExpr, Vec<Check>), NoMatch> {
    let s = butterfly_shape(stmt, extents)?;
    let checks = check_fragment(stmt, &s.outputs, &s.inputs, extents, &s.candidate, probes, tol).map_err(NoMatch)?;
    Ok((s.candidate, checks))
}

fn describe(stmt: &Stmt, index: usize) -> String {
    match stmt {
        Stmt::Loop { var, trip, .. } => format!("statement {index} (loop {var} < {trip})"),
        other => format!("statement {index} ({other})"),
    }
}

/// Tries every recognizer in [`RULES`] order; the first candidate that
/// passes its check is committed. Returns the step and the number of trials.
pub fn lift_fragment(
    stmt: &Stmt,
    index: usize,
    extents: &ExtentMap,
    config: &LiftConfig,
) -> Result<(LiftStep, usize), LiftError> {
    let sigma = lift_loop(stmt, extents);
    let mut attempts = Vec::new();
    let mut rejected = Vec::new();
    for (trial, rule) in RULES.into_iter().enumerate() {
        let tol = config.tolerance_for(rule.kind());
        let outcome = propose(rule, stmt, &sigma, extents, &config.probes).and_then(|p| {
            let checked = check_fragment(stmt, &p.outputs, &p.inputs, extents, &p.candidate, &config.probes, tol);
            if checked.is_err() && rejected.is_empty() {
                rejected = check_fragment(stmt, &p.outputs, &p.inputs, extents, &p.candidate, &config.probes, f64::INFINITY)
                    .unwrap_or_default();
            }
            checked.map(|c| (p, c))
        });
        match outcome {
            Ok((p, checks)) => {
                let step = LiftStep {
                    rule: rule.name().to_string(),
                    kind: rule.kind(),
                    input: p.input,
                    output: p.candidate,
                    checks,
                    tolerance: tol,
                    fragment: Some(FragmentRef { index, outputs: p.outputs, inputs: p.inputs }),
                };
                return Ok((step, trial + 1));
            }
            Err(why) => attempts.push((rule.name().to_string(), why)),
        }
    }
    Err(LiftError::Unliftable { fragment: describe(stmt, index), attempts, rejected })
}
