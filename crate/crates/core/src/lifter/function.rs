//! Whole-function lifting: fragments, recursive-call blocks, composition.

use std::collections::BTreeSet;

use crate::icode::{extract_matrix_with_extents, IcodeFunction, IcodeProgram, IndexExpr, Stmt};
use crate::matrix::RealMat;
use crate::sigma::{analyze_program, ExtentMap, SIZE_VAR};
use crate::spl::{SizeExpr, SplExpr};

use super::fragment::{candidate_matrix, check_fragment, concrete_extents, lift_fragment, RULES};
use super::multilinear::pointwise_shape;
use super::{
    Check, ClosedSpl, FunctionLift, LiftConfig, LiftError, LiftOutcome, LiftStep, RecursiveEquation, StepKind,
    ASSURANCE,
};

/// Name given to the unknown operator a recursive call stands for.
pub const HOLE_NAME: &str = "M";

fn entry_fn<'p>(program: &'p IcodeProgram, entry: &str) -> Result<&'p IcodeFunction, LiftError> {
    program.function(entry).ok_or_else(|| LiftError::UnknownFunction(entry.to_string()))
}

/// Parameters the entry writes (outputs) and reads (inputs), in declaration
/// order. Arrays handed to calls count as both.
pub fn kernel_spaces(program: &IcodeProgram, entry: &str) -> Result<(Vec<String>, Vec<String>), LiftError> {
    let f = entry_fn(program, entry)?;
    let mut written = BTreeSet::new();
    let mut read = BTreeSet::new();
    fn walk(stmts: &[Stmt], w: &mut BTreeSet<String>, r: &mut BTreeSet<String>) {
        for s in stmts {
            match s {
                Stmt::Store { array, value, .. } => {
                    w.insert(array.clone());
                    r.extend(value.reads().into_iter().map(|(a, _)| a));
                }
                Stmt::Def { value, .. } => r.extend(value.reads().into_iter().map(|(a, _)| a)),
                Stmt::Call { arrays, .. } => {
                    w.extend(arrays.iter().cloned());
                    r.extend(arrays.iter().cloned());
                }
                Stmt::Loop { body, .. } => walk(body, w, r),
                _ => {}
            }
        }
    }
    walk(&f.body, &mut written, &mut read);
    let pick = |set: &BTreeSet<String>| f.array_params.iter().filter(|p| set.contains(*p)).cloned().collect();
    Ok((pick(&written), pick(&read)))
}

/// Smallest admissible size strictly above the guard threshold.
pub fn base_size(program: &IcodeProgram, entry: &str) -> Result<i64, LiftError> {
    let f = entry_fn(program, entry)?;
    let mut n = 1i64 << program.size_constraint.min_log2;
    if let Some(t) = f.guard_threshold() {
        while n <= t {
            n *= 2;
        }
    }
    Ok(n)
}

/// The entry's matrix over its [`kernel_spaces`] at size `n`.
pub fn kernel_matrix(program: &IcodeProgram, entry: &str, n: i64) -> Result<RealMat, LiftError> {
    let (outputs, inputs) = kernel_spaces(program, entry)?;
    let extents = analyze_program(program)?.remove(entry).ok_or_else(|| LiftError::UnknownFunction(entry.into()))?;
    let conc = concrete_extents(&extents, n)
        .ok_or_else(|| LiftError::Composition(format!("extents do not evaluate at n = {n}")))?;
    let outs: Vec<&str> = outputs.iter().map(String::as_str).collect();
    let ins: Vec<&str> = inputs.iter().map(String::as_str).collect();
    Ok(extract_matrix_with_extents(program, entry, &outs, &ins, &conc, n)?)
}

fn same_extent(a: &IndexExpr, b: &IndexExpr) -> bool {
    a.sub(b).ok().and_then(|d| d.as_constant()) == Some(0)
}

/// `Tensor(I(r), M(n/r))` for `r` self-calls that partition `workspace`.
fn recursion_block(
    calls: &[&Stmt],
    workspace: &[String],
    extents: &ExtentMap,
    callee_extents: &ExtentMap,
    f: &IcodeFunction,
) -> Result<(SplExpr, u64), LiftError> {
    let shape = |m: String| LiftError::RecursionShape(m);
    let r = calls.len() as i64;
    if !(r > 0 && (r as u64).is_power_of_two()) {
        return Err(shape(format!("{r} calls cannot split a power-of-two size evenly")));
    }
    let sub_size = IndexExpr::var(SIZE_VAR).div_pow2(r).map_err(|e| shape(e.to_string()))?;
    let param = f.array_params.first().ok_or_else(|| shape("entry has no array parameter".into()))?;
    let block_extent = callee_extents[param].substitute(SIZE_VAR, &sub_size).map_err(|e| shape(e.to_string()))?;
    let mut covered = BTreeSet::new();
    for c in calls {
        let Stmt::Call { callee, arrays, size } = c else { unreachable!("only calls are grouped") };
        if *callee != f.name {
            return Err(shape(format!("call to `{callee}` is not a self-call")));
        }
        if arrays.len() != f.array_params.len() || arrays.len() != 1 {
            return Err(shape(format!("call `{c}` must pass exactly one array")));
        }
        if !same_extent(size, &sub_size) {
            return Err(shape(format!("call `{c}` has size {size}, expected {sub_size} for {r} calls")));
        }
        let a = &arrays[0];
        if !workspace.contains(a) {
            return Err(shape(format!("`{a}` is not part of the workspace [{}]", workspace.join(", "))));
        }
        if !covered.insert(a.clone()) {
            return Err(shape(format!("`{a}` is passed to more than one call (overlapping subranges)")));
        }
        if !same_extent(&extents[a], &block_extent) {
            return Err(shape(format!(
                "`{a}` has extent {} but a call of size {sub_size} covers {block_extent} (unequal subranges)",
                extents[a]
            )));
        }
    }
    if covered.len() != workspace.len() {
        return Err(shape("the calls do not cover the whole workspace".into()));
    }
    let size = SizeExpr::n_over(r as u64);
    Ok((SplExpr::tensor(SplExpr::id(r as u64), SplExpr::hole(HOLE_NAME, size)), r as u64))
}

enum Piece {
    Fragment(LiftStep),
    Calls(Vec<usize>),
}

/// Lifts every loop nest, turns recursive-call groups into
/// `Tensor(I(r), M(n/r))`, and composes the factors in reverse program order.
pub fn lift_function(program: &IcodeProgram, entry: &str, config: &LiftConfig) -> Result<FunctionLift, LiftError> {
    let f = entry_fn(program, entry)?;
    let all = analyze_program(program)?;
    let extents = all.get(entry).ok_or_else(|| LiftError::UnknownFunction(entry.into()))?;
    let mut pieces: Vec<Piece> = Vec::new();
    let mut trials = 0;
    for (i, s) in f.body.iter().enumerate() {
        match s {
            Stmt::Guard { .. } | Stmt::Alloc { .. } | Stmt::Free { .. } => {}
            Stmt::Loop { .. } => {
                let (step, t) = lift_fragment(s, i, extents, config)?;
                trials += t;
                pieces.push(Piece::Fragment(step));
            }
            Stmt::Call { .. } => match pieces.last_mut() {
                Some(Piece::Calls(ix)) => ix.push(i),
                _ => pieces.push(Piece::Calls(vec![i])),
            },
            other => {
                return Err(LiftError::Composition(format!("statement {i} (`{other}`) is outside any loop")));
            }
        }
    }
    if pieces.is_empty() {
        return Err(LiftError::Empty);
    }

    let mut factors = Vec::new();
    let mut steps = Vec::new();
    let mut arity = None;
    let mut space: Option<Vec<String>> = None;
    let mut first_inputs = None;
    for p in pieces {
        match p {
            Piece::Fragment(step) => {
                let fr = step.fragment.as_ref().expect("fragment steps carry their reference");
                if let Some(prev) = &space {
                    if *prev != fr.inputs {
                        return Err(LiftError::Composition(format!(
                            "statement {} reads [{}] but the previous stage produced [{}]",
                            fr.index,
                            fr.inputs.join(", "),
                            prev.join(", ")
                        )));
                    }
                }
                first_inputs.get_or_insert_with(|| fr.inputs.clone());
                space = Some(fr.outputs.clone());
                factors.push(step.output.clone());
                steps.push(step);
            }
            Piece::Calls(ix) => {
                let workspace = space.clone().ok_or_else(|| {
                    LiftError::RecursionShape("recursive calls must follow a loop that fills their workspace".into())
                })?;
                if arity.is_some() {
                    return Err(LiftError::RecursionShape("more than one group of recursive calls".into()));
                }
                let calls: Vec<&Stmt> = ix.iter().map(|&i| &f.body[i]).collect();
                let (block, r) = recursion_block(&calls, &workspace, extents, &all[entry], f)?;
                arity = Some(r);
                factors.push(block);
            }
        }
    }
    let (outputs, inputs) = kernel_spaces(program, entry)?;
    let (first, last) = (first_inputs.unwrap_or_default(), space.unwrap_or_default());
    if first != inputs || last != outputs {
        return Err(LiftError::Composition(format!(
            "lifted stages map [{}] to [{}] but the kernel maps [{}] to [{}]",
            first.join(", "),
            last.join(", "),
            inputs.join(", "),
            outputs.join(", ")
        )));
    }
    factors.reverse();
    let expr = if factors.len() == 1 { factors.pop().expect("one factor") } else { SplExpr::compose(factors) };

    let outcome = match arity {
        Some(r) => {
            LiftOutcome::Recursive(RecursiveEquation { name: HOLE_NAME.into(), size: SizeExpr::n(), rhs: expr, arity: r })
        }
        None => {
            if steps.len() > 1 {
                steps.push(check_composition(program, entry, &expr, config)?);
            }
            let mut sizes: Vec<i64> = steps.iter().flat_map(|s| s.checks.iter().map(|c| c.size)).collect();
            sizes.sort_unstable();
            sizes.dedup();
            LiftOutcome::Closed(ClosedSpl { expr, assurance: ASSURANCE, checked_sizes: sizes })
        }
    };
    debug_assert!(trials <= RULES.len() * steps.len().max(1));
    Ok(FunctionLift { steps, outcome, trials })
}

fn check_composition(
    program: &IcodeProgram,
    entry: &str,
    expr: &SplExpr,
    config: &LiftConfig,
) -> Result<LiftStep, LiftError> {
    let tol = config.tolerance_for(StepKind::Composition);
    let mut checks = Vec::new();
    for &n in &config.probes {
        let (Ok(oracle), Ok(cand)) = (kernel_matrix(program, entry, n), candidate_matrix(expr, n)) else { continue };
        let deviation = oracle
            .max_abs_diff(&cand)
            .ok_or(LiftError::Dimensions { oracle: oracle.dims(), candidate: cand.dims() })?;
        if deviation > tol {
            return Err(LiftError::Composition(format!("composed stages deviate at n = {n} by {deviation:.3e}")));
        }
        checks.push(Check { size: n, deviation });
    }
    Ok(LiftStep {
        rule: "composition".into(),
        kind: StepKind::Composition,
        input: entry.to_string(),
        output: expr.clone(),
        checks,
        tolerance: tol,
        fragment: None,
    })
}

/// Sizes at which multilinear lifts are checked.
const MULTILINEAR_SIZES: [i64; 2] = [4, 8];

/// Lifts a single pointwise scale-and-add loop to an `Augment` of scaled identities.
pub fn lift_multilinear(program: &IcodeProgram, entry: &str) -> Result<ClosedSpl, LiftError> {
    let f = entry_fn(program, entry)?;
    let extents = analyze_program(program)?.remove(entry).ok_or_else(|| LiftError::UnknownFunction(entry.into()))?;
    let loops: Vec<(usize, &Stmt)> = f.body.iter().enumerate().filter(|(_, s)| s.is_loop()).collect();
    let [(index, stmt)] = loops.as_slice() else {
        return Err(LiftError::Composition(format!("expected one loop, found {}", loops.len())));
    };
    let unliftable = |why: String| LiftError::Unliftable {
        fragment: format!("statement {index}"),
        attempts: vec![("multilinear".into(), why)],
        rejected: Vec::new(),
    };
    let shape = pointwise_shape(stmt, &extents).map_err(|e| unliftable(e.0))?;
    let checks = check_fragment(stmt, &shape.outputs, &shape.inputs, &extents, &shape.candidate, &MULTILINEAR_SIZES, 1e-12)
        .map_err(unliftable)?;
    Ok(ClosedSpl {
        expr: shape.candidate,
        assurance: ASSURANCE,
        checked_sizes: checks.iter().map(|c| c.size).collect(),
    })
}
