//! Range analysis: affine extents for every array, over box iteration domains.

use std::collections::BTreeMap;

use indexmap::IndexMap;
use thiserror::Error;

use crate::icode::{IcodeFunction, IcodeProgram, IndexError, IndexExpr, Stmt};

/// Array name → extent (in real-number slots), parameters first then locals.
pub type ExtentMap = IndexMap<String, IndexExpr>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum RangeError {
    #[error("unknown function `{0}`")]
    UnknownFunction(String),
    #[error("array `{array}`: inferred extent {inferred} exceeds allocation {declared}")]
    ExceedsAllocation { array: String, inferred: Box<IndexExpr>, declared: Box<IndexExpr> },
    #[error("array `{array}`: access index {index} can be negative")]
    NegativeIndex { array: String, index: Box<IndexExpr> },
    #[error("array `{array}`: extent not expressible affinely ({reason})")]
    NotAffine { array: String, reason: String },
    #[error("array `{0}` is never accessed")]
    Unaccessed(String),
    #[error("call to `{callee}` needs {required} slots of `{array}`, which has {available}")]
    CallExtent { callee: String, array: String, required: Box<IndexExpr>, available: Box<IndexExpr> },
    #[error(transparent)]
    Index(#[from] IndexError),
}

/// The size parameter name every lowered function uses.
pub const SIZE_VAR: &str = "n";

/// Smallest size for which the body of `f` runs past its guard.
pub fn min_active_size(f: &IcodeFunction) -> i64 {
    let mut n = 2;
    if let Some(t) = f.guard_threshold() {
        while n <= t {
            n *= 2;
        }
    }
    n
}

/// `b - a >= 0` for every power of two `n >= n_min`, where both sides depend on `n` only.
pub fn le_for_all(a: &IndexExpr, b: &IndexExpr, n_min: i64) -> Option<bool> {
    let d = b.sub(a).ok()?;
    if !d.is_affine() || d.terms().keys().any(|v| v != SIZE_VAR) {
        return None;
    }
    let c = d.coeff(SIZE_VAR);
    let num = c * n_min + d.constant_term();
    Some(c >= 0 && num >= 0)
}

fn affine_max(a: &IndexExpr, b: &IndexExpr, n_min: i64, array: &str) -> Result<IndexExpr, RangeError> {
    match (le_for_all(a, b, n_min), le_for_all(b, a, n_min)) {
        (Some(true), _) => Ok(b.clone()),
        (_, Some(true)) => Ok(a.clone()),
        _ => Err(RangeError::NotAffine {
            array: array.to_string(),
            reason: format!("max({a}, {b}) changes branch with n"),
        }),
    }
}

/// Extreme value of `index` over the box `0 <= var < trip` for every enclosing loop.
fn box_extreme(index: &IndexExpr, loops: &[(String, IndexExpr)], upper: bool, array: &str) -> Result<IndexExpr, RangeError> {
    let mut e = IndexExpr::from_parts(
        index.terms().iter().map(|(k, v)| (k.clone(), *v)),
        index.constant_term(),
        index.divisor(),
    )?;
    for (var, trip) in loops.iter().rev() {
        let c = e.coeff(var);
        if c == 0 {
            continue;
        }
        let take_top = (c > 0) == upper;
        let value = if take_top { trip.add_const(-1) } else { IndexExpr::constant(0) };
        e = e.substitute(var, &value)?;
    }
    if let Some(m) = index.mod_term() {
        let hi = m.coeff * (m.modulus - 1);
        let bound = if (m.coeff > 0) == upper { hi } else { 0 };
        e = e.add_const(bound);
    }
    if e.terms().keys().any(|v| v != SIZE_VAR) {
        return Err(RangeError::NotAffine {
            array: array.to_string(),
            reason: format!("index {index} depends on a variable outside the iteration box"),
        });
    }
    Ok(e)
}

struct FunctionAccesses {
    direct: BTreeMap<String, IndexExpr>,
    declared: BTreeMap<String, IndexExpr>,
    calls: Vec<(String, Vec<String>, IndexExpr)>,
}

fn collect(f: &IcodeFunction) -> Result<FunctionAccesses, RangeError> {
    let n_min = min_active_size(f);
    let mut acc = FunctionAccesses { direct: BTreeMap::new(), declared: BTreeMap::new(), calls: Vec::new() };

    fn record(
        acc: &mut FunctionAccesses,
        array: &str,
        index: &IndexExpr,
        loops: &[(String, IndexExpr)],
        n_min: i64,
    ) -> Result<(), RangeError> {
        let lo = box_extreme(index, loops, false, array)?;
        if le_for_all(&IndexExpr::constant(0), &lo, n_min) != Some(true) {
            return Err(RangeError::NegativeIndex { array: array.to_string(), index: Box::new(index.clone()) });
        }
        let ext = box_extreme(index, loops, true, array)?.add_const(1);
        let merged = match acc.direct.get(array) {
            Some(prev) => affine_max(prev, &ext, n_min, array)?,
            None => ext,
        };
        acc.direct.insert(array.to_string(), merged);
        Ok(())
    }

    fn walk(
        stmts: &[Stmt],
        loops: &mut Vec<(String, IndexExpr)>,
        acc: &mut FunctionAccesses,
        n_min: i64,
    ) -> Result<(), RangeError> {
        for s in stmts {
            match s {
                Stmt::Alloc { array, extent } => {
                    acc.declared.insert(array.clone(), extent.clone());
                }
                Stmt::Loop { var, trip, body } => {
                    if trip.terms().keys().any(|v| v != SIZE_VAR) {
                        return Err(RangeError::NotAffine {
                            array: String::new(),
                            reason: format!("trip count {trip} of loop `{var}` is not a function of n"),
                        });
                    }
                    loops.push((var.clone(), trip.clone()));
                    walk(body, loops, acc, n_min)?;
                    loops.pop();
                }
                Stmt::Def { value, .. } => {
                    for (a, i) in value.reads() {
                        record(acc, &a, &i, loops, n_min)?;
                    }
                }
                Stmt::Store { array, index, value } => {
                    for (a, i) in value.reads() {
                        record(acc, &a, &i, loops, n_min)?;
                    }
                    record(acc, array, index, loops, n_min)?;
                }
                Stmt::Call { callee, arrays, size } => {
                    acc.calls.push((callee.clone(), arrays.clone(), size.clone()));
                }
                Stmt::Guard { .. } | Stmt::Free { .. } => {}
            }
        }
        Ok(())
    }

    walk(&f.body, &mut Vec::new(), &mut acc, n_min)?;
    Ok(acc)
}

/// Infers the extent of every parameter and local array of every function,
/// cross-checking allocations and call sites.
pub fn analyze_program(program: &IcodeProgram) -> Result<BTreeMap<String, ExtentMap>, RangeError> {
    let mut accesses = BTreeMap::new();
    for (name, f) in &program.functions {
        accesses.insert(name.clone(), collect(f)?);
    }
    let mut current: BTreeMap<String, BTreeMap<String, IndexExpr>> =
        accesses.iter().map(|(k, a)| (k.clone(), a.direct.clone())).collect();

    // Fixpoint over call-site requirements; recursion shrinks sizes, so this settles fast.
    for _ in 0..8 {
        let mut changed = false;
        for (name, f) in &program.functions {
            let n_min = min_active_size(f);
            for (callee, arrays, size) in &accesses[name].calls {
                let cf = program.function(callee).ok_or_else(|| RangeError::UnknownFunction(callee.clone()))?;
                for (param, arg) in cf.array_params.iter().zip(arrays) {
                    let Some(req) = current[callee].get(param) else { continue };
                    let req = req.substitute(SIZE_VAR, size)?;
                    let merged = match current[name].get(arg) {
                        Some(prev) => affine_max(prev, &req, n_min, arg)?,
                        None => req,
                    };
                    if current[name].get(arg) != Some(&merged) {
                        current.get_mut(name).expect("function present").insert(arg.clone(), merged);
                        changed = true;
                    }
                }
            }
        }
        if !changed {
            break;
        }
    }

    let mut out = BTreeMap::new();
    for (name, f) in &program.functions {
        let n_min = min_active_size(f);
        let acc = &accesses[name];
        let inferred = &current[name];
        let mut map = ExtentMap::new();
        for a in f.declared_arrays() {
            let ext = match (inferred.get(&a), acc.declared.get(&a)) {
                (Some(inf), Some(decl)) => {
                    if le_for_all(inf, decl, n_min) != Some(true) {
                        return Err(RangeError::ExceedsAllocation {
                            array: a.clone(),
                            inferred: Box::new(inf.clone()),
                            declared: Box::new(decl.clone()),
                        });
                    }
                    inf.clone()
                }
                (Some(inf), None) => inf.clone(),
                (None, Some(decl)) => decl.clone(),
                (None, None) => return Err(RangeError::Unaccessed(a.clone())),
            };
            map.insert(a, ext);
        }
        out.insert(name.clone(), map);
    }

    // Call sites must hand over arrays at least as large as the callee needs.
    for (name, f) in &program.functions {
        let n_min = min_active_size(f);
        for (callee, arrays, size) in &accesses[name].calls {
            let cf = &program.functions[callee];
            for (param, arg) in cf.array_params.iter().zip(arrays) {
                let req = out[callee][param].substitute(SIZE_VAR, size)?;
                let have = &out[name][arg];
                if le_for_all(&req, have, n_min) != Some(true) {
                    return Err(RangeError::CallExtent {
                        callee: callee.clone(),
                        array: arg.clone(),
                        required: Box::new(req),
                        available: Box::new(have.clone()),
                    });
                }
            }
        }
    }
    Ok(out)
}

/// Extents for the arrays of `entry`.
pub fn range_analysis(program: &IcodeProgram, entry: &str) -> Result<ExtentMap, RangeError> {
    let mut all = analyze_program(program)?;
    all.remove(entry).ok_or_else(|| RangeError::UnknownFunction(entry.to_string()))
}
