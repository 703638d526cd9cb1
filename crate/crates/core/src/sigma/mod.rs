//! Σ-SPL: iterative sums of scatter·gather basis-vector outer products, and
//! the lifting of pure data-movement loops into them.

mod range;

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use thiserror::Error;

use crate::icode::{IndexError, IndexExpr, ScalarExpr, Stmt};
use crate::matrix::RealMat;

pub use range::{analyze_program, le_for_all, min_active_size, range_analysis, ExtentMap, RangeError, SIZE_VAR};

/// Maximum literal trip count unrolled before lifting a loop body.
pub const UNROLL_LIMIT: i64 = 8;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum SigmaError {
    #[error("statement is not an array-to-array move: {0}")]
    NotAMove(String),
    #[error("array `{0}` is both read and written by the loop")]
    InPlace(String),
    #[error("overlapping writes to row {row} at n = {n}")]
    Overlap { n: i64, row: i64 },
    #[error("index ({row}, {col}) outside the {rows}x{cols} space at n = {n}")]
    OutOfRange { n: i64, row: i64, col: i64, rows: i64, cols: i64 },
    #[error("no extent for array `{0}`")]
    UnknownArray(String),
    #[error("expected a loop")]
    NotALoop,
    #[error(transparent)]
    Index(#[from] IndexError),
}

/// `weight · e_{scatter} · e_{gather}^T` inside an `out_extent × in_extent` space.
#[derive(Debug, Clone, PartialEq)]
pub struct BasisOuterProduct {
    pub scatter: IndexExpr,
    pub gather: IndexExpr,
    pub out_extent: IndexExpr,
    pub in_extent: IndexExpr,
    pub weight: Option<f64>,
}

impl BasisOuterProduct {
    pub fn weight(&self) -> f64 {
        self.weight.unwrap_or(1.0)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum SigmaTerm {
    ISum { var: String, trip: IndexExpr, body: Box<SigmaTerm> },
    Sum(Vec<SigmaTerm>),
    Atom(BasisOuterProduct),
}

impl SigmaTerm {
    pub fn atoms(&self) -> Vec<&BasisOuterProduct> {
        match self {
            SigmaTerm::Atom(a) => vec![a],
            SigmaTerm::Sum(ts) => ts.iter().flat_map(|t| t.atoms()).collect(),
            SigmaTerm::ISum { body, .. } => body.atoms(),
        }
    }

    /// Rebuilds the term with every atom passed through `f`; `None` aborts.
    pub fn try_map_atoms(&self, f: &impl Fn(&BasisOuterProduct) -> Option<BasisOuterProduct>) -> Option<SigmaTerm> {
        Some(match self {
            SigmaTerm::Atom(a) => SigmaTerm::Atom(f(a)?),
            SigmaTerm::Sum(ts) => SigmaTerm::Sum(ts.iter().map(|t| t.try_map_atoms(f)).collect::<Option<_>>()?),
            SigmaTerm::ISum { var, trip, body } => SigmaTerm::ISum {
                var: var.clone(),
                trip: trip.clone(),
                body: Box::new(body.try_map_atoms(f)?),
            },
        })
    }

    /// Every `(row, col, weight)` contribution at size `n`.
    pub fn enumerate(&self, n: i64) -> Result<Vec<(i64, i64, f64)>, SigmaError> {
        let mut env = BTreeMap::new();
        env.insert(SIZE_VAR.to_string(), n);
        let mut out = Vec::new();
        self.enumerate_in(&mut env, &mut out)?;
        Ok(out)
    }

    fn enumerate_in(&self, env: &mut BTreeMap<String, i64>, out: &mut Vec<(i64, i64, f64)>) -> Result<(), SigmaError> {
        match self {
            SigmaTerm::Atom(a) => {
                out.push((a.scatter.eval(env)?, a.gather.eval(env)?, a.weight()));
            }
            SigmaTerm::Sum(ts) => {
                for t in ts {
                    t.enumerate_in(env, out)?;
                }
            }
            SigmaTerm::ISum { var, trip, body } => {
                let t = trip.eval(env)?;
                for k in 0..t {
                    env.insert(var.clone(), k);
                    body.enumerate_in(env, out)?;
                }
                env.remove(var);
            }
        }
        Ok(())
    }

    /// `(rows, cols)` at size `n`, taken from the first atom.
    pub fn dims(&self, n: i64) -> Result<Option<(i64, i64)>, SigmaError> {
        match self.atoms().first() {
            None => Ok(None),
            Some(a) => Ok(Some((a.out_extent.eval_at(SIZE_VAR, n)?, a.in_extent.eval_at(SIZE_VAR, n)?))),
        }
    }
}

/// The matrix a Σ-SPL term denotes at size `n`. An empty sum is the 0×0 zero matrix.
pub fn eval_sigma(term: &SigmaTerm, n: i64) -> Result<RealMat, SigmaError> {
    let Some((rows, cols)) = term.dims(n)? else {
        return Ok(RealMat::zeros(0, 0));
    };
    let mut m = RealMat::zeros(rows as usize, cols as usize);
    for (r, c, w) in term.enumerate(n)? {
        if r < 0 || r >= rows || c < 0 || c >= cols {
            return Err(SigmaError::OutOfRange { n, row: r, col: c, rows, cols });
        }
        m[(r as usize, c as usize)] += w;
    }
    Ok(m)
}

/// A loop lifted to Σ-SPL together with the array layout of its spaces.
#[derive(Debug, Clone, PartialEq)]
pub struct LiftedLoop {
    pub term: SigmaTerm,
    /// Destination arrays, concatenated in declaration order.
    pub outputs: Vec<String>,
    /// Source arrays, concatenated in declaration order.
    pub inputs: Vec<String>,
}

/// Offsets of each array inside the concatenation of `arrays`, plus the total extent.
pub fn layout(arrays: &[String], extents: &ExtentMap) -> Result<(BTreeMap<String, IndexExpr>, IndexExpr), SigmaError> {
    let mut offsets = BTreeMap::new();
    let mut total = IndexExpr::constant(0);
    for a in arrays {
        offsets.insert(a.clone(), total.clone());
        let e = extents.get(a).ok_or_else(|| SigmaError::UnknownArray(a.clone()))?;
        total = total.add(e)?;
    }
    Ok((offsets, total))
}

/// Arrays from `set`, ordered as in the extent map.
pub fn ordered(set: &BTreeSet<String>, extents: &ExtentMap) -> Vec<String> {
    extents.keys().filter(|k| set.contains(*k)).cloned().collect()
}

fn collect_moves(stmts: &[Stmt], dsts: &mut BTreeSet<String>, srcs: &mut BTreeSet<String>) -> Result<(), SigmaError> {
    for s in stmts {
        match s {
            Stmt::Store { array, value: ScalarExpr::Read { array: src, .. }, .. } => {
                dsts.insert(array.clone());
                srcs.insert(src.clone());
            }
            Stmt::Loop { body, .. } => collect_moves(body, dsts, srcs)?,
            Stmt::Store { array, index, value } => {
                return Err(SigmaError::NotAMove(format!("{array}[{index}] = {value}")));
            }
            other => return Err(SigmaError::NotAMove(format!("{other}"))),
        }
    }
    Ok(())
}

struct Spaces<'a> {
    out_off: &'a BTreeMap<String, IndexExpr>,
    in_off: &'a BTreeMap<String, IndexExpr>,
    out_total: &'a IndexExpr,
    in_total: &'a IndexExpr,
}

fn build(stmts: &[Stmt], spaces: &Spaces<'_>) -> Result<Vec<SigmaTerm>, SigmaError> {
    let mut out = Vec::new();
    for s in stmts {
        match s {
            Stmt::Store { array, index, value: ScalarExpr::Read { array: src, index: g } } => {
                out.push(SigmaTerm::Atom(BasisOuterProduct {
                    scatter: spaces.out_off[array].add(index)?,
                    gather: spaces.in_off[src].add(g)?,
                    out_extent: spaces.out_total.clone(),
                    in_extent: spaces.in_total.clone(),
                    weight: None,
                }));
            }
            Stmt::Loop { var, trip, body } => out.push(SigmaTerm::ISum {
                var: var.clone(),
                trip: trip.clone(),
                body: Box::new(SigmaTerm::Sum(build(body, spaces)?)),
            }),
            _ => unreachable!("collect_moves accepted only moves and loops"),
        }
    }
    Ok(out)
}

/// Lifts a loop nest made only of `dst[f] = src[g]` moves into
/// `ISum(var, trip, Sum(atoms...))`. Inner loops with literal trips up to
/// [`UNROLL_LIMIT`] are unrolled first.
pub fn lift_loop(stmt: &Stmt, extents: &ExtentMap) -> Result<LiftedLoop, SigmaError> {
    let Stmt::Loop { var, trip, body } = stmt else {
        return Err(SigmaError::NotALoop);
    };
    let body = crate::icode::unroll_block(body, UNROLL_LIMIT);
    let mut dsts = BTreeSet::new();
    let mut srcs = BTreeSet::new();
    collect_moves(&body, &mut dsts, &mut srcs)?;
    if let Some(a) = dsts.intersection(&srcs).next() {
        return Err(SigmaError::InPlace(a.clone()));
    }
    let outputs = ordered(&dsts, extents);
    let inputs = ordered(&srcs, extents);
    let (out_off, out_total) = layout(&outputs, extents)?;
    let (in_off, in_total) = layout(&inputs, extents)?;
    let spaces = Spaces { out_off: &out_off, in_off: &in_off, out_total: &out_total, in_total: &in_total };
    let term = SigmaTerm::ISum {
        var: var.clone(),
        trip: trip.clone(),
        body: Box::new(SigmaTerm::Sum(build(&body, &spaces)?)),
    };
    check_write_once(&term)?;
    Ok(LiftedLoop { term, outputs, inputs })
}

/// Probe sizes used to check that scatters never collide.
const WRITE_ONCE_PROBES: [i64; 3] = [4, 8, 16];

fn check_write_once(term: &SigmaTerm) -> Result<(), SigmaError> {
    for n in WRITE_ONCE_PROBES {
        // A size at which the loop cannot even be evaluated is not a witness.
        let Ok(entries) = term.enumerate(n) else { continue };
        let mut seen = BTreeSet::new();
        for (r, _, _) in entries {
            if !seen.insert(r) {
                return Err(SigmaError::Overlap { n, row: r });
            }
        }
    }
    Ok(())
}

fn fmt_atom(f: &mut fmt::Formatter<'_>, a: &BasisOuterProduct) -> fmt::Result {
    if let Some(w) = a.weight {
        write!(f, "{w:?} * ")?;
    }
    write!(f, "Scat({}) * Gath({})", a.scatter, a.gather)
}

impl fmt::Display for SigmaTerm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            SigmaTerm::Atom(a) => fmt_atom(f, a),
            SigmaTerm::Sum(ts) => {
                write!(f, "Sum(")?;
                for (i, t) in ts.iter().enumerate() {
                    if i > 0 {
                        write!(f, ", ")?;
                    }
                    write!(f, "{t}")?;
                }
                write!(f, ")")
            }
            SigmaTerm::ISum { var, trip, body } => write!(f, "ISum({var}, {trip}, {body})"),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn atom(s: IndexExpr, g: IndexExpr, ext: i64) -> SigmaTerm {
        SigmaTerm::Atom(BasisOuterProduct {
            scatter: s,
            gather: g,
            out_extent: IndexExpr::constant(ext),
            in_extent: IndexExpr::constant(ext),
            weight: None,
        })
    }

    #[test]
    fn identity_sum_evaluates_to_identity() {
        let n = IndexExpr::var(SIZE_VAR);
        let t = SigmaTerm::ISum {
            var: "j".into(),
            trip: n.clone(),
            body: Box::new(SigmaTerm::Sum(vec![SigmaTerm::Atom(BasisOuterProduct {
                scatter: IndexExpr::var("j"),
                gather: IndexExpr::var("j"),
                out_extent: n.clone(),
                in_extent: n,
                weight: None,
            })])),
        };
        assert_eq!(eval_sigma(&t, 4).unwrap(), RealMat::identity(4));
        assert_eq!(t.to_string(), "ISum(j, n, Sum(Scat(j) * Gath(j)))");
    }

    #[test]
    fn empty_sum_is_zero() {
        assert_eq!(eval_sigma(&SigmaTerm::Sum(vec![]), 4).unwrap(), RealMat::zeros(0, 0));
    }

    #[test]
    fn out_of_range_atom_rejected() {
        let t = atom(IndexExpr::constant(5), IndexExpr::constant(0), 4);
        assert!(matches!(eval_sigma(&t, 4), Err(SigmaError::OutOfRange { .. })));
    }

    #[test]
    fn isum_equals_sum_of_unrolled_iterations() {
        let t = SigmaTerm::ISum {
            var: "j".into(),
            trip: IndexExpr::constant(3),
            body: Box::new(SigmaTerm::Sum(vec![atom(IndexExpr::var("j"), IndexExpr::var("j").mul_const(2), 6)])),
        };
        let unrolled = SigmaTerm::Sum(
            (0..3).map(|k| atom(IndexExpr::constant(k), IndexExpr::constant(2 * k), 6)).collect(),
        );
        assert_eq!(eval_sigma(&t, 4).unwrap(), eval_sigma(&unrolled, 4).unwrap());
    }
}
