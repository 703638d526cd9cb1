//! Pointwise scale-and-add loops (`y[i] = y[i] + a*x[i]`) as `Augment` blocks.

use std::collections::{BTreeMap, BTreeSet};

use crate::icode::{IndexExpr, ScalarExpr, Stmt};
use crate::sigma::{layout, ordered, BasisOuterProduct, ExtentMap, SigmaTerm};
use crate::spl::SplExpr;

use super::butterfly::NoMatch;
use super::recognize::size_of;

/// A recognized pointwise combination and its Σ-SPL form.
#[derive(Debug, Clone, PartialEq)]
pub struct PointwiseShape {
    pub sigma: SigmaTerm,
    pub candidate: SplExpr,
    pub outputs: Vec<String>,
    pub inputs: Vec<String>,
    /// Per-input coefficient, in input order.
    pub coefficients: Vec<f64>,
}

type Terms = Vec<(f64, String, IndexExpr)>;

fn linear_terms(e: &ScalarExpr) -> Option<Terms> {
    Some(match e {
        ScalarExpr::Read { array, index } => vec![(1.0, array.clone(), index.clone())],
        ScalarExpr::Add(a, b) => {
            let mut t = linear_terms(a)?;
            t.extend(linear_terms(b)?);
            t
        }
        ScalarExpr::Sub(a, b) => {
            let mut t = linear_terms(a)?;
            t.extend(linear_terms(b)?.into_iter().map(|(c, a, i)| (-c, a, i)));
            t
        }
        ScalarExpr::Neg(a) => linear_terms(a)?.into_iter().map(|(c, a, i)| (-c, a, i)).collect(),
        ScalarExpr::Mul(a, b) => match (a.as_ref(), b.as_ref()) {
            (ScalarExpr::Lit(c), x) | (x, ScalarExpr::Lit(c)) => {
                linear_terms(x)?.into_iter().map(|(k, a, i)| (k * c, a, i)).collect()
            }
            _ => return None,
        },
        ScalarExpr::Div(a, b) => match b.as_ref() {
            ScalarExpr::Lit(c) if *c != 0.0 => linear_terms(a)?.into_iter().map(|(k, a, i)| (k / c, a, i)).collect(),
            _ => return None,
        },
        _ => return None,
    })
}

fn inline(e: &ScalarExpr, defs: &BTreeMap<String, ScalarExpr>) -> ScalarExpr {
    e.map(&|x| match x {
        ScalarExpr::Temp(t) => defs.get(&t).map(|v| inline(v, defs)).unwrap_or(ScalarExpr::Temp(t)),
        other => other,
    })
}

/// Recognizes a single loop whose every store is `out[f] = Σ c_k · in_k[f]`
/// with literal coefficients that are uniform per input array.
pub fn pointwise_shape(stmt: &Stmt, extents: &ExtentMap) -> Result<PointwiseShape, NoMatch> {
    let Stmt::Loop { var, trip, body } = stmt else {
        return Err(NoMatch("not a loop".into()));
    };
    let mut defs = BTreeMap::new();
    let mut stores = Vec::new();
    for s in body {
        match s {
            Stmt::Def { temp, value } => {
                defs.insert(temp.clone(), inline(value, &defs));
            }
            Stmt::Store { array, index, value } => stores.push((array, index, inline(value, &defs))),
            _ => return Err(NoMatch("multilinear: nested loops or calls in body".into())),
        }
    }
    if stores.is_empty() {
        return Err(NoMatch("multilinear: loop stores nothing".into()));
    }
    let mut coeffs: BTreeMap<String, f64> = BTreeMap::new();
    let mut dsts = BTreeSet::new();
    let mut per_store = Vec::new();
    for (array, index, value) in &stores {
        let terms = linear_terms(value).ok_or_else(|| NoMatch(format!("multilinear: `{value}` is not a literal-weighted sum of reads")))?;
        let mut merged: BTreeMap<String, f64> = BTreeMap::new();
        for (c, a, i) in terms {
            if i != **index {
                return Err(NoMatch(format!("multilinear: read {a}[{i}] is not at the store index {index}")));
            }
            *merged.entry(a).or_insert(0.0) += c;
        }
        for (a, c) in &merged {
            match coeffs.get(a) {
                Some(prev) if prev != c => {
                    return Err(NoMatch(format!("multilinear: coefficient of `{a}` varies between stores")));
                }
                _ => {
                    coeffs.insert(a.clone(), *c);
                }
            }
        }
        dsts.insert((*array).clone());
        per_store.push(((*array).clone(), (*index).clone(), merged));
    }
    if dsts.len() != 1 {
        return Err(NoMatch("multilinear: more than one destination array".into()));
    }
    let outputs = ordered(&dsts, extents);
    let inputs = ordered(&coeffs.keys().cloned().collect(), extents);
    let out_ext = extents.get(&outputs[0]).ok_or_else(|| NoMatch("multilinear: unknown output extent".into()))?;
    for a in &inputs {
        if extents.get(a) != Some(out_ext) {
            return Err(NoMatch(format!("multilinear: `{a}` and `{}` differ in extent", outputs[0])));
        }
    }
    let size = size_of(out_ext).ok_or_else(|| NoMatch(format!("multilinear: extent `{out_ext}` is not a size")))?;

    let to_err = |e: crate::sigma::SigmaError| NoMatch(e.to_string());
    let (out_off, out_total) = layout(&outputs, extents).map_err(to_err)?;
    let (in_off, in_total) = layout(&inputs, extents).map_err(to_err)?;
    let mut atoms = Vec::new();
    for (array, index, merged) in &per_store {
        for a in &inputs {
            let Some(&w) = merged.get(a) else { continue };
            let idx_err = |e: crate::icode::IndexError| NoMatch(e.to_string());
            atoms.push(SigmaTerm::Atom(BasisOuterProduct {
                scatter: out_off[array].add(index).map_err(idx_err)?,
                gather: in_off[a].add(index).map_err(idx_err)?,
                out_extent: out_total.clone(),
                in_extent: in_total.clone(),
                weight: (w != 1.0).then_some(w),
            }));
        }
    }
    let sigma = SigmaTerm::ISum { var: var.clone(), trip: trip.clone(), body: Box::new(SigmaTerm::Sum(atoms)) };

    let coefficients: Vec<f64> = inputs.iter().map(|a| coeffs[a]).collect();
    // Unit accumulation into the destination is a plain identity; every
    // other input keeps its scale, even at 1.
    let block = |a: &String, c: f64| {
        if c == 1.0 && outputs.contains(a) {
            SplExpr::I(size.clone())
        } else {
            SplExpr::scale(c, SplExpr::I(size.clone()))
        }
    };
    let mut blocks: Vec<SplExpr> = inputs.iter().zip(&coefficients).map(|(a, &c)| block(a, c)).collect();
    let mut candidate = blocks.pop().expect("at least one input");
    while let Some(b) = blocks.pop() {
        candidate = SplExpr::augment(b, candidate);
    }
    Ok(PointwiseShape { sigma, candidate, outputs, inputs, coefficients })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sigma::SIZE_VAR;

    #[test]
    fn axpy_shape() {
        let i = IndexExpr::var("i");
        let n = IndexExpr::var(SIZE_VAR);
        let body = vec![Stmt::Store {
            array: "y".into(),
            index: i.clone(),
            value: ScalarExpr::Add(
                Box::new(ScalarExpr::read("y", i.clone())),
                Box::new(ScalarExpr::Mul(Box::new(ScalarExpr::Lit(2.5)), Box::new(ScalarExpr::read("x", i)))),
            ),
        }];
        let stmt = Stmt::Loop { var: "i".into(), trip: n.clone(), body };
        let mut ext = ExtentMap::new();
        ext.insert("y".into(), n.clone());
        ext.insert("x".into(), n);
        let s = pointwise_shape(&stmt, &ext).unwrap();
        assert_eq!(s.candidate.to_string(), "Augment(I(n), Scale(2.5, I(n)))");
        assert_eq!(s.inputs, vec!["y", "x"]);
        assert_eq!(s.coefficients, vec![1.0, 2.5]);
    }

    #[test]
    fn unit_alpha_keeps_scale() {
        let i = IndexExpr::var("i");
        let n = IndexExpr::var(SIZE_VAR);
        let body = vec![Stmt::Store {
            array: "y".into(),
            index: i.clone(),
            value: ScalarExpr::Add(Box::new(ScalarExpr::read("y", i.clone())), Box::new(ScalarExpr::read("x", i))),
        }];
        let stmt = Stmt::Loop { var: "i".into(), trip: n.clone(), body };
        let mut ext = ExtentMap::new();
        ext.insert("y".into(), n.clone());
        ext.insert("x".into(), n);
        let s = pointwise_shape(&stmt, &ext).unwrap();
        assert_eq!(s.candidate.to_string(), "Augment(I(n), Scale(1.0, I(n)))");
    }
}
