//! Σ-SPL → SPL recognizers for pure data-movement terms.

use crate::icode::IndexExpr;
use crate::matrix::RealMat;
use crate::sigma::{eval_sigma, BasisOuterProduct, SigmaTerm, SIZE_VAR};
use crate::spl::{eval_real, SizeExpr, SplExpr};

/// Minimum number of probe sizes at which a term must evaluate.
pub const MIN_VALID_PROBES: usize = 2;

/// The SPL size denoted by an extent of the form `c·n/d` or a literal.
pub fn size_of(e: &IndexExpr) -> Option<SizeExpr> {
    if let Some(c) = e.as_constant() {
        return (c > 0).then_some(SizeExpr::Const(c as u64));
    }
    if !e.is_affine() || e.constant_term() != 0 || e.terms().len() != 1 {
        return None;
    }
    let c = e.coeff(SIZE_VAR);
    (c > 0).then(|| SizeExpr::sym(c as u64, e.divisor() as u64))
}

/// Matrices of `term` at the probe sizes where it evaluates.
pub fn probe_matrices(term: &SigmaTerm, probes: &[i64]) -> Option<Vec<(i64, RealMat)>> {
    let out: Vec<_> = probes.iter().filter_map(|&n| eval_sigma(term, n).ok().map(|m| (n, m))).collect();
    (out.len() >= MIN_VALID_PROBES.min(probes.len()) && !out.is_empty()).then_some(out)
}

fn extents(term: &SigmaTerm) -> Option<(SizeExpr, SizeExpr)> {
    let a = term.atoms().into_iter().next()?;
    Some((size_of(&a.out_extent)?, size_of(&a.in_extent)?))
}

fn matches_everywhere(candidate: &SplExpr, mats: &[(i64, RealMat)]) -> bool {
    mats.iter().all(|(n, m)| eval_real(candidate, *n).map(|c| c == *m).unwrap_or(false))
}

/// `I(size)` when the term is the identity at every probe.
pub fn recognize_identity(term: &SigmaTerm, probes: &[i64]) -> Option<SplExpr> {
    let (rows, cols) = extents(term)?;
    if rows != cols {
        return None;
    }
    let mats = probe_matrices(term, probes)?;
    let candidate = SplExpr::I(rows);
    matches_everywhere(&candidate, &mats).then_some(candidate)
}

fn divisors(v: usize) -> Vec<usize> {
    (2..=v).filter(|d| v.is_multiple_of(*d)).collect()
}

/// Candidate strides for `L(size, s)`: literal divisors of the largest probe
/// first, then `size/2^j`.
fn stride_candidates(size: &SizeExpr, smallest: usize, largest: usize) -> Vec<SizeExpr> {
    let mut out: Vec<SizeExpr> = divisors(largest).into_iter().map(|d| SizeExpr::Const(d as u64)).collect();
    if size.is_symbolic() {
        for d in divisors(smallest) {
            let q = smallest / d;
            if q > 1 && q.is_power_of_two() {
                if let Some(s) = size.div_const(q as u64) {
                    out.push(s);
                }
            }
        }
    }
    out
}

/// A candidate matches when it is defined at enough probes and agrees
/// exactly wherever it is defined.
fn matches_where_defined(candidate: &SplExpr, mats: &[(i64, RealMat)]) -> bool {
    let mut defined = 0;
    for (n, m) in mats {
        match eval_real(candidate, *n) {
            Ok(c) if c == *m => defined += 1,
            Ok(_) => return false,
            Err(_) => {}
        }
    }
    defined >= MIN_VALID_PROBES.min(mats.len())
}

fn match_stride(rows: SizeExpr, mats: &[(i64, RealMat)]) -> Option<SplExpr> {
    let (_, small) = mats.iter().min_by_key(|(n, _)| *n)?;
    let (_, large) = mats.iter().max_by_key(|(n, _)| *n)?;
    if !large.is_permutation() {
        return None;
    }
    for s in stride_candidates(&rows, small.rows(), large.rows()) {
        let candidate = SplExpr::L { size: rows.clone(), stride: s };
        if matches_where_defined(&candidate, mats) {
            return Some(candidate);
        }
    }
    None
}

/// `L(size, s)` over the real index space when one stride reproduces the
/// term exactly at every probe; identity terms give `I(size)`.
pub fn recognize_stride_permutation(term: &SigmaTerm, probes: &[i64]) -> Option<SplExpr> {
    if let Some(id) = recognize_identity(term, probes) {
        return Some(id);
    }
    let (rows, cols) = extents(term)?;
    if rows != cols {
        return None;
    }
    let mats = probe_matrices(term, probes)?;
    match_stride(rows, &mats)
}

/// `RC(L(size, s))` (or `RC(I(size))`) over the complex index space, found
/// through [`detect_interleaved_complex`].
pub fn recognize_complex_permutation(term: &SigmaTerm, probes: &[i64]) -> Option<SplExpr> {
    let complex = detect_interleaved_complex(term, probes)?;
    let (rows, cols) = extents(&complex)?;
    if rows != cols {
        return None;
    }
    let mats = probe_matrices(&complex, probes)?;
    if matches_everywhere(&SplExpr::I(rows.clone()), &mats) {
        return Some(SplExpr::rc(SplExpr::I(rows)));
    }
    match_stride(rows, &mats).map(SplExpr::rc)
}

fn differs_by_one(lo: &IndexExpr, hi: &IndexExpr) -> bool {
    hi.sub(lo).ok().and_then(|d| d.as_constant()) == Some(1)
}

fn halve(a: &BasisOuterProduct) -> Option<BasisOuterProduct> {
    Some(BasisOuterProduct {
        scatter: a.scatter.div_pow2(2).ok()?,
        gather: a.gather.div_pow2(2).ok()?,
        out_extent: a.out_extent.div_pow2(2).ok()?,
        in_extent: a.in_extent.div_pow2(2).ok()?,
        weight: a.weight,
    })
}

fn pair_atoms(terms: &[SigmaTerm]) -> Option<Vec<SigmaTerm>> {
    let mut atoms = Vec::new();
    let mut nested = Vec::new();
    for t in terms {
        match t {
            SigmaTerm::Atom(a) => atoms.push(a),
            other => nested.push(pair_term(other)?),
        }
    }
    let mut used = vec![false; atoms.len()];
    let mut out = Vec::new();
    for i in 0..atoms.len() {
        if used[i] {
            continue;
        }
        let pairs = |lo: &BasisOuterProduct, hi: &BasisOuterProduct| {
            differs_by_one(&lo.scatter, &hi.scatter) && differs_by_one(&lo.gather, &hi.gather) && lo.weight == hi.weight
        };
        let (partner, lo) = (0..atoms.len()).filter(|&j| !used[j] && j != i).find_map(|j| {
            if pairs(atoms[i], atoms[j]) {
                Some((j, atoms[i]))
            } else if pairs(atoms[j], atoms[i]) {
                Some((j, atoms[j]))
            } else {
                None
            }
        })?;
        used[i] = true;
        used[partner] = true;
        out.push(SigmaTerm::Atom(halve(lo)?));
    }
    out.extend(nested);
    Some(out)
}

fn pair_term(term: &SigmaTerm) -> Option<SigmaTerm> {
    match term {
        SigmaTerm::Atom(_) => None,
        SigmaTerm::Sum(ts) => Some(SigmaTerm::Sum(pair_atoms(ts)?)),
        SigmaTerm::ISum { var, trip, body } => Some(SigmaTerm::ISum {
            var: var.clone(),
            trip: trip.clone(),
            body: Box::new(pair_term(body)?),
        }),
    }
}

/// Pairs every atom `(2a, 2b)` with a companion `(2a+1, 2b+1)` and returns
/// the induced term over complex indices, checked to satisfy
/// `real = complex ⊗ I_2` at every probe.
pub fn detect_interleaved_complex(term: &SigmaTerm, probes: &[i64]) -> Option<SigmaTerm> {
    let complex = pair_term(term)?;
    let real = probe_matrices(term, probes)?;
    let two = RealMat::identity(2);
    for (n, m) in &real {
        let c = eval_sigma(&complex, *n).ok()?;
        if c.kron(&two) != *m {
            return None;
        }
    }
    Some(complex)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn n() -> IndexExpr {
        IndexExpr::var(SIZE_VAR)
    }

    fn move_term(trip: IndexExpr, ext: IndexExpr, pairs: &[(IndexExpr, IndexExpr)]) -> SigmaTerm {
        SigmaTerm::ISum {
            var: "i".into(),
            trip,
            body: Box::new(SigmaTerm::Sum(
                pairs
                    .iter()
                    .map(|(s, g)| {
                        SigmaTerm::Atom(BasisOuterProduct {
                            scatter: s.clone(),
                            gather: g.clone(),
                            out_extent: ext.clone(),
                            in_extent: ext.clone(),
                            weight: None,
                        })
                    })
                    .collect(),
            )),
        }
    }

    fn i(c: i64, k: i64) -> IndexExpr {
        IndexExpr::var("i").mul_const(c).add_const(k)
    }

    #[test]
    fn identity_term() {
        let t = move_term(n(), n(), &[(i(1, 0), i(1, 0))]);
        assert_eq!(recognize_stride_permutation(&t, &[4, 8, 16]), Some(SplExpr::I(SizeExpr::n())));
    }

    #[test]
    fn real_stride_two() {
        // y[i] = x[2i]; y[i + n/2] = x[2i + 1]
        let half = n().div_pow2(2).unwrap();
        let t = move_term(half.clone(), n(), &[(i(1, 0), i(2, 0)), (i(1, 0).add(&half).unwrap(), i(2, 1))]);
        assert_eq!(
            recognize_stride_permutation(&t, &[4, 8, 16]),
            Some(SplExpr::L { size: SizeExpr::n(), stride: SizeExpr::Const(2) })
        );
    }

    #[test]
    fn unpaired_atom_has_no_complex_form() {
        let t = move_term(n().div_pow2(2).unwrap(), n(), &[(i(2, 0), i(2, 0))]);
        assert!(detect_interleaved_complex(&t, &[4, 8, 16]).is_none());
    }

    #[test]
    fn size_conversion() {
        assert_eq!(size_of(&n().mul_const(2)), Some(SizeExpr::sym(2, 1)));
        assert_eq!(size_of(&n().div_pow2(2).unwrap()), Some(SizeExpr::n_over(2)));
        assert_eq!(size_of(&IndexExpr::constant(8)), Some(SizeExpr::Const(8)));
        assert_eq!(size_of(&n().add_const(1)), None);
    }
}
