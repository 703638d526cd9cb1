//! Base-case execution, equivalence matching and closure by induction.

use crate::icode::IcodeProgram;
use crate::matrix::RealMat;
use crate::spl::{SizeExpr, SplExpr};

use super::fragment::candidate_matrix;
use super::function::{base_size, kernel_matrix};
use super::{ClosedSpl, LiftError, RecursiveEquation, ASSURANCE};

/// A size-indexed family of candidate operators for a recursive kernel.
#[derive(Clone, Copy)]
pub struct Family {
    pub name: &'static str,
    pub build: fn(SizeExpr) -> SplExpr,
}

impl std::fmt::Debug for Family {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "Family({})", self.name)
    }
}

fn rc_dft(s: SizeExpr) -> SplExpr {
    SplExpr::rc(SplExpr::Dft(s))
}

fn rc_identity(s: SizeExpr) -> SplExpr {
    SplExpr::rc(SplExpr::I(s))
}

/// Families tried against the base case, in order.
pub const BASE_FAMILIES: [Family; 2] =
    [Family { name: "DFT", build: rc_dft }, Family { name: "I", build: rc_identity }];

/// The kernel's matrix at the base size `n0`.
pub fn base_case_matrix(program: &IcodeProgram, entry: &str, n0: i64) -> Result<RealMat, LiftError> {
    kernel_matrix(program, entry, n0)
}

/// `(max |matrix − candidate| <= tol, max deviation)`.
pub fn equivalence_match(matrix: &RealMat, candidate: &SplExpr, n: i64, tol: f64) -> Result<(bool, f64), LiftError> {
    let c = candidate_matrix(candidate, n)?;
    let d = matrix
        .max_abs_diff(&c)
        .ok_or(LiftError::Dimensions { oracle: matrix.dims(), candidate: c.dims() })?;
    Ok((d <= tol, d))
}

/// `Tensor(I(r), RC(X)) → RC(Tensor(I(r), X))`, bottom-up.
fn push_rc_outward(e: &SplExpr) -> SplExpr {
    e.rewrite(&|x| match x {
        SplExpr::Tensor(a, b) if matches!(*a, SplExpr::I(_)) && matches!(*b, SplExpr::Rc(_)) => {
            let SplExpr::Rc(inner) = *b else { unreachable!() };
            SplExpr::rc(SplExpr::Tensor(a, inner))
        }
        other => other,
    })
}

/// Substitutes `M(s) := base(s)` into the equation and checks, at every
/// size in `check_sizes`, that the result matches both the kernel oracle and
/// `base(n)` within `tol`. At least two sizes above the base size are required.
pub fn close_by_induction(
    program: &IcodeProgram,
    entry: &str,
    eq: &RecursiveEquation,
    base: &dyn Fn(&SizeExpr) -> SplExpr,
    check_sizes: &[i64],
    tol: f64,
) -> Result<(ClosedSpl, Vec<super::Check>), LiftError> {
    let n0 = base_size(program, entry)?;
    let sizes: Vec<i64> = check_sizes
        .iter()
        .copied()
        .filter(|&s| s > n0 && program.size_constraint.admits(s))
        .collect();
    if sizes.len() < 2 {
        return Err(LiftError::TooFewSizes { base: n0, got: check_sizes.to_vec() });
    }
    let substituted = push_rc_outward(&eq.rhs.fill_hole(&eq.name, &|s| base(s)));
    let claim = base(&eq.size);
    let mut checks = Vec::new();
    for &s in &sizes {
        let oracle = kernel_matrix(program, entry, s)?;
        let (_, against_kernel) = equivalence_match(&oracle, &substituted, s, tol)?;
        let (_, against_claim) = equivalence_match(&candidate_matrix(&claim, s)?, &substituted, s, tol)?;
        let deviation = against_kernel.max(against_claim);
        if deviation > tol {
            return Err(LiftError::InductionCheck { size: s, deviation });
        }
        checks.push(super::Check { size: s, deviation });
    }
    Ok((ClosedSpl { expr: substituted, assurance: ASSURANCE, checked_sizes: sizes }, checks))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rc_moves_out_of_identity_tensor() {
        let e = SplExpr::tensor(SplExpr::id(2u64), SplExpr::rc(SplExpr::Dft(SizeExpr::n_over(2))));
        assert_eq!(push_rc_outward(&e).to_string(), "RC(Tensor(I(2), F(n/2)))");
    }

    #[test]
    fn equivalence_of_rc_dft2() {
        let butterfly = RealMat::from_rows(&[
            vec![1.0, 0.0, 1.0, 0.0],
            vec![0.0, 1.0, 0.0, 1.0],
            vec![1.0, 0.0, -1.0, 0.0],
            vec![0.0, 1.0, 0.0, -1.0],
        ]);
        assert_eq!(equivalence_match(&butterfly, &rc_dft(SizeExpr::Const(2)), 2, 1e-12).unwrap(), (true, 0.0));
        assert!(!equivalence_match(&butterfly, &rc_identity(SizeExpr::Const(2)), 2, 1e-12).unwrap().0);
    }
}
