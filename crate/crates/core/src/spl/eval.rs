//! Dense evaluation of SPL expressions.

use std::f64::consts::PI;

use num_complex::Complex64;

use super::{ScalarValue, SplError, SplExpr};
use crate::matrix::{ComplexMat, RealMat};

/// `ω_m^e = exp(-2πi·e/m)`, exact at quarter turns.
pub fn root_of_unity(m: usize, e: i64) -> Complex64 {
    let m = m as i64;
    let r = e.rem_euclid(m);
    if (4 * r) % m == 0 {
        return match 4 * r / m {
            0 => Complex64::new(1.0, 0.0),
            1 => Complex64::new(0.0, -1.0),
            2 => Complex64::new(-1.0, 0.0),
            _ => Complex64::new(0.0, 1.0),
        };
    }
    let theta = -2.0 * PI * r as f64 / m as f64;
    Complex64::new(theta.cos(), theta.sin())
}

/// Twiddle diagonal of `T(n, k)`: entry `j·k + l` is `ω_n^{j·l}`.
pub fn standard_twiddles(n: usize, k: usize) -> Vec<Complex64> {
    let mut out = Vec::with_capacity(n);
    for j in 0..n / k {
        for l in 0..k {
            out.push(root_of_unity(n, (j * l) as i64));
        }
    }
    out
}

/// Evaluation context; the twiddle table is pluggable so self-checks can be
/// exercised against a deliberately broken one.
#[derive(Clone, Copy)]
pub struct Evaluator {
    pub twiddles: fn(usize, usize) -> Vec<Complex64>,
}

impl Default for Evaluator {
    fn default() -> Self {
        Evaluator { twiddles: standard_twiddles }
    }
}

fn diag(entries: &[Complex64]) -> ComplexMat {
    let mut m = ComplexMat::zeros(entries.len(), entries.len());
    for (i, &z) in entries.iter().enumerate() {
        m[(i, i)] = z;
    }
    m
}

impl Evaluator {
    pub fn eval(&self, expr: &SplExpr, n: i64) -> Result<ComplexMat, SplError> {
        Ok(match expr {
            SplExpr::Dft(s) => {
                let m = s.eval(n)?;
                ComplexMat::from_fn(m, m, |k, l| root_of_unity(m, (k * l) as i64))
            }
            SplExpr::I(s) => ComplexMat::identity(s.eval(n)?),
            SplExpr::L { size, stride } => {
                let total = size.eval(n)?;
                let m = stride.eval(n)?;
                if m == 0 || total % m != 0 {
                    return Err(SplError::NotDivisible { op: "L", size: total, param: m });
                }
                let k = total / m;
                let mut p = ComplexMat::zeros(total, total);
                // im + j ↦ jk + i, 0 <= i < k, 0 <= j < m
                for i in 0..k {
                    for j in 0..m {
                        p[(j * k + i, i * m + j)] = Complex64::new(1.0, 0.0);
                    }
                }
                p
            }
            SplExpr::T { size, block } => {
                let total = size.eval(n)?;
                let k = block.eval(n)?;
                if k == 0 || total % k != 0 {
                    return Err(SplError::NotDivisible { op: "T", size: total, param: k });
                }
                diag(&(self.twiddles)(total, k))
            }
            SplExpr::Diag(entries) => diag(entries),
            SplExpr::Tensor(a, b) => self.eval(a, n)?.kron(&self.eval(b, n)?),
            SplExpr::Compose(fs) => {
                let mut it = fs.iter();
                let first = it.next().ok_or(SplError::EmptyCompose)?;
                let mut acc = self.eval(first, n)?;
                for f in it {
                    let rhs = self.eval(f, n)?;
                    acc = acc.matmul(&rhs).ok_or(SplError::DimensionMismatch {
                        op: "Compose",
                        left: acc.dims(),
                        right: rhs.dims(),
                    })?;
                }
                acc
            }
            SplExpr::Rc(a) => self.eval(a, n)?.interleaved().to_complex(),
            SplExpr::Augment(a, b) => {
                let (l, r) = (self.eval(a, n)?, self.eval(b, n)?);
                l.hcat(&r).ok_or(SplError::DimensionMismatch { op: "Augment", left: l.dims(), right: r.dims() })?
            }
            SplExpr::Scale(s, a) => match s {
                ScalarValue::Value(v) => self.eval(a, n)?.scale(Complex64::new(*v, 0.0)),
                ScalarValue::Meta(m) => return Err(SplError::UnboundMeta(m.clone())),
            },
            SplExpr::Hole { name, size } => return Err(SplError::HolePresent(format!("{name}({size})"))),
        })
    }

    pub fn eval_real(&self, expr: &SplExpr, n: i64) -> Result<RealMat, SplError> {
        self.eval(expr, n)?.to_real(1e-12).ok_or(SplError::NotReal)
    }

    pub fn eval_rc(&self, expr: &SplExpr, n: i64) -> Result<RealMat, SplError> {
        match expr {
            SplExpr::Rc(inner) => Ok(self.eval(inner, n)?.interleaved()),
            other => Ok(self.eval(other, n)?.interleaved()),
        }
    }
}

/// Dense complex matrix of `expr` at size `n`.
pub fn eval_spl(expr: &SplExpr, n: i64) -> Result<ComplexMat, SplError> {
    Evaluator::default().eval(expr, n)
}

/// Real matrix of a real-valued expression (e.g. anything wrapped in `RC`).
pub fn eval_real(expr: &SplExpr, n: i64) -> Result<RealMat, SplError> {
    Evaluator::default().eval_real(expr, n)
}

/// Interleaved real form of `expr`: `eval_rc(RC(A))` and `eval_rc(A)` both
/// give the `2M×2E` matrix acting on `(re, im, ...)` vectors.
pub fn eval_rc(expr: &SplExpr, n: i64) -> Result<RealMat, SplError> {
    Evaluator::default().eval_rc(expr, n)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::spl::SizeExpr;

    #[test]
    fn dft2_is_butterfly() {
        let m = eval_real(&SplExpr::dft(2u64), 0).unwrap();
        assert_eq!(m.to_rows(), vec![vec![1.0, 1.0], vec![1.0, -1.0]]);
    }

    #[test]
    fn l42_index_map() {
        // 0→0, 1→2, 2→1, 3→3
        let p = eval_real(&SplExpr::l(4u64, 2u64), 0).unwrap();
        let expected = RealMat::from_rows(&[
            vec![1.0, 0.0, 0.0, 0.0],
            vec![0.0, 0.0, 1.0, 0.0],
            vec![0.0, 1.0, 0.0, 0.0],
            vec![0.0, 0.0, 0.0, 1.0],
        ]);
        assert_eq!(p, expected);
    }

    #[test]
    fn rc_dft2() {
        let m = eval_rc(&SplExpr::rc(SplExpr::dft(2u64)), 0).unwrap();
        assert_eq!(
            m.to_rows(),
            vec![
                vec![1.0, 0.0, 1.0, 0.0],
                vec![0.0, 1.0, 0.0, 1.0],
                vec![1.0, 0.0, -1.0, 0.0],
                vec![0.0, 1.0, 0.0, -1.0],
            ]
        );
    }

    #[test]
    fn rc_identity_is_identity() {
        for m in [1u64, 2, 4] {
            let r = eval_rc(&SplExpr::rc(SplExpr::id(m)), 0).unwrap();
            assert_eq!(r, RealMat::identity(2 * m as usize));
        }
    }

    #[test]
    fn hole_and_meta_errors() {
        assert!(matches!(
            eval_spl(&SplExpr::hole("M", SizeExpr::n_over(2)), 8),
            Err(SplError::HolePresent(_))
        ));
        assert!(matches!(eval_spl(&SplExpr::Dft(SizeExpr::meta("m")), 8), Err(SplError::UnboundMeta(_))));
    }

    #[test]
    fn l_requires_divisibility() {
        assert!(matches!(eval_spl(&SplExpr::l(6u64, 4u64), 0), Err(SplError::NotDivisible { .. })));
    }

    #[test]
    fn compose_dimension_mismatch() {
        let e = SplExpr::compose(vec![SplExpr::id(2u64), SplExpr::id(4u64)]);
        assert!(matches!(eval_spl(&e, 0), Err(SplError::DimensionMismatch { .. })));
    }

    #[test]
    fn dft_not_real() {
        assert_eq!(eval_real(&SplExpr::dft(4u64), 0), Err(SplError::NotReal));
    }
}
