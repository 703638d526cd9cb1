use std::fmt;

use super::SplError;

/// A transform size: a literal, a rational multiple `num·n/den` of the size
/// parameter (with `den` a power of two), or a template metavariable.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum SizeExpr {
    Const(u64),
    Sym { num: u64, den: u64 },
    Meta(String),
}

fn gcd(a: u64, b: u64) -> u64 {
    if b == 0 {
        a
    } else {
        gcd(b, a % b)
    }
}

impl SizeExpr {
    pub fn n() -> Self {
        SizeExpr::Sym { num: 1, den: 1 }
    }

    pub fn n_over(den: u64) -> Self {
        SizeExpr::sym(1, den)
    }

    pub fn sym(num: u64, den: u64) -> Self {
        let g = gcd(num, den).max(1);
        SizeExpr::Sym { num: num / g, den: den / g }
    }

    pub fn meta(name: &str) -> Self {
        SizeExpr::Meta(name.to_string())
    }

    pub fn is_symbolic(&self) -> bool {
        matches!(self, SizeExpr::Sym { .. })
    }

    pub fn eval(&self, n: i64) -> Result<usize, SplError> {
        match self {
            SizeExpr::Const(c) => Ok(*c as usize),
            SizeExpr::Sym { num, den } => {
                let v = n as u64 * num;
                if n <= 0 || !v.is_multiple_of(*den) || v == 0 {
                    return Err(SplError::InexactSize { size: self.to_string(), n });
                }
                Ok((v / den) as usize)
            }
            SizeExpr::Meta(m) => Err(SplError::UnboundMeta(m.clone())),
        }
    }

    /// Product of two sizes; `None` for `n²` terms or metavariables.
    pub fn mul(&self, other: &SizeExpr) -> Option<SizeExpr> {
        match (self, other) {
            (SizeExpr::Const(a), SizeExpr::Const(b)) => Some(SizeExpr::Const(a * b)),
            (SizeExpr::Const(c), SizeExpr::Sym { num, den }) | (SizeExpr::Sym { num, den }, SizeExpr::Const(c)) => {
                Some(SizeExpr::sym(num * c, *den))
            }
            _ => None,
        }
    }

    /// Quotient by a literal divisor.
    pub fn div_const(&self, d: u64) -> Option<SizeExpr> {
        match self {
            SizeExpr::Const(c) if d != 0 && c % d == 0 => Some(SizeExpr::Const(c / d)),
            SizeExpr::Sym { num, den } => Some(SizeExpr::sym(*num, den * d)),
            _ => None,
        }
    }
}

impl From<u64> for SizeExpr {
    fn from(c: u64) -> Self {
        SizeExpr::Const(c)
    }
}

impl fmt::Display for SizeExpr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            SizeExpr::Const(c) => write!(f, "{c}"),
            SizeExpr::Sym { num, den } => {
                if *num != 1 {
                    write!(f, "{num}*")?;
                }
                write!(f, "n")?;
                if *den != 1 {
                    write!(f, "/{den}")?;
                }
                Ok(())
            }
            SizeExpr::Meta(m) => write!(f, "{m}"),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rendering() {
        assert_eq!(SizeExpr::n().to_string(), "n");
        assert_eq!(SizeExpr::n_over(2).to_string(), "n/2");
        assert_eq!(SizeExpr::sym(4, 2).to_string(), "2*n");
        assert_eq!(SizeExpr::Const(8).to_string(), "8");
    }

    #[test]
    fn products_cancel() {
        assert_eq!(SizeExpr::Const(2).mul(&SizeExpr::n_over(2)), Some(SizeExpr::n()));
        assert_eq!(SizeExpr::n().mul(&SizeExpr::n()), None);
    }

    #[test]
    fn inexact_evaluation_fails() {
        assert_eq!(SizeExpr::n_over(8).eval(16), Ok(2));
        assert!(SizeExpr::n_over(8).eval(4).is_err());
    }
}
