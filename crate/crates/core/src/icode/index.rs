//! Affine index expressions with exact power-of-two division.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum IndexError {
    #[error("expression is not affine: {0}")]
    NonAffine(String),
    #[error("division by {0}, which is not a positive power of two")]
    NotPowerOfTwo(i64),
    #[error("inexact division: {numerator} / {divisor}")]
    Inexact { numerator: i64, divisor: i64 },
    #[error("unbound index variable `{0}`")]
    Unbound(String),
}

/// `coeff * (inner mod modulus)`.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct ModTerm {
    pub coeff: i64,
    pub inner: IndexExpr,
    pub modulus: i64,
}

/// `(Σ coeff·var + constant) / divisor [+ coeff·(inner mod m)]`.
///
/// The divisor is always a power of two and is kept reduced against the
/// numerator. Evaluation faults unless the division is exact.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct IndexExpr {
    terms: BTreeMap<String, i64>,
    constant: i64,
    divisor: i64,
    modulus: Option<Box<ModTerm>>,
}

pub fn is_power_of_two(v: i64) -> bool {
    v > 0 && (v & (v - 1)) == 0
}

impl IndexExpr {
    pub fn constant(c: i64) -> Self {
        IndexExpr { terms: BTreeMap::new(), constant: c, divisor: 1, modulus: None }
    }

    pub fn var(name: impl Into<String>) -> Self {
        let mut terms = BTreeMap::new();
        terms.insert(name.into(), 1);
        IndexExpr { terms, constant: 0, divisor: 1, modulus: None }
    }

    pub fn from_parts(terms: impl IntoIterator<Item = (String, i64)>, constant: i64, divisor: i64) -> Result<Self, IndexError> {
        if !is_power_of_two(divisor) {
            return Err(IndexError::NotPowerOfTwo(divisor));
        }
        let mut e = IndexExpr { terms: terms.into_iter().collect(), constant, divisor, modulus: None };
        e.reduce();
        Ok(e)
    }

    fn reduce(&mut self) {
        self.terms.retain(|_, c| *c != 0);
        while self.divisor > 1
            && self.constant % 2 == 0
            && self.terms.values().all(|c| c % 2 == 0)
        {
            self.divisor /= 2;
            self.constant /= 2;
            for c in self.terms.values_mut() {
                *c /= 2;
            }
        }
        if let Some(m) = &self.modulus {
            if m.coeff == 0 {
                self.modulus = None;
            }
        }
    }

    fn rescaled(&self, divisor: i64) -> (BTreeMap<String, i64>, i64) {
        let f = divisor / self.divisor;
        (self.terms.iter().map(|(k, v)| (k.clone(), v * f)).collect(), self.constant * f)
    }

    pub fn divisor(&self) -> i64 {
        self.divisor
    }

    pub fn constant_term(&self) -> i64 {
        self.constant
    }

    pub fn terms(&self) -> &BTreeMap<String, i64> {
        &self.terms
    }

    pub fn mod_term(&self) -> Option<&ModTerm> {
        self.modulus.as_deref()
    }

    /// Numerator coefficient of `var` (divide by [`divisor`](Self::divisor) for the true slope).
    pub fn coeff(&self, var: &str) -> i64 {
        self.terms.get(var).copied().unwrap_or(0)
    }

    pub fn is_affine(&self) -> bool {
        self.modulus.is_none()
    }

    /// The value when the expression has no variables and divides exactly.
    pub fn as_constant(&self) -> Option<i64> {
        if self.terms.is_empty() && self.modulus.is_none() && self.constant % self.divisor == 0 {
            Some(self.constant / self.divisor)
        } else {
            None
        }
    }

    pub fn free_vars(&self) -> BTreeSet<String> {
        let mut out: BTreeSet<String> = self.terms.keys().cloned().collect();
        if let Some(m) = &self.modulus {
            out.extend(m.inner.free_vars());
        }
        out
    }

    pub fn mentions(&self, var: &str) -> bool {
        self.free_vars().contains(var)
    }

    pub fn add(&self, other: &IndexExpr) -> Result<IndexExpr, IndexError> {
        let divisor = self.divisor.max(other.divisor);
        let (mut terms, c1) = self.rescaled(divisor);
        let (t2, c2) = other.rescaled(divisor);
        for (k, v) in t2 {
            *terms.entry(k).or_insert(0) += v;
        }
        let modulus = match (&self.modulus, &other.modulus) {
            (None, None) => None,
            (Some(m), None) | (None, Some(m)) => Some(m.clone()),
            (Some(a), Some(b)) if a.inner == b.inner && a.modulus == b.modulus => Some(Box::new(ModTerm {
                coeff: a.coeff + b.coeff,
                inner: a.inner.clone(),
                modulus: a.modulus,
            })),
            _ => return Err(IndexError::NonAffine("sum of two distinct modulus terms".into())),
        };
        let mut e = IndexExpr { terms, constant: c1 + c2, divisor, modulus };
        e.reduce();
        Ok(e)
    }

    pub fn neg(&self) -> IndexExpr {
        self.mul_const(-1)
    }

    pub fn sub(&self, other: &IndexExpr) -> Result<IndexExpr, IndexError> {
        self.add(&other.neg())
    }

    pub fn add_const(&self, c: i64) -> IndexExpr {
        self.add(&IndexExpr::constant(c)).expect("adding a constant never fails")
    }

    pub fn mul_const(&self, k: i64) -> IndexExpr {
        let mut e = IndexExpr {
            terms: self.terms.iter().map(|(n, v)| (n.clone(), v * k)).collect(),
            constant: self.constant * k,
            divisor: self.divisor,
            modulus: self.modulus.as_ref().map(|m| {
                Box::new(ModTerm { coeff: m.coeff * k, inner: m.inner.clone(), modulus: m.modulus })
            }),
        };
        e.reduce();
        e
    }

    /// Product of two expressions; one side must be a constant.
    pub fn mul(&self, other: &IndexExpr) -> Result<IndexExpr, IndexError> {
        if let Some(k) = other.as_constant() {
            Ok(self.mul_const(k))
        } else if let Some(k) = self.as_constant() {
            Ok(other.mul_const(k))
        } else {
            Err(IndexError::NonAffine(format!("({self}) * ({other})")))
        }
    }

    pub fn div_pow2(&self, d: i64) -> Result<IndexExpr, IndexError> {
        if !is_power_of_two(d) {
            return Err(IndexError::NotPowerOfTwo(d));
        }
        let modulus = match &self.modulus {
            None => None,
            Some(m) if m.coeff % d == 0 => Some(Box::new(ModTerm {
                coeff: m.coeff / d,
                inner: m.inner.clone(),
                modulus: m.modulus,
            })),
            Some(_) => return Err(IndexError::NonAffine("division of a modulus term".into())),
        };
        let mut e = IndexExpr {
            terms: self.terms.clone(),
            constant: self.constant,
            divisor: self.divisor * d,
            modulus,
        };
        e.reduce();
        Ok(e)
    }

    /// Division by another expression, which must be a power-of-two constant.
    pub fn div(&self, other: &IndexExpr) -> Result<IndexExpr, IndexError> {
        match other.as_constant() {
            Some(d) => self.div_pow2(d),
            None => Err(IndexError::NonAffine(format!("({self}) / ({other})"))),
        }
    }

    /// `self mod m` for a power-of-two literal `m`.
    pub fn rem(&self, other: &IndexExpr) -> Result<IndexExpr, IndexError> {
        let m = other
            .as_constant()
            .ok_or_else(|| IndexError::NonAffine(format!("({self}) % ({other})")))?;
        if !is_power_of_two(m) {
            return Err(IndexError::NotPowerOfTwo(m));
        }
        if self.modulus.is_some() {
            return Err(IndexError::NonAffine("nested modulus".into()));
        }
        if let Some(c) = self.as_constant() {
            return Ok(IndexExpr::constant(c.rem_euclid(m)));
        }
        Ok(IndexExpr {
            terms: BTreeMap::new(),
            constant: 0,
            divisor: 1,
            modulus: Some(Box::new(ModTerm { coeff: 1, inner: self.clone(), modulus: m })),
        })
    }

    /// Replaces `var` by `value` throughout.
    pub fn substitute(&self, var: &str, value: &IndexExpr) -> Result<IndexExpr, IndexError> {
        let mut rest = self.clone();
        let c = rest.terms.remove(var).unwrap_or(0);
        rest.modulus = None;
        let mut out = rest.add(&value.mul_const(c).div_pow2(self.divisor)?.clone())?;
        // `rest` kept the original divisor; adding the rescaled part is exact.
        if let Some(m) = &self.modulus {
            let inner = m.inner.substitute(var, value)?;
            let mt = inner.rem(&IndexExpr::constant(m.modulus))?.mul_const(m.coeff);
            out = out.add(&mt)?;
        }
        Ok(out)
    }

    pub fn rename(&self, from: &str, to: &str) -> IndexExpr {
        self.substitute(from, &IndexExpr::var(to)).expect("renaming is always affine")
    }

    /// Exact evaluation under `lookup`.
    pub fn eval_with(&self, lookup: &impl Fn(&str) -> Option<i64>) -> Result<i64, IndexError> {
        let mut num = self.constant;
        for (v, c) in &self.terms {
            let x = lookup(v).ok_or_else(|| IndexError::Unbound(v.clone()))?;
            num += c * x;
        }
        if num % self.divisor != 0 {
            return Err(IndexError::Inexact { numerator: num, divisor: self.divisor });
        }
        let mut val = num / self.divisor;
        if let Some(m) = &self.modulus {
            val += m.coeff * m.inner.eval_with(lookup)?.rem_euclid(m.modulus);
        }
        Ok(val)
    }

    pub fn eval(&self, bindings: &BTreeMap<String, i64>) -> Result<i64, IndexError> {
        self.eval_with(&|v: &str| bindings.get(v).copied())
    }

    /// Evaluates an expression whose only variable is `var`.
    pub fn eval_at(&self, var: &str, value: i64) -> Result<i64, IndexError> {
        self.eval_with(&|v: &str| (v == var).then_some(value))
    }
}

fn fmt_coeff_var(f: &mut fmt::Formatter<'_>, c: i64, d: i64, v: &str, first: bool) -> fmt::Result {
    let g = gcd(c.abs(), d);
    let (c, d) = (c / g, d / g);
    let sign = if c < 0 { "-" } else { "+" };
    if first {
        if c < 0 {
            write!(f, "-")?;
        }
    } else {
        write!(f, " {sign} ")?;
    }
    let a = c.abs();
    let body = if v.is_empty() {
        format!("{a}")
    } else if a == 1 {
        v.to_string()
    } else if v.chars().count() == 1 {
        format!("{a}{v}")
    } else {
        format!("{a}*{v}")
    };
    if d == 1 {
        write!(f, "{body}")
    } else {
        write!(f, "{body}/{d}")
    }
}

fn gcd(a: i64, b: i64) -> i64 {
    if b == 0 {
        a.max(1)
    } else {
        gcd(b, a % b)
    }
}

impl fmt::Display for IndexExpr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let mut first = true;
        for (v, &c) in &self.terms {
            fmt_coeff_var(f, c, self.divisor, v, first)?;
            first = false;
        }
        if let Some(m) = &self.modulus {
            if !first {
                write!(f, " {} ", if m.coeff < 0 { "-" } else { "+" })?;
            } else if m.coeff < 0 {
                write!(f, "-")?;
            }
            if m.coeff.abs() != 1 {
                write!(f, "{}*", m.coeff.abs())?;
            }
            write!(f, "({} mod {})", m.inner, m.modulus)?;
            first = false;
        }
        if self.constant != 0 || first {
            fmt_coeff_var(f, self.constant, self.divisor, "", first)?;
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn n() -> IndexExpr {
        IndexExpr::var("n")
    }
    fn i() -> IndexExpr {
        IndexExpr::var("i")
    }

    #[test]
    fn nested_half_offset_simplifies() {
        // 2 * (i + n / 2) == 2i + n
        let e = i().add(&n().div_pow2(2).unwrap()).unwrap().mul_const(2);
        assert_eq!(e, i().mul_const(2).add(&n()).unwrap());
        assert_eq!(e.divisor(), 1);
        assert_eq!(e.to_string(), "2i + n");
    }

    #[test]
    fn inexact_division_faults() {
        let e = i().div_pow2(2).unwrap();
        assert_eq!(e.eval_at("i", 4), Ok(2));
        assert!(matches!(e.eval_at("i", 3), Err(IndexError::Inexact { .. })));
    }

    #[test]
    fn non_power_of_two_rejected() {
        assert_eq!(n().div_pow2(3), Err(IndexError::NotPowerOfTwo(3)));
    }

    #[test]
    fn product_of_variables_is_not_affine() {
        assert!(matches!(n().mul(&i()), Err(IndexError::NonAffine(_))));
    }

    #[test]
    fn modulus_term_evaluates() {
        let e = IndexExpr::var("j").mul_const(2).add(&i().rem(&IndexExpr::constant(2)).unwrap()).unwrap();
        let mut b = BTreeMap::new();
        b.insert("j".to_string(), 3);
        b.insert("i".to_string(), 3);
        assert_eq!(e.eval(&b), Ok(7));
        assert_eq!(e.to_string(), "2j + (i mod 2)");
    }

    #[test]
    fn substitution_composes_divisors() {
        // n/2 with n := n/2 gives n/4
        let e = n().div_pow2(2).unwrap();
        let s = e.substitute("n", &n().div_pow2(2).unwrap()).unwrap();
        assert_eq!(s, n().div_pow2(4).unwrap());
        assert_eq!(s.to_string(), "n/4");
    }

    #[test]
    fn substitution_into_scaled_term() {
        // 4i + 3 with i := n/2 - 1 gives 2n - 1
        let e = i().mul_const(4).add_const(3);
        let v = n().div_pow2(2).unwrap().add_const(-1);
        assert_eq!(e.substitute("i", &v).unwrap(), n().mul_const(2).add_const(-1));
    }
}
