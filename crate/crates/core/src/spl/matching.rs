//! Purely syntactic template matching over normalized expressions.

use std::collections::BTreeMap;
use std::fmt;

use super::{ScalarValue, SizeExpr, SplExpr};

/// Side conditions on size metavariables.
#[derive(Debug, Clone, PartialEq)]
pub enum Constraint {
    /// `target = factors[0] · factors[1] · ...`
    Product { target: String, factors: Vec<String> },
    /// `var >= min`. Symbolic bindings are taken to hold for large enough `n`.
    AtLeast { var: String, min: u64 },
}

impl fmt::Display for Constraint {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Constraint::Product { target, factors } => write!(f, "{target} = {}", factors.join("*")),
            Constraint::AtLeast { var, min } => write!(f, "{var} >= {min}"),
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct Bindings {
    pub sizes: BTreeMap<String, SizeExpr>,
    pub scalars: BTreeMap<String, f64>,
}

impl Bindings {
    fn bind_size(&mut self, name: &str, value: &SizeExpr) -> bool {
        match self.sizes.get(name) {
            Some(prev) => prev == value,
            None => {
                self.sizes.insert(name.to_string(), value.clone());
                true
            }
        }
    }

    fn bind_scalar(&mut self, name: &str, value: f64) -> bool {
        match self.scalars.get(name) {
            Some(prev) => prev.to_bits() == value.to_bits(),
            None => {
                self.scalars.insert(name.to_string(), value);
                true
            }
        }
    }

    /// Substitutes bound metavariables into `expr`.
    pub fn instantiate(&self, expr: &SplExpr) -> SplExpr {
        let size = |s: &SizeExpr| match s {
            SizeExpr::Meta(m) => self.sizes.get(m).cloned().unwrap_or_else(|| s.clone()),
            other => other.clone(),
        };
        expr.rewrite(&|e| match e {
            SplExpr::Dft(s) => SplExpr::Dft(size(&s)),
            SplExpr::I(s) => SplExpr::I(size(&s)),
            SplExpr::L { size: a, stride: b } => SplExpr::L { size: size(&a), stride: size(&b) },
            SplExpr::T { size: a, block: b } => SplExpr::T { size: size(&a), block: size(&b) },
            SplExpr::Hole { name, size: s } => SplExpr::Hole { name, size: size(&s) },
            SplExpr::Scale(ScalarValue::Meta(m), x) => match self.scalars.get(&m) {
                Some(v) => SplExpr::Scale(ScalarValue::Value(*v), x),
                None => SplExpr::Scale(ScalarValue::Meta(m), x),
            },
            other => other,
        })
    }

    /// Checks every constraint, deriving product targets that are still unbound.
    pub fn satisfy(&mut self, constraints: &[Constraint]) -> bool {
        for c in constraints {
            match c {
                Constraint::Product { target, factors } => {
                    let mut acc = SizeExpr::Const(1);
                    for f in factors {
                        let Some(v) = self.sizes.get(f) else { return false };
                        match acc.mul(v) {
                            Some(p) => acc = p,
                            None => return false,
                        }
                    }
                    if !self.bind_size(target, &acc) {
                        return false;
                    }
                }
                Constraint::AtLeast { var, min } => match self.sizes.get(var) {
                    Some(SizeExpr::Const(v)) if v < min => return false,
                    Some(_) => {}
                    None => return false,
                },
            }
        }
        true
    }
}

fn match_size(e: &SizeExpr, t: &SizeExpr, b: &mut Bindings) -> bool {
    match t {
        SizeExpr::Meta(m) => b.bind_size(m, e),
        other => other == e,
    }
}

fn match_into(e: &SplExpr, t: &SplExpr, b: &mut Bindings) -> bool {
    match (e, t) {
        (SplExpr::Dft(x), SplExpr::Dft(y)) | (SplExpr::I(x), SplExpr::I(y)) => match_size(x, y, b),
        (SplExpr::L { size: a, stride: s }, SplExpr::L { size: ta, stride: ts }) => {
            match_size(a, ta, b) && match_size(s, ts, b)
        }
        (SplExpr::T { size: a, block: k }, SplExpr::T { size: ta, block: tk }) => {
            match_size(a, ta, b) && match_size(k, tk, b)
        }
        (SplExpr::Diag(x), SplExpr::Diag(y)) => x == y,
        (SplExpr::Tensor(a1, b1), SplExpr::Tensor(a2, b2)) | (SplExpr::Augment(a1, b1), SplExpr::Augment(a2, b2)) => {
            match_into(a1, a2, b) && match_into(b1, b2, b)
        }
        (SplExpr::Compose(xs), SplExpr::Compose(ys)) => {
            xs.len() == ys.len() && xs.iter().zip(ys).all(|(x, y)| match_into(x, y, b))
        }
        (SplExpr::Rc(x), SplExpr::Rc(y)) => match_into(x, y, b),
        (SplExpr::Scale(sv, x), SplExpr::Scale(tv, y)) => {
            let scalar_ok = match (sv, tv) {
                (ScalarValue::Value(v), ScalarValue::Meta(m)) => b.bind_scalar(m, *v),
                (ScalarValue::Value(v), ScalarValue::Value(w)) => v.to_bits() == w.to_bits(),
                _ => false,
            };
            scalar_ok && match_into(x, y, b)
        }
        (SplExpr::Hole { name: n1, size: s1 }, SplExpr::Hole { name: n2, size: s2 }) => {
            n1 == n2 && match_size(s1, s2, b)
        }
        _ => false,
    }
}

/// Bindings under which `template` equals `expr` structurally and every
/// constraint holds; `None` otherwise.
pub fn structural_match(expr: &SplExpr, template: &SplExpr, constraints: &[Constraint]) -> Option<Bindings> {
    let mut b = Bindings::default();
    (match_into(expr, template, &mut b) && b.satisfy(constraints)).then_some(b)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn cooley_tukey() -> SplExpr {
        let (nn, m, k) = (SizeExpr::meta("N"), SizeExpr::meta("m"), SizeExpr::meta("k"));
        SplExpr::compose(vec![
            SplExpr::tensor(SplExpr::Dft(m.clone()), SplExpr::I(k.clone())),
            SplExpr::T { size: nn.clone(), block: k.clone() },
            SplExpr::tensor(SplExpr::I(m.clone()), SplExpr::Dft(k)),
            SplExpr::L { size: nn, stride: m },
        ])
    }

    fn ct_constraints() -> Vec<Constraint> {
        vec![
            Constraint::Product { target: "N".into(), factors: vec!["m".into(), "k".into()] },
            Constraint::AtLeast { var: "m".into(), min: 2 },
            Constraint::AtLeast { var: "k".into(), min: 2 },
        ]
    }

    #[test]
    fn radix2_expression_binds_m2_k_half() {
        let n = SizeExpr::n();
        let half = SizeExpr::n_over(2);
        let e = SplExpr::compose(vec![
            SplExpr::tensor(SplExpr::dft(2u64), SplExpr::I(half.clone())),
            SplExpr::T { size: n.clone(), block: half.clone() },
            SplExpr::tensor(SplExpr::id(2u64), SplExpr::Dft(half.clone())),
            SplExpr::L { size: n.clone(), stride: SizeExpr::Const(2) },
        ]);
        let b = structural_match(&e, &cooley_tukey(), &ct_constraints()).unwrap();
        assert_eq!(b.sizes["m"], SizeExpr::Const(2));
        assert_eq!(b.sizes["k"], half);
        assert_eq!(b.sizes["N"], n);
    }

    #[test]
    fn dft_matches_definition() {
        let b = structural_match(&SplExpr::Dft(SizeExpr::n()), &SplExpr::Dft(SizeExpr::meta("m")), &[]).unwrap();
        assert_eq!(b.sizes["m"], SizeExpr::n());
    }

    #[test]
    fn stride_permutation_does_not_match_cooley_tukey() {
        let e = SplExpr::L { size: SizeExpr::n(), stride: SizeExpr::Const(2) };
        assert!(structural_match(&e, &cooley_tukey(), &ct_constraints()).is_none());
    }

    #[test]
    fn inconsistent_product_rejected() {
        let e = SplExpr::compose(vec![
            SplExpr::tensor(SplExpr::dft(2u64), SplExpr::id(4u64)),
            SplExpr::t(16u64, 4u64),
            SplExpr::tensor(SplExpr::id(2u64), SplExpr::dft(4u64)),
            SplExpr::l(16u64, 2u64),
        ]);
        assert!(structural_match(&e, &cooley_tukey(), &ct_constraints()).is_none());
    }

    #[test]
    fn scalar_metavariable_binds() {
        let t = SplExpr::augment(
            SplExpr::I(SizeExpr::meta("N")),
            SplExpr::Scale(ScalarValue::Meta("alpha".into()), Box::new(SplExpr::I(SizeExpr::meta("N")))),
        );
        let e = SplExpr::augment(SplExpr::I(SizeExpr::n()), SplExpr::scale(2.5, SplExpr::I(SizeExpr::n())));
        let b = structural_match(&e, &t, &[]).unwrap();
        assert_eq!(b.scalars["alpha"], 2.5);
        assert_eq!(b.instantiate(&t), e);
    }
}
