use super::{ScalarValue, SizeExpr, SplExpr};

fn is_unit_identity(e: &SplExpr) -> bool {
    matches!(e, SplExpr::I(SizeExpr::Const(1)))
}

fn step(e: SplExpr) -> SplExpr {
    match e {
        SplExpr::Tensor(a, b) if is_unit_identity(&a) => *b,
        SplExpr::Tensor(a, b) if is_unit_identity(&b) => *a,
        // I_r ⊗ RC(X) = RC(I_r ⊗ X)
        SplExpr::Tensor(a, b) if matches!(*a, SplExpr::I(_)) && matches!(*b, SplExpr::Rc(_)) => {
            let SplExpr::Rc(inner) = *b else { unreachable!() };
            SplExpr::rc(SplExpr::Tensor(a, inner))
        }
        SplExpr::Compose(fs) => {
            let mut flat = Vec::with_capacity(fs.len());
            for f in fs {
                match f {
                    SplExpr::Compose(inner) => flat.extend(inner),
                    other => flat.push(other),
                }
            }
            if flat.len() == 1 {
                return flat.pop().expect("one factor");
            }
            if flat.len() > 1 && flat.iter().all(|f| matches!(f, SplExpr::Rc(_))) {
                let inners = flat
                    .into_iter()
                    .map(|f| match f {
                        SplExpr::Rc(x) => *x,
                        _ => unreachable!(),
                    })
                    .collect();
                return SplExpr::rc(SplExpr::Compose(inners));
            }
            SplExpr::Compose(flat)
        }
        SplExpr::Scale(ScalarValue::Value(a), inner) => match *inner {
            SplExpr::Scale(ScalarValue::Value(b), x) => SplExpr::Scale(ScalarValue::Value(a * b), x),
            other => SplExpr::Scale(ScalarValue::Value(a), Box::new(other)),
        },
        other => other,
    }
}

/// Canonical form used for matching: flattened compositions, unit tensors
/// elided, `RC` hoisted out of all-`RC` products and identity tensors, and
/// nested scales folded. Semantics are preserved.
pub fn normalize(expr: &SplExpr) -> SplExpr {
    let mut cur = expr.clone();
    loop {
        let next = cur.rewrite(&step);
        if next == cur {
            return cur;
        }
        cur = next;
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn unit_tensor_elided() {
        let e = SplExpr::tensor(SplExpr::id(1u64), SplExpr::dft(2u64));
        assert_eq!(normalize(&e), SplExpr::dft(2u64));
    }

    #[test]
    fn compose_flattened() {
        let (a, b, c) = (SplExpr::dft(2u64), SplExpr::id(2u64), SplExpr::l(2u64, 2u64));
        let e = SplExpr::compose(vec![SplExpr::compose(vec![a.clone(), b.clone()]), c.clone()]);
        assert_eq!(normalize(&e), SplExpr::compose(vec![a, b, c]));
    }

    #[test]
    fn rc_hoisted() {
        let a = SplExpr::tensor(SplExpr::dft(2u64), SplExpr::id(2u64));
        let b = SplExpr::l(4u64, 2u64);
        let e = SplExpr::compose(vec![SplExpr::rc(a.clone()), SplExpr::rc(b.clone())]);
        assert_eq!(normalize(&e), SplExpr::rc(SplExpr::compose(vec![a, b])));
    }

    #[test]
    fn mixed_compose_keeps_rc_factors() {
        let e = SplExpr::compose(vec![SplExpr::rc(SplExpr::dft(2u64)), SplExpr::id(4u64)]);
        assert_eq!(normalize(&e), e);
    }

    #[test]
    fn scales_fold() {
        let e = SplExpr::scale(2.0, SplExpr::scale(3.0, SplExpr::id(2u64)));
        assert_eq!(normalize(&e), SplExpr::scale(6.0, SplExpr::id(2u64)));
    }
}
