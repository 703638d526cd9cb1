//! Arithmetic idioms: twiddle angle, complex multiply, 2-point butterfly.

use std::collections::BTreeMap;
use std::f64::consts::PI;

use crate::icode::{IndexExpr, ScalarExpr, Stmt};
use crate::sigma::{ordered, ExtentMap};
use crate::spl::SplExpr;

use super::recognize::size_of;

/// Why a loop is not the twiddle-butterfly idiom.
#[derive(Debug, Clone, PartialEq)]
pub struct NoMatch(pub String);

/// Structural shape found in a butterfly loop, before oracle checking.
#[derive(Debug, Clone, PartialEq)]
pub struct ButterflyShape {
    pub candidate: SplExpr,
    pub outputs: Vec<String>,
    pub inputs: Vec<String>,
    /// `e` such that the twiddle at iteration `i` is `ω_n^{e·i}`; `None` without twiddles.
    pub twiddle_exponent: Option<i64>,
}

fn inline(e: &ScalarExpr, defs: &BTreeMap<String, ScalarExpr>) -> ScalarExpr {
    e.map(&|x| match x {
        ScalarExpr::Temp(t) => match defs.get(&t) {
            Some(v) => inline(v, defs),
            None => ScalarExpr::Temp(t),
        },
        other => other,
    })
}

fn is_pi(v: f64) -> bool {
    (v - PI).abs() < 1e-15
}

/// `c` such that `theta = c·π·var/n`.
fn angle_coefficient(theta: &ScalarExpr, var: &str) -> Option<f64> {
    fn walk(e: &ScalarExpr, num: bool, acc: &mut (f64, i32, i32, i32), var: &str) -> bool {
        match e {
            ScalarExpr::Lit(v) if is_pi(*v) => acc.1 += if num { 1 } else { -1 },
            ScalarExpr::Lit(v) => acc.0 = if num { acc.0 * v } else { acc.0 / v },
            ScalarExpr::LoopVar(v) if v == var => acc.2 += if num { 1 } else { -1 },
            ScalarExpr::Size => acc.3 += if num { 1 } else { -1 },
            ScalarExpr::Neg(a) => {
                acc.0 = -acc.0;
                return walk(a, num, acc, var);
            }
            ScalarExpr::Mul(a, b) => return walk(a, num, acc, var) && walk(b, num, acc, var),
            ScalarExpr::Div(a, b) => return walk(a, num, acc, var) && walk(b, !num, acc, var),
            _ => return false,
        }
        true
    }
    if let ScalarExpr::Lit(v) = theta {
        return (*v == 0.0).then_some(0.0);
    }
    let mut acc = (1.0, 0, 0, 0);
    if !walk(theta, true, &mut acc, var) {
        return None;
    }
    if acc.0 == 0.0 {
        return Some(0.0);
    }
    (acc.1 == 1 && acc.2 == 1 && acc.3 == -1).then_some(acc.0)
}

fn factors(e: &ScalarExpr) -> Option<(&ScalarExpr, &ScalarExpr)> {
    match e {
        ScalarExpr::Mul(a, b) => Some((a, b)),
        _ => None,
    }
}

/// `read · w` in either operand order.
fn product_with<'a>(e: &'a ScalarExpr, w: &ScalarExpr) -> Option<&'a ScalarExpr> {
    let (a, b) = factors(e)?;
    if b == w {
        Some(a)
    } else if a == w {
        Some(b)
    } else {
        None
    }
}

fn read_parts(e: &ScalarExpr) -> Option<(&str, &IndexExpr)> {
    match e {
        ScalarExpr::Read { array, index } => Some((array, index)),
        _ => None,
    }
}

fn consecutive(lo: &ScalarExpr, hi: &ScalarExpr) -> Option<(String, IndexExpr)> {
    let (a, i) = read_parts(lo)?;
    let (b, j) = read_parts(hi)?;
    (a == b && j.sub(i).ok()?.as_constant() == Some(1)).then(|| (a.to_string(), i.clone()))
}

/// Twiddle angle of `cos(theta)`/`sin(theta)`.
fn trig_angle(e: &ScalarExpr) -> Option<(&ScalarExpr, bool)> {
    match e {
        ScalarExpr::Cos(t) => Some((t, true)),
        ScalarExpr::Sin(t) => Some((t, false)),
        _ => None,
    }
}

/// The rotated pair `(re, im)`: either `(a·wr − b·wi, a·wi + b·wr)` or the
/// plain reads `(a, b)`. Returns the source array, its index, and the angle.
fn rotated_pair(re: &ScalarExpr, im: &ScalarExpr) -> Result<(String, IndexExpr, Option<ScalarExpr>), NoMatch> {
    if let Some((arr, idx)) = consecutive(re, im) {
        return Ok((arr, idx, None));
    }
    let fail = |why: &str| NoMatch(format!("complex multiplication idiom: {why}"));
    let (ScalarExpr::Sub(p, q), ScalarExpr::Add(r, s)) = (re, im) else {
        return Err(fail("expected `a*wr - b*wi` and `a*wi + b*wr`"));
    };
    let (pa, pb) = factors(p).ok_or_else(|| fail("real part is not a product difference"))?;
    let (cos, a) = match (trig_angle(pa), trig_angle(pb)) {
        (Some((_, true)), _) => (pa, pb),
        (_, Some((_, true))) => (pb, pa),
        _ => return Err(fail("no cosine factor in the real part")),
    };
    let (theta, _) = trig_angle(cos).expect("checked above");
    let sin = ScalarExpr::Sin(Box::new(theta.clone()));
    let b = product_with(q, &sin).ok_or_else(|| fail("second real term is not `b*wi`"))?;
    let (r1, s1) = (product_with(r, &sin), product_with(s, cos));
    let (r2, s2) = (product_with(s, &sin), product_with(r, cos));
    let ok = matches!((r1, s1), (Some(x), Some(y)) if x == a && y == b)
        || matches!((r2, s2), (Some(x), Some(y)) if x == a && y == b);
    if !ok {
        return Err(fail("imaginary part is not `a*wi + b*wr`"));
    }
    let (arr, idx) = consecutive(a, b).ok_or_else(|| fail("operands are not an interleaved pair"))?;
    Ok((arr, idx, Some(theta.clone())))
}

fn offset(from: &IndexExpr, to: &IndexExpr) -> Option<IndexExpr> {
    to.sub(from).ok()
}

/// Recognizes the idioms in order (twiddle angle, complex multiply,
/// butterfly) and builds the candidate `RC((F(2) ⊗ I(n/2)) · T(n, n/2))`,
/// or `RC(F(2) ⊗ I(n/2))` when the angle is identically zero.
pub fn butterfly_shape(stmt: &Stmt, extents: &ExtentMap) -> Result<ButterflyShape, NoMatch> {
    let Stmt::Loop { var, body, .. } = stmt else {
        return Err(NoMatch("not a loop".into()));
    };
    let mut defs = BTreeMap::new();
    let mut stores = Vec::new();
    for s in body {
        match s {
            Stmt::Def { temp, value } => {
                defs.insert(temp.clone(), value.clone());
            }
            Stmt::Store { array, index, value } => stores.push((array.clone(), index.clone(), inline(value, &defs))),
            _ => return Err(NoMatch("loop body contains nested control flow or calls".into())),
        }
    }
    let [(o0, p0, v0), (o1, p1, v1), (o2, p2, v2), (o3, p3, v3)] = stores.as_slice() else {
        return Err(NoMatch(format!("butterfly idiom: expected 4 stores, found {}", stores.len())));
    };
    if !(o0 == o1 && o1 == o2 && o2 == o3) {
        return Err(NoMatch("butterfly idiom: stores target different arrays".into()));
    }
    let out_ext = extents.get(o0).ok_or_else(|| NoMatch(format!("no extent for `{o0}`")))?;
    let half = out_ext.div_pow2(2).map_err(|e| NoMatch(e.to_string()))?;
    let one = IndexExpr::constant(1);
    let layout_ok = offset(p0, p1) == Some(one.clone())
        && offset(p0, p2) == Some(half.clone())
        && offset(p2, p3) == Some(one);
    if !layout_ok {
        return Err(NoMatch("butterfly idiom: stores are not at (2i, 2i+1, 2i+n, 2i+n+1)".into()));
    }
    let sum_diff = |s: &ScalarExpr, d: &ScalarExpr| match (s, d) {
        (ScalarExpr::Add(a, b), ScalarExpr::Sub(c, e)) if a == c && b == e => Some(((**a).clone(), (**b).clone())),
        _ => None,
    };
    let bad = || NoMatch("butterfly idiom: outputs are not a sum/difference pair".into());
    let (e_re, x_re) = sum_diff(v0, v2).ok_or_else(bad)?;
    let (e_im, x_im) = sum_diff(v1, v3).ok_or_else(bad)?;
    let (even_arr, _) =
        consecutive(&e_re, &e_im).ok_or_else(|| NoMatch("butterfly idiom: left operands are not an interleaved pair".into()))?;
    let (odd_arr, _, theta) = rotated_pair(&x_re, &x_im)?;

    let exponent = match &theta {
        None => None,
        Some(t) => {
            let c = angle_coefficient(t, var)
                .ok_or_else(|| NoMatch(format!("twiddle idiom: angle `{t}` is not c*M_PI*{var}/n")))?;
            if c.fract() != 0.0 || (c as i64) % 2 != 0 {
                return Err(NoMatch(format!("twiddle idiom: coefficient {c} is not an even integer")));
            }
            let e = -(c as i64) / 2;
            (e != 0).then_some(e)
        }
    };

    let size = size_of(&half).ok_or_else(|| NoMatch(format!("output extent `{out_ext}` is not a transform size")))?;
    let sub = size.div_const(2).ok_or_else(|| NoMatch(format!("size {size} is not even")))?;
    let butterfly = SplExpr::tensor(SplExpr::dft(2u64), SplExpr::I(sub.clone()));
    let inner = match exponent {
        Some(_) => SplExpr::compose(vec![butterfly, SplExpr::T { size, block: sub }]),
        None => butterfly,
    };
    let inputs = ordered(&[even_arr, odd_arr].into_iter().collect(), extents);
    Ok(ButterflyShape {
        candidate: SplExpr::rc(inner),
        outputs: vec![o0.clone()],
        inputs,
        twiddle_exponent: exponent,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn lit(v: f64) -> Box<ScalarExpr> {
        Box::new(ScalarExpr::Lit(v))
    }

    #[test]
    fn standard_angle() {
        // -2.0 * M_PI * i / n
        let t = ScalarExpr::Div(
            Box::new(ScalarExpr::Mul(
                Box::new(ScalarExpr::Mul(lit(-2.0), lit(PI))),
                Box::new(ScalarExpr::LoopVar("i".into())),
            )),
            Box::new(ScalarExpr::Size),
        );
        assert_eq!(angle_coefficient(&t, "i"), Some(-2.0));
    }

    #[test]
    fn angle_without_loop_var_rejected() {
        let t = ScalarExpr::Div(Box::new(ScalarExpr::Mul(lit(2.0), lit(PI))), Box::new(ScalarExpr::Size));
        assert_eq!(angle_coefficient(&t, "i"), None);
    }

    #[test]
    fn zero_angle() {
        assert_eq!(angle_coefficient(&ScalarExpr::Lit(0.0), "i"), Some(0.0));
    }
}
