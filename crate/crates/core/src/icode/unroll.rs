use std::collections::BTreeMap;

use super::{IndexExpr, ScalarExpr, Stmt};

/// Fully unrolls every counted loop whose trip count is a literal `<= max_trip`.
/// Temporaries defined inside an unrolled body get an `#k` suffix per copy so
/// they stay single-assignment.
pub fn unroll_constant_loops(program: &super::IcodeProgram, max_trip: i64) -> super::IcodeProgram {
    let mut out = program.clone();
    for f in out.functions.values_mut() {
        f.body = unroll_block(&f.body, max_trip);
    }
    out
}

pub fn unroll_block(stmts: &[Stmt], max_trip: i64) -> Vec<Stmt> {
    let mut out = Vec::with_capacity(stmts.len());
    for s in stmts {
        match s {
            Stmt::Loop { var, trip, body } => {
                let body = unroll_block(body, max_trip);
                match trip.as_constant() {
                    Some(t) if t <= max_trip => {
                        for k in 0..t.max(0) {
                            let renames: BTreeMap<String, String> = defined_temps(&body)
                                .into_iter()
                                .map(|d| {
                                    let fresh = format!("{d}#{k}");
                                    (d, fresh)
                                })
                                .collect();
                            out.extend(body.iter().map(|b| instantiate(b, var, k, &renames)));
                        }
                    }
                    _ => out.push(Stmt::Loop { var: var.clone(), trip: trip.clone(), body }),
                }
            }
            other => out.push(other.clone()),
        }
    }
    out
}

fn defined_temps(stmts: &[Stmt]) -> Vec<String> {
    let mut out = Vec::new();
    for s in stmts {
        match s {
            Stmt::Def { temp, .. } => out.push(temp.clone()),
            Stmt::Loop { body, .. } => out.extend(defined_temps(body)),
            _ => {}
        }
    }
    out
}

fn subst_index(e: &IndexExpr, var: &str, k: i64) -> IndexExpr {
    e.substitute(var, &IndexExpr::constant(k))
        .expect("substituting a constant keeps an expression affine")
}

fn subst_scalar(e: &ScalarExpr, var: &str, k: i64, renames: &BTreeMap<String, String>) -> ScalarExpr {
    e.map(&|node| match node {
        ScalarExpr::LoopVar(v) if v == var => ScalarExpr::Lit(k as f64),
        ScalarExpr::Read { array, index } => ScalarExpr::Read { array, index: subst_index(&index, var, k) },
        ScalarExpr::Temp(t) => ScalarExpr::Temp(renames.get(&t).cloned().unwrap_or(t)),
        other => other,
    })
}

fn instantiate(s: &Stmt, var: &str, k: i64, renames: &BTreeMap<String, String>) -> Stmt {
    match s {
        Stmt::Loop { var: v, trip, body } => Stmt::Loop {
            var: v.clone(),
            trip: subst_index(trip, var, k),
            body: body.iter().map(|b| instantiate(b, var, k, renames)).collect(),
        },
        Stmt::Def { temp, value } => Stmt::Def {
            temp: renames.get(temp).cloned().unwrap_or_else(|| temp.clone()),
            value: subst_scalar(value, var, k, renames),
        },
        Stmt::Store { array, index, value } => Stmt::Store {
            array: array.clone(),
            index: subst_index(index, var, k),
            value: subst_scalar(value, var, k, renames),
        },
        Stmt::Alloc { array, extent } => Stmt::Alloc { array: array.clone(), extent: subst_index(extent, var, k) },
        Stmt::Call { callee, arrays, size } => Stmt::Call {
            callee: callee.clone(),
            arrays: arrays.clone(),
            size: subst_index(size, var, k),
        },
        other => other.clone(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::icode::IcodeProgram;

    fn copy_loop(trip: IndexExpr) -> Stmt {
        Stmt::Loop {
            var: "i".into(),
            trip,
            body: vec![Stmt::Store {
                array: "y".into(),
                index: IndexExpr::var("i"),
                value: ScalarExpr::read("x", IndexExpr::var("i")),
            }],
        }
    }

    #[test]
    fn literal_trip_is_unrolled() {
        let body = unroll_block(&[copy_loop(IndexExpr::constant(4))], 4);
        assert_eq!(body.len(), 4);
        for (k, s) in body.iter().enumerate() {
            assert_eq!(
                s,
                &Stmt::Store {
                    array: "y".into(),
                    index: IndexExpr::constant(k as i64),
                    value: ScalarExpr::read("x", IndexExpr::constant(k as i64)),
                }
            );
        }
    }

    #[test]
    fn symbolic_trip_is_kept() {
        let l = copy_loop(IndexExpr::var("n").div_pow2(2).unwrap());
        let p = IcodeProgram::from_fragment("f", vec!["y".into(), "x".into()], "n", vec![l.clone()]);
        let u = unroll_constant_loops(&p, 8);
        assert_eq!(u.entry_function().body, vec![l]);
    }

    #[test]
    fn trip_above_limit_is_kept() {
        let l = copy_loop(IndexExpr::constant(16));
        assert_eq!(unroll_block(std::slice::from_ref(&l), 8), vec![l]);
    }

    #[test]
    fn temporaries_renamed_per_copy() {
        let l = Stmt::Loop {
            var: "k".into(),
            trip: IndexExpr::constant(2),
            body: vec![
                Stmt::Def { temp: "t".into(), value: ScalarExpr::LoopVar("k".into()) },
                Stmt::Store { array: "y".into(), index: IndexExpr::var("k"), value: ScalarExpr::Temp("t".into()) },
            ],
        };
        let u = unroll_block(&[l], 8);
        assert_eq!(u[0], Stmt::Def { temp: "t#0".into(), value: ScalarExpr::Lit(0.0) });
        assert_eq!(
            u[3],
            Stmt::Store { array: "y".into(), index: IndexExpr::constant(1), value: ScalarExpr::Temp("t#1".into()) }
        );
    }
}
