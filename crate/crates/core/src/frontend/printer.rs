use std::fmt::Write;

use super::{BinOp, Expr, SourceUnit, Stmt};

fn float(v: f64) -> String {
    format!("{v:?}")
}

fn needs_parens(child: &Expr, parent: BinOp, right: bool) -> bool {
    match child {
        Expr::Binary(op, ..) => {
            let (c, p) = (op_prec(*op), op_prec(parent));
            c < p || (right && c == p)
        }
        _ => false,
    }
}

fn op_prec(op: BinOp) -> u8 {
    match op {
        BinOp::Add | BinOp::Sub => 1,
        _ => 2,
    }
}

/// Canonical KernelC text for an expression; parses back to the same tree.
pub fn print_expr(e: &Expr) -> String {
    match e {
        Expr::Int(v) => v.to_string(),
        Expr::Float(v) => float(*v),
        Expr::Pi => "M_PI".into(),
        Expr::Var(v) => v.clone(),
        Expr::Index { array, index } => format!("{array}[{}]", print_expr(index)),
        Expr::Neg(a) => match **a {
            Expr::Binary(..) | Expr::Neg(_) => format!("-({})", print_expr(a)),
            _ => format!("-{}", print_expr(a)),
        },
        Expr::Binary(op, a, b) => {
            let side = |x: &Expr, right: bool| {
                if needs_parens(x, *op, right) {
                    format!("({})", print_expr(x))
                } else {
                    print_expr(x)
                }
            };
            format!("{} {} {}", side(a, false), op.symbol(), side(b, true))
        }
        Expr::Intrinsic(f, a) => format!("{f}({})", print_expr(a)),
    }
}

fn print_block(out: &mut String, stmts: &[Stmt], size: &str, depth: usize) {
    let pad = "    ".repeat(depth);
    for s in stmts {
        let _ = match s {
            Stmt::Guard { threshold, .. } => writeln!(out, "{pad}if ({size} <= {threshold}) return;"),
            Stmt::Alloc { array, size: e, .. } => {
                let e = match e {
                    Expr::Binary(BinOp::Add | BinOp::Sub, ..) => format!("({})", print_expr(e)),
                    _ => print_expr(e),
                };
                writeln!(out, "{pad}double* {array} = (double*)malloc({e} * sizeof(double));")
            }
            Stmt::For { var, bound, body, .. } => {
                let _ = writeln!(out, "{pad}for (int {var} = 0; {var} < {}; ++{var}) {{", print_expr(bound));
                print_block(out, body, size, depth + 1);
                writeln!(out, "{pad}}}")
            }
            Stmt::Decl { name, value, .. } => writeln!(out, "{pad}double {name} = {};", print_expr(value)),
            Stmt::Assign { array, index, value, .. } => {
                writeln!(out, "{pad}{array}[{}] = {};", print_expr(index), print_expr(value))
            }
            Stmt::Call { callee, args, .. } => {
                let args: Vec<String> = args.iter().map(print_expr).collect();
                writeln!(out, "{pad}{callee}({});", args.join(", "))
            }
            Stmt::Free { array, .. } => writeln!(out, "{pad}free({array});"),
        };
    }
}

/// Canonical KernelC text for a whole unit.
pub fn print_unit(unit: &SourceUnit) -> String {
    let mut out = String::new();
    if let Some(pi) = unit.pi {
        let _ = writeln!(out, "#define M_PI {}", float(pi));
    }
    for (i, f) in unit.functions.iter().enumerate() {
        if i > 0 || unit.pi.is_some() {
            out.push('\n');
        }
        let mut params: Vec<String> = f.array_params.iter().map(|p| format!("double* {p}")).collect();
        params.push(format!("int {}", f.size_param));
        let _ = writeln!(out, "void {}({}) {{", f.name, params.join(", "));
        print_block(&mut out, &f.body, &f.size_param, 1);
        out.push_str("}\n");
    }
    out
}

#[cfg(test)]
mod tests {
    use super::super::parse_kernel_source;
    use super::*;

    #[test]
    fn parenthesization() {
        let src = "void f(double* y, int n) { y[2 * (i + n / 2)] = -(a - (b - c)) / 2.0; }";
        let u = parse_kernel_source(src, "t.c").unwrap();
        let printed = print_unit(&u);
        assert!(printed.contains("y[2 * (i + n / 2)] = -(a - (b - c)) / 2.0;"), "{printed}");
        assert_eq!(parse_kernel_source(&printed, "t.c").unwrap().without_positions(), u.without_positions());
    }
}
