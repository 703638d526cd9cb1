use std::collections::{BTreeMap, BTreeSet};

use crate::icode::{
    IcodeFunction, IcodeProgram, IndexError, IndexExpr, ScalarExpr, SizeConstraint, Stmt as IStmt,
};
use crate::sigma::SIZE_VAR;

use super::{BinOp, Expr, FrontendError, KernelFunction, SourceUnit, Stmt};

fn lowering(line: usize, message: impl Into<String>) -> FrontendError {
    FrontendError::Lowering { line, message: message.into() }
}

/// `log2(d)` when `size_arg` is the size parameter divided by `d = 2^j`.
pub(crate) fn size_argument_shift(size_arg: &IndexExpr) -> Option<u32> {
    let d = size_arg.divisor();
    let ok = size_arg.mod_term().is_none()
        && size_arg.constant_term() == 0
        && size_arg.terms().len() == 1
        && size_arg.coeff(SIZE_VAR) == 1;
    ok.then(|| d.trailing_zeros())
}

struct Scope<'u> {
    unit: &'u SourceUnit,
    func: &'u KernelFunction,
    loop_vars: Vec<(String, String)>,
    temps: BTreeSet<String>,
    arrays: BTreeSet<String>,
}

impl Scope<'_> {
    fn index_var(&self, name: &str, line: usize) -> Result<IndexExpr, FrontendError> {
        if name == self.func.size_param {
            return Ok(IndexExpr::var(SIZE_VAR));
        }
        match self.loop_vars.iter().rev().find(|(src, _)| src == name) {
            Some((_, renamed)) => Ok(IndexExpr::var(renamed.clone())),
            None => Err(lowering(line, format!("`{name}` is not a loop variable or the size parameter"))),
        }
    }

    fn index(&self, e: &Expr, line: usize) -> Result<IndexExpr, FrontendError> {
        let ix = |r: Result<IndexExpr, IndexError>| r.map_err(|err| lowering(line, err.to_string()));
        Ok(match e {
            Expr::Int(v) => IndexExpr::constant(*v),
            Expr::Var(v) => self.index_var(v, line)?,
            Expr::Neg(a) => self.index(a, line)?.neg(),
            Expr::Binary(op, a, b) => {
                let (a, b) = (self.index(a, line)?, self.index(b, line)?);
                match op {
                    BinOp::Add => ix(a.add(&b))?,
                    BinOp::Sub => ix(a.sub(&b))?,
                    BinOp::Mul => ix(a.mul(&b))?,
                    BinOp::Div => ix(a.div(&b))?,
                    BinOp::Rem => ix(a.rem(&b))?,
                }
            }
            other => return Err(lowering(line, format!("`{}` is not an index expression", super::printer::print_expr(other)))),
        })
    }

    fn scalar(&self, e: &Expr, line: usize) -> Result<ScalarExpr, FrontendError> {
        let b = |x: ScalarExpr| Box::new(x);
        Ok(match e {
            Expr::Int(v) => ScalarExpr::Lit(*v as f64),
            Expr::Float(v) => ScalarExpr::Lit(*v),
            Expr::Pi => ScalarExpr::Lit(self.unit.pi_value()),
            Expr::Neg(a) => match **a {
                Expr::Float(v) => ScalarExpr::Lit(-v),
                Expr::Int(v) => ScalarExpr::Lit(-(v as f64)),
                _ => ScalarExpr::Neg(b(self.scalar(a, line)?)),
            },
            Expr::Var(v) if self.temps.contains(v) => ScalarExpr::Temp(v.clone()),
            Expr::Var(v) if *v == self.func.size_param => ScalarExpr::Size,
            Expr::Var(v) => match self.loop_vars.iter().rev().find(|(src, _)| src == v) {
                Some((_, renamed)) => ScalarExpr::LoopVar(renamed.clone()),
                None if self.arrays.contains(v) => return Err(lowering(line, format!("array `{v}` used as a scalar"))),
                None => return Err(lowering(line, format!("undeclared identifier `{v}`"))),
            },
            Expr::Index { array, index } => {
                self.require_array(array, line)?;
                ScalarExpr::Read { array: array.clone(), index: self.index(index, line)? }
            }
            Expr::Binary(op, x, y) => {
                let (x, y) = (b(self.scalar(x, line)?), b(self.scalar(y, line)?));
                match op {
                    BinOp::Add => ScalarExpr::Add(x, y),
                    BinOp::Sub => ScalarExpr::Sub(x, y),
                    BinOp::Mul => ScalarExpr::Mul(x, y),
                    BinOp::Div => ScalarExpr::Div(x, y),
                    BinOp::Rem => return Err(lowering(line, "`%` in a scalar expression")),
                }
            }
            Expr::Intrinsic(f, a) => match f.as_str() {
                "cos" => ScalarExpr::Cos(b(self.scalar(a, line)?)),
                "sin" => ScalarExpr::Sin(b(self.scalar(a, line)?)),
                other => return Err(lowering(line, format!("unknown intrinsic `{other}`"))),
            },
        })
    }

    fn require_array(&self, name: &str, line: usize) -> Result<(), FrontendError> {
        if self.arrays.contains(name) {
            Ok(())
        } else {
            Err(lowering(line, format!("`{name}` is not a live array")))
        }
    }

    fn fresh_loop_name(&self, var: &str) -> String {
        let mut name = var.to_string();
        while name == SIZE_VAR || self.loop_vars.iter().any(|(_, r)| *r == name) {
            name.push('_');
        }
        name
    }

    fn block(&mut self, stmts: &[Stmt]) -> Result<Vec<IStmt>, FrontendError> {
        let mut out = Vec::with_capacity(stmts.len());
        for s in stmts {
            out.push(self.stmt(s)?);
        }
        Ok(out)
    }

    fn stmt(&mut self, s: &Stmt) -> Result<IStmt, FrontendError> {
        let line = s.line();
        Ok(match s {
            Stmt::Guard { threshold, .. } => IStmt::Guard { threshold: *threshold },
            Stmt::Alloc { array, size, .. } => {
                let extent = self.index(size, line)?;
                if !self.arrays.insert(array.clone()) {
                    return Err(lowering(line, format!("array `{array}` is already declared")));
                }
                IStmt::Alloc { array: array.clone(), extent }
            }
            Stmt::Free { array, .. } => {
                if self.func.array_params.contains(array) {
                    return Err(lowering(line, format!("`free` of parameter `{array}`")));
                }
                if !self.arrays.remove(array) {
                    return Err(lowering(line, format!("`free` of `{array}`, which is not allocated")));
                }
                IStmt::Free { array: array.clone() }
            }
            Stmt::For { var, bound, body, .. } => {
                let trip = self.index(bound, line)?;
                let renamed = self.fresh_loop_name(var);
                self.loop_vars.push((var.clone(), renamed.clone()));
                let saved = self.temps.clone();
                let body = self.block(body);
                self.temps = saved;
                self.loop_vars.pop();
                IStmt::Loop { var: renamed, trip, body: body? }
            }
            Stmt::Decl { name, value, .. } => {
                let value = self.scalar(value, line)?;
                if !self.temps.insert(name.clone()) {
                    return Err(lowering(line, format!("temporary `{name}` is assigned twice")));
                }
                IStmt::Def { temp: name.clone(), value }
            }
            Stmt::Assign { array, index, value, .. } => {
                self.require_array(array, line)?;
                IStmt::Store { array: array.clone(), index: self.index(index, line)?, value: self.scalar(value, line)? }
            }
            Stmt::Call { callee, args, .. } => self.call(callee, args, line)?,
        })
    }

    fn call(&self, callee: &str, args: &[Expr], line: usize) -> Result<IStmt, FrontendError> {
        let target = self
            .unit
            .function(callee)
            .ok_or_else(|| FrontendError::Unresolved { line, name: callee.to_string() })?;
        let want = target.array_params.len() + 1;
        if args.len() != want {
            return Err(lowering(line, format!("`{callee}` takes {want} arguments, got {}", args.len())));
        }
        let (size_arg, array_args) = args.split_last().expect("at least the size argument");
        let mut arrays = Vec::new();
        for a in array_args {
            let Expr::Var(name) = a else {
                return Err(lowering(line, format!("array argument `{}` is not an array name", super::printer::print_expr(a))));
            };
            self.require_array(name, line)?;
            if arrays.contains(name) {
                return Err(lowering(line, format!("aliasing: `{name}` is passed twice to `{callee}`")));
            }
            arrays.push(name.clone());
        }
        let text = super::printer::print_expr(size_arg);
        let not_pow2 = || {
            lowering(
                line,
                format!("size argument `{text}` is not `{}` divided by a power of two", self.func.size_param),
            )
        };
        let size = self.index(size_arg, line).map_err(|_| not_pow2())?;
        let shift = size_argument_shift(&size).ok_or_else(not_pow2)?;
        if callee == self.func.name && shift == 0 {
            return Err(lowering(line, format!("recursive call `{callee}` does not reduce the size")));
        }
        Ok(IStmt::Call { callee: callee.to_string(), arrays, size })
    }
}

pub(crate) fn lower_function(unit: &SourceUnit, func: &KernelFunction) -> Result<IcodeFunction, FrontendError> {
    let mut scope = Scope {
        unit,
        func,
        loop_vars: Vec::new(),
        temps: BTreeSet::new(),
        arrays: func.array_params.iter().cloned().collect(),
    };
    let body = scope.block(&func.body)?;
    Ok(IcodeFunction {
        name: func.name.clone(),
        array_params: func.array_params.clone(),
        size_param: SIZE_VAR.to_string(),
        body,
    })
}

fn callees(stmts: &[Stmt], out: &mut Vec<String>) {
    for s in stmts {
        match s {
            Stmt::Call { callee, .. } if !out.contains(callee) => out.push(callee.clone()),
            Stmt::For { body, .. } => callees(body, out),
            _ => {}
        }
    }
}

/// Lowers `entry` and every function it reaches. The size parameter of each
/// function is renamed to `n`; the attached size constraint is `n = 2^k, k >= 1`.
pub fn lower_to_icode(unit: &SourceUnit, entry: &str) -> Result<IcodeProgram, FrontendError> {
    if unit.function(entry).is_none() {
        return Err(FrontendError::UnknownEntry(entry.to_string()));
    }
    let mut functions = BTreeMap::new();
    let mut work = vec![entry.to_string()];
    while let Some(name) = work.pop() {
        if functions.contains_key(&name) {
            continue;
        }
        let f = unit.function(&name).ok_or_else(|| FrontendError::UnknownEntry(name.clone()))?;
        functions.insert(name.clone(), lower_function(unit, f)?);
        let mut next = Vec::new();
        callees(&f.body, &mut next);
        work.extend(next);
    }
    Ok(IcodeProgram { functions, entry: entry.to_string(), size_constraint: SizeConstraint { min_log2: 1 } })
}

#[cfg(test)]
mod tests {
    use super::super::parse_kernel_source;
    use super::*;

    fn lower(src: &str) -> Result<IcodeProgram, FrontendError> {
        let u = parse_kernel_source(src, "t.c").unwrap();
        lower_to_icode(&u, &u.functions[0].name.clone())
    }

    #[test]
    fn constant_bound_loop() {
        let p = lower("void f(double* y, double* x, int m) { for (int i = 0; i < 4; ++i) y[i] = x[i]; }").unwrap();
        let f = p.entry_function();
        assert_eq!(f.size_param, SIZE_VAR);
        let IStmt::Loop { trip, .. } = &f.body[0] else { panic!() };
        assert_eq!(trip.as_constant(), Some(4));
    }

    #[test]
    fn size_renamed_and_loop_var_freshened() {
        let p = lower("void f(double* y, int m) { for (int n = 0; n < m; ++n) y[n] = 1.0; }").unwrap();
        let IStmt::Loop { var, trip, .. } = &p.entry_function().body[0] else { panic!() };
        assert_eq!(var, "n_");
        assert_eq!(*trip, IndexExpr::var(SIZE_VAR));
    }

    #[test]
    fn call_errors() {
        let alias = lower("void f(double* a, double* b, int n) { if (n <= 1) return; f(a, a, n / 2); }");
        assert!(alias.unwrap_err().to_string().contains("aliasing"));
        let third = lower("void f(double* a, int n) { if (n <= 1) return; f(a, n / 3); }");
        assert!(third.unwrap_err().to_string().contains("power of two"));
        let same = lower("void f(double* a, int n) { f(a, n); }");
        assert!(same.unwrap_err().to_string().contains("does not reduce"));
    }
}
