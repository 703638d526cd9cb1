use std::collections::BTreeSet;

use super::lexer::{tokenize, Tok, Token};
use super::{BinOp, Expr, FrontendError, KernelFunction, SourceUnit, Stmt, INTRINSICS};

/// Placeholder for `sizeof(double)` inside a `malloc` argument.
const SIZEOF_DOUBLE: &str = "sizeof(double)";

const REJECTED_KEYWORDS: [&str; 9] = ["while", "do", "switch", "goto", "else", "break", "continue", "case", "return"];

struct Parser {
    toks: Vec<Token>,
    pos: usize,
}

fn unsupported(line: usize, construct: impl Into<String>) -> FrontendError {
    FrontendError::Unsupported { line, construct: construct.into() }
}

fn is_const(e: &Expr) -> bool {
    match e {
        Expr::Int(_) => true,
        Expr::Neg(a) => is_const(a),
        Expr::Binary(_, a, b) => is_const(a) && is_const(b),
        _ => false,
    }
}

fn const_value(e: &Expr) -> Option<i64> {
    match e {
        Expr::Int(v) => Some(*v),
        Expr::Neg(a) => const_value(a).map(|v| -v),
        Expr::Binary(op, a, b) => {
            let (a, b) = (const_value(a)?, const_value(b)?);
            match op {
                BinOp::Add => a.checked_add(b),
                BinOp::Sub => a.checked_sub(b),
                BinOp::Mul => a.checked_mul(b),
                BinOp::Div => (b != 0).then(|| a / b),
                BinOp::Rem => (b != 0).then(|| a % b),
            }
        }
        _ => None,
    }
}

/// Rejects index expressions outside the affine, power-of-two-division fragment.
pub(crate) fn check_affine(e: &Expr, scalars: &BTreeSet<String>, line: usize) -> Result<(), FrontendError> {
    let text = || super::printer::print_expr(e);
    match e {
        Expr::Int(_) => Ok(()),
        Expr::Var(v) if scalars.contains(v) => Err(unsupported(line, format!("index depends on scalar `{v}`"))),
        Expr::Var(_) => Ok(()),
        Expr::Float(_) | Expr::Pi => Err(unsupported(line, format!("floating-point index `{}`", text()))),
        Expr::Index { .. } => Err(unsupported(line, format!("data-dependent index `{}`", text()))),
        Expr::Intrinsic(..) => Err(unsupported(line, format!("non-affine index `{}`", text()))),
        Expr::Neg(a) => check_affine(a, scalars, line),
        Expr::Binary(op, a, b) => {
            check_affine(a, scalars, line)?;
            check_affine(b, scalars, line)?;
            match op {
                BinOp::Add | BinOp::Sub => Ok(()),
                BinOp::Mul if is_const(a) || is_const(b) => Ok(()),
                BinOp::Mul => Err(unsupported(line, format!("non-affine index `{}`", text()))),
                BinOp::Div | BinOp::Rem => match const_value(b) {
                    Some(d) if d > 0 && (d as u64).is_power_of_two() => Ok(()),
                    _ => Err(unsupported(line, format!("division by non-power-of-two in `{}`", text()))),
                },
            }
        }
    }
}

impl Parser {
    fn peek(&self) -> &Token {
        &self.toks[self.pos]
    }

    fn peek_at(&self, k: usize) -> &Tok {
        &self.toks[(self.pos + k).min(self.toks.len() - 1)].tok
    }

    fn bump(&mut self) -> Token {
        let t = self.toks[self.pos].clone();
        if self.pos + 1 < self.toks.len() {
            self.pos += 1;
        }
        t
    }

    fn error(&self, expected: impl Into<String>) -> FrontendError {
        let t = self.peek();
        FrontendError::Syntax { line: t.line, col: t.col, expected: expected.into(), found: t.tok.to_string() }
    }

    fn is_punct(&self, p: &str) -> bool {
        matches!(&self.peek().tok, Tok::Punct(q) if *q == p)
    }

    fn is_ident(&self, s: &str) -> bool {
        matches!(&self.peek().tok, Tok::Ident(q) if q == s)
    }

    fn expect_punct(&mut self, p: &str) -> Result<Token, FrontendError> {
        if self.is_punct(p) {
            Ok(self.bump())
        } else {
            Err(self.error(format!("`{p}`")))
        }
    }

    fn expect_keyword(&mut self, k: &str) -> Result<Token, FrontendError> {
        if self.is_ident(k) {
            Ok(self.bump())
        } else {
            Err(self.error(format!("`{k}`")))
        }
    }

    fn ident(&mut self) -> Result<String, FrontendError> {
        match &self.peek().tok {
            Tok::Ident(s) => {
                let s = s.clone();
                self.bump();
                Ok(s)
            }
            _ => Err(self.error("an identifier")),
        }
    }

    fn unit(&mut self, source_name: &str) -> Result<SourceUnit, FrontendError> {
        let mut unit = SourceUnit { source_name: source_name.to_string(), pi: None, functions: Vec::new() };
        loop {
            match &self.peek().tok {
                Tok::Eof => break,
                Tok::DefinePi(v) => {
                    unit.pi = Some(*v);
                    self.bump();
                }
                _ => {
                    let f = self.function()?;
                    if unit.function(&f.name).is_some() {
                        return Err(unsupported(f.line, format!("redefinition of `{}`", f.name)));
                    }
                    unit.functions.push(f);
                }
            }
        }
        resolve_calls(&unit)?;
        Ok(unit)
    }

    fn function(&mut self) -> Result<KernelFunction, FrontendError> {
        let line = self.expect_keyword("void").map_err(|_| self.error("`void` function definition"))?.line;
        let name = self.ident()?;
        self.expect_punct("(")?;
        let mut array_params = Vec::new();
        let size_param = loop {
            if self.is_ident("double") {
                self.bump();
                self.expect_punct("*")?;
                array_params.push(self.ident()?);
                self.expect_punct(",")?;
            } else if self.is_ident("int") {
                self.bump();
                break self.ident()?;
            } else {
                return Err(self.error("`double*` or `int` parameter"));
            }
        };
        self.expect_punct(")")?;
        let mut params: BTreeSet<&String> = BTreeSet::new();
        for p in array_params.iter().chain(std::iter::once(&size_param)) {
            if !params.insert(p) {
                return Err(unsupported(line, format!("duplicate parameter `{p}`")));
            }
        }
        self.expect_punct("{")?;
        let mut scalars = BTreeSet::new();
        let body = self.block_body(&size_param, &mut scalars)?;
        Ok(KernelFunction { name, array_params, size_param, body, line })
    }

    /// Statements up to and including the closing `}`.
    fn block_body(&mut self, size: &str, scalars: &mut BTreeSet<String>) -> Result<Vec<Stmt>, FrontendError> {
        let mut out = Vec::new();
        while !self.is_punct("}") {
            if self.peek().tok == Tok::Eof {
                return Err(self.error("`}`"));
            }
            out.push(self.stmt(size, scalars)?);
        }
        self.bump();
        Ok(out)
    }

    fn stmt(&mut self, size: &str, scalars: &mut BTreeSet<String>) -> Result<Stmt, FrontendError> {
        let t = self.peek().clone();
        let line = t.line;
        let Tok::Ident(word) = &t.tok else {
            return Err(self.error("a statement"));
        };
        match word.as_str() {
            "if" => self.guard(size, line),
            "for" => self.for_loop(size, scalars, line),
            "free" => {
                self.bump();
                self.expect_punct("(")?;
                let array = self.ident()?;
                self.expect_punct(")")?;
                self.expect_punct(";")?;
                Ok(Stmt::Free { array, line })
            }
            "double" => {
                self.bump();
                if self.is_punct("*") {
                    self.bump();
                    let array = self.ident()?;
                    self.expect_punct("=")?;
                    let size_expr = self.malloc(scalars, line)?;
                    self.expect_punct(";")?;
                    return Ok(Stmt::Alloc { array, size: size_expr, line });
                }
                let name = self.ident()?;
                self.expect_punct("=")?;
                let value = self.expr()?;
                self.expect_punct(";")?;
                check_scalar(&value, line)?;
                scalars.insert(name.clone());
                Ok(Stmt::Decl { name, value, line })
            }
            w if REJECTED_KEYWORDS.contains(&w) => Err(unsupported(line, format!("`{w}` statement"))),
            "int" | "float" | "long" | "unsigned" | "char" | "void" | "const" | "static" => {
                Err(unsupported(line, format!("declaration of type `{word}`")))
            }
            _ => {
                let name = self.ident()?;
                if self.is_punct("[") {
                    self.bump();
                    let index = self.expr()?;
                    self.expect_punct("]")?;
                    check_affine(&index, scalars, line)?;
                    if let Tok::Punct(op @ ("+=" | "-=")) = self.peek().tok {
                        return Err(unsupported(line, format!("compound assignment `{op}`")));
                    }
                    self.expect_punct("=")?;
                    let value = self.expr()?;
                    self.expect_punct(";")?;
                    check_scalar(&value, line)?;
                    Ok(Stmt::Assign { array: name, index, value, line })
                } else if self.is_punct("(") {
                    self.bump();
                    let mut args = Vec::new();
                    if !self.is_punct(")") {
                        loop {
                            args.push(self.expr()?);
                            if self.is_punct(",") {
                                self.bump();
                            } else {
                                break;
                            }
                        }
                    }
                    self.expect_punct(")")?;
                    self.expect_punct(";")?;
                    Ok(Stmt::Call { callee: name, args, line })
                } else if self.is_punct("=") {
                    Err(unsupported(line, format!("assignment to scalar `{name}`")))
                } else {
                    Err(self.error("`[`, `(` or `=`"))
                }
            }
        }
    }

    fn guard(&mut self, size: &str, line: usize) -> Result<Stmt, FrontendError> {
        self.bump();
        self.expect_punct("(")?;
        let cond_start = self.pos;
        let lhs = self.ident().ok();
        let simple = lhs.as_deref() == Some(size) && self.is_punct("<=") && matches!(self.peek_at(1), Tok::Int(_));
        if !simple {
            self.pos = cond_start;
            let mut depth = 0;
            while !(depth == 0 && self.is_punct(")")) && self.peek().tok != Tok::Eof {
                if self.is_punct("(") {
                    depth += 1;
                }
                if self.is_punct(")") {
                    depth -= 1;
                }
                self.bump();
            }
            return Err(unsupported(line, "conditional other than `if (N <= const) return;` (data-dependent branch)"));
        }
        self.bump();
        let Tok::Int(threshold) = self.bump().tok else { unreachable!() };
        self.expect_punct(")")?;
        let braced = self.is_punct("{");
        if braced {
            self.bump();
        }
        self.expect_keyword("return").map_err(|_| unsupported(line, "`if` body other than `return;`"))?;
        self.expect_punct(";")?;
        if braced {
            self.expect_punct("}")?;
        }
        Ok(Stmt::Guard { threshold, line })
    }

    fn malloc(&mut self, scalars: &BTreeSet<String>, line: usize) -> Result<Expr, FrontendError> {
        if self.is_punct("(") {
            self.bump();
            self.expect_keyword("double")?;
            self.expect_punct("*")?;
            self.expect_punct(")")?;
        }
        if !self.is_ident("malloc") {
            return Err(unsupported(line, "array initializer other than `malloc`"));
        }
        self.bump();
        self.expect_punct("(")?;
        let arg = self.expr()?;
        self.expect_punct(")")?;
        let size = match arg {
            Expr::Binary(BinOp::Mul, a, b) if *b == Expr::var(SIZEOF_DOUBLE) => *a,
            Expr::Binary(BinOp::Mul, a, b) if *a == Expr::var(SIZEOF_DOUBLE) => *b,
            _ => return Err(unsupported(line, "malloc argument other than `EXPR * sizeof(double)`")),
        };
        check_affine(&size, scalars, line)?;
        Ok(size)
    }

    fn for_loop(&mut self, size: &str, scalars: &mut BTreeSet<String>, line: usize) -> Result<Stmt, FrontendError> {
        self.bump();
        self.expect_punct("(")?;
        self.expect_keyword("int")?;
        let var = self.ident()?;
        self.expect_punct("=")?;
        let init = self.expr()?;
        if init != Expr::Int(0) {
            return Err(unsupported(line, "loop lower bound other than 0"));
        }
        self.expect_punct(";")?;
        let cv = self.ident()?;
        if cv != var {
            return Err(unsupported(line, format!("loop condition on `{cv}` instead of `{var}`")));
        }
        if !self.is_punct("<") {
            return Err(unsupported(line, format!("loop comparison {} (only `<` is accepted)", self.peek().tok)));
        }
        self.bump();
        let bound = self.expr()?;
        check_affine(&bound, scalars, line)?;
        self.expect_punct(";")?;
        let step_ok = if self.is_punct("++") {
            self.bump();
            self.ident()? == var
        } else {
            let sv = self.ident()?;
            if self.is_punct("++") {
                self.bump();
                sv == var
            } else if self.is_punct("+=") {
                self.bump();
                sv == var && self.bump().tok == Tok::Int(1)
            } else {
                false
            }
        };
        if !step_ok {
            return Err(unsupported(line, "loop step other than `++i`"));
        }
        self.expect_punct(")")?;
        if var == size {
            return Err(unsupported(line, format!("loop variable shadows size parameter `{size}`")));
        }
        let mut inner = scalars.clone();
        let body = if self.is_punct("{") {
            self.bump();
            self.block_body(size, &mut inner)?
        } else {
            vec![self.stmt(size, &mut inner)?]
        };
        Ok(Stmt::For { var, bound, body, line })
    }

    fn expr(&mut self) -> Result<Expr, FrontendError> {
        self.binary(1)
    }

    fn binary(&mut self, min_prec: u8) -> Result<Expr, FrontendError> {
        let mut lhs = self.unary()?;
        loop {
            let op = match &self.peek().tok {
                Tok::Punct("+") => BinOp::Add,
                Tok::Punct("-") => BinOp::Sub,
                Tok::Punct("*") => BinOp::Mul,
                Tok::Punct("/") => BinOp::Div,
                Tok::Punct("%") => BinOp::Rem,
                _ => break,
            };
            if op.precedence() < min_prec {
                break;
            }
            self.bump();
            let rhs = self.binary(op.precedence() + 1)?;
            lhs = Expr::bin(op, lhs, rhs);
        }
        Ok(lhs)
    }

    fn unary(&mut self) -> Result<Expr, FrontendError> {
        if self.is_punct("-") {
            self.bump();
            return Ok(Expr::Neg(Box::new(self.unary()?)));
        }
        if self.is_punct("+") {
            self.bump();
            return self.unary();
        }
        self.primary()
    }

    fn primary(&mut self) -> Result<Expr, FrontendError> {
        let t = self.peek().clone();
        match t.tok {
            Tok::Int(v) => {
                self.bump();
                Ok(Expr::Int(v))
            }
            Tok::Float(v) => {
                self.bump();
                Ok(Expr::Float(v))
            }
            Tok::Punct("(") => {
                self.bump();
                if self.is_ident("double") || self.is_ident("int") {
                    return Err(unsupported(t.line, "cast expression"));
                }
                let e = self.expr()?;
                self.expect_punct(")")?;
                Ok(e)
            }
            Tok::Ident(name) => {
                self.bump();
                if name == "M_PI" {
                    return Ok(Expr::Pi);
                }
                if name == "sizeof" {
                    self.expect_punct("(")?;
                    self.expect_keyword("double")?;
                    self.expect_punct(")")?;
                    return Ok(Expr::var(SIZEOF_DOUBLE));
                }
                if self.is_punct("[") {
                    self.bump();
                    let index = self.expr()?;
                    self.expect_punct("]")?;
                    return Ok(Expr::Index { array: name, index: Box::new(index) });
                }
                if self.is_punct("(") {
                    if name != "cos" && name != "sin" {
                        return Err(unsupported(t.line, format!("call to `{name}` inside an expression")));
                    }
                    self.bump();
                    let arg = self.expr()?;
                    self.expect_punct(")")?;
                    return Ok(Expr::Intrinsic(name, Box::new(arg)));
                }
                Ok(Expr::Var(name))
            }
            _ => Err(self.error("an expression")),
        }
    }
}

/// Scalar right-hand sides: array reads must be affine, `%` and
/// integer-only division are not part of the language.
fn check_scalar(e: &Expr, line: usize) -> Result<(), FrontendError> {
    fn int_typed(e: &Expr) -> bool {
        match e {
            Expr::Int(_) | Expr::Var(_) => true,
            Expr::Neg(a) => int_typed(a),
            Expr::Binary(_, a, b) => int_typed(a) && int_typed(b),
            _ => false,
        }
    }
    match e {
        Expr::Var(v) if v == SIZEOF_DOUBLE => Err(unsupported(line, "`sizeof` outside malloc")),
        Expr::Index { index, .. } => check_affine(index, &BTreeSet::new(), line),
        Expr::Neg(a) | Expr::Intrinsic(_, a) => check_scalar(a, line),
        Expr::Binary(BinOp::Rem, ..) => Err(unsupported(line, "`%` in a scalar expression")),
        Expr::Binary(op, a, b) => {
            if *op == BinOp::Div && int_typed(a) && int_typed(b) {
                return Err(unsupported(
                    line,
                    format!("integer division `{}` in a scalar expression", super::printer::print_expr(e)),
                ));
            }
            check_scalar(a, line)?;
            check_scalar(b, line)
        }
        _ => Ok(()),
    }
}

fn resolve_calls(unit: &SourceUnit) -> Result<(), FrontendError> {
    fn walk(stmts: &[Stmt], unit: &SourceUnit) -> Result<(), FrontendError> {
        for s in stmts {
            match s {
                Stmt::Call { callee, line, .. } => {
                    if INTRINSICS.contains(&callee.as_str()) {
                        return Err(unsupported(*line, format!("`{callee}` used as a statement")));
                    }
                    if unit.function(callee).is_none() {
                        return Err(FrontendError::Unresolved { line: *line, name: callee.clone() });
                    }
                }
                Stmt::For { body, .. } => walk(body, unit)?,
                _ => {}
            }
        }
        Ok(())
    }
    for f in &unit.functions {
        walk(&f.body, unit)?;
    }
    Ok(())
}

/// Parses a complete KernelC translation unit.
pub fn parse_kernel_source(text: &str, source_name: &str) -> Result<SourceUnit, FrontendError> {
    let toks = tokenize(text)?;
    Parser { toks, pos: 0 }.unit(source_name)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn unsupported_construct(src: &str) -> String {
        match parse_kernel_source(src, "t.c") {
            Err(FrontendError::Unsupported { construct, .. }) => construct,
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn empty_function() {
        let u = parse_kernel_source("void f(double* y, int n) { }", "t.c").unwrap();
        assert_eq!(u.functions.len(), 1);
        assert!(u.functions[0].body.is_empty());
        assert_eq!(u.functions[0].array_params, ["y"]);
    }

    #[test]
    fn rejects_non_affine_bound() {
        let c = unsupported_construct("void f(double* y, int n) { for (int i = 0; i < n*i; ++i) y[i] = 0; }");
        assert!(c.contains("non-affine"), "{c}");
    }

    #[test]
    fn rejects_while_and_odd_division() {
        assert!(unsupported_construct("void f(double* y, int n) { while (n) { } }").contains("while"));
        assert!(unsupported_construct("void f(double* y, int n) { y[n/3] = 1.0; }").contains("non-power-of-two"));
    }

    #[test]
    fn rejects_loop_forms() {
        let src = |h: &str| format!("void f(double* y, int n) {{ for ({h}) y[i] = 0.0; }}");
        assert!(unsupported_construct(&src("int i = 1; i < n; ++i")).contains("lower bound"));
        assert!(unsupported_construct(&src("int i = 0; i <= n; ++i")).contains("comparison"));
        assert!(unsupported_construct(&src("int i = 0; i < n; i += 2")).contains("step"));
    }

    #[test]
    fn rejects_data_dependent_branch() {
        let c = unsupported_construct("void f(double* y, int n) { if (y[0] <= 1) return; }");
        assert!(c.contains("data-dependent"), "{c}");
    }

    #[test]
    fn syntax_error_position() {
        match parse_kernel_source("void f(double* y, int n) {\n  y[0] = ;\n}", "t.c") {
            Err(FrontendError::Syntax { line, col, expected, found }) => {
                assert_eq!((line, col), (2, 10));
                assert_eq!(expected, "an expression");
                assert_eq!(found, "`;`");
            }
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn unresolved_call() {
        let r = parse_kernel_source("void f(double* y, int n) { g(y, n); }", "t.c");
        assert!(matches!(r, Err(FrontendError::Unresolved { line: 1, .. })));
    }
}
