use std::collections::BTreeSet;
use std::fmt;

use super::lower::lower_function;
use super::{Expr, FrontendError, KernelFunction, SourceUnit, Stmt};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub enum Severity {
    Warning,
    Error,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Diagnostic {
    pub severity: Severity,
    pub function: String,
    pub line: usize,
    pub message: String,
}

impl fmt::Display for Diagnostic {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let sev = match self.severity {
            Severity::Warning => "warning",
            Severity::Error => "error",
        };
        write!(f, "{sev}: line {}: {}: {}", self.line, self.function, self.message)
    }
}

fn mentions(e: &Expr, name: &str) -> bool {
    match e {
        Expr::Var(v) => v == name,
        Expr::Index { index, .. } => mentions(index, name),
        Expr::Neg(a) | Expr::Intrinsic(_, a) => mentions(a, name),
        Expr::Binary(_, a, b) => mentions(a, name) || mentions(b, name),
        _ => false,
    }
}

fn used_later(stmts: &[Stmt], name: &str) -> bool {
    stmts.iter().any(|s| match s {
        Stmt::Decl { value, .. } => mentions(value, name),
        Stmt::Assign { index, value, .. } => mentions(index, name) || mentions(value, name),
        Stmt::Alloc { size, .. } => mentions(size, name),
        Stmt::For { bound, body, .. } => mentions(bound, name) || used_later(body, name),
        Stmt::Call { args, .. } => args.iter().any(|a| mentions(a, name)),
        _ => false,
    })
}

struct Checker<'a> {
    func: &'a KernelFunction,
    out: Vec<Diagnostic>,
}

impl Checker<'_> {
    fn push(&mut self, severity: Severity, line: usize, message: String) {
        self.out.push(Diagnostic { severity, function: self.func.name.clone(), line, message });
    }

    /// Allocation balance and temporary use within one block.
    fn block(&mut self, stmts: &[Stmt]) {
        let mut live: Vec<(String, usize)> = Vec::new();
        for (i, s) in stmts.iter().enumerate() {
            match s {
                Stmt::Alloc { array, line, .. } => live.push((array.clone(), *line)),
                Stmt::Free { array, line } => match live.iter().position(|(a, _)| a == array) {
                    Some(p) => {
                        live.remove(p);
                    }
                    None if self.func.array_params.contains(array) => {}
                    None => self.push(Severity::Error, *line, format!("`free({array})` without a matching allocation")),
                },
                Stmt::Guard { line, .. } => {
                    for (a, _) in &live {
                        self.push(Severity::Warning, *line, format!("array `{a}` not deallocated on early return"));
                    }
                }
                Stmt::Decl { name, line, .. } => {
                    if !used_later(&stmts[i + 1..], name) {
                        self.push(Severity::Warning, *line, format!("temporary `{name}` is never used"));
                    }
                }
                Stmt::For { body, .. } => self.block(body),
                _ => {}
            }
        }
        for (a, line) in live {
            self.push(Severity::Warning, line, format!("array `{a}` not deallocated"));
        }
    }
}

/// Warnings (missing deallocation, unused temporaries) and errors (aliasing,
/// bad size arguments, anything else that blocks lowering). An empty list
/// means the unit is lift-eligible.
pub fn validate_kernel(unit: &SourceUnit) -> Vec<Diagnostic> {
    let mut out = Vec::new();
    for f in &unit.functions {
        let mut c = Checker { func: f, out: Vec::new() };
        c.block(&f.body);
        if let Err(e) = lower_function(unit, f) {
            let message = match &e {
                FrontendError::Lowering { message, .. } => message.clone(),
                other => other.to_string(),
            };
            c.push(Severity::Error, e.line().unwrap_or(f.line), message);
        }
        out.extend(c.out);
    }
    let mut seen = BTreeSet::new();
    out.retain(|d| seen.insert((d.function.clone(), d.line, d.message.clone())));
    out
}

#[cfg(test)]
mod tests {
    use super::super::parse_kernel_source;
    use super::*;

    #[test]
    fn missing_free_and_unused_temp() {
        let src = "void f(double* y, int n) {\n double* t = (double*)malloc(n * sizeof(double));\n double u = 1.0;\n}";
        let d = validate_kernel(&parse_kernel_source(src, "t.c").unwrap());
        let msgs: Vec<&str> = d.iter().map(|d| d.message.as_str()).collect();
        assert!(msgs.contains(&"array `t` not deallocated"), "{msgs:?}");
        assert!(msgs.contains(&"temporary `u` is never used"), "{msgs:?}");
        assert!(d.iter().all(|d| d.severity == Severity::Warning));
    }

    #[test]
    fn third_size_is_an_error() {
        let src = "void f(double* data, int n) { if (n <= 1) return; f(data, n / 3); }";
        let d = validate_kernel(&parse_kernel_source(src, "t.c").unwrap());
        assert_eq!(d.len(), 1);
        assert_eq!(d[0].severity, Severity::Error);
        assert!(d[0].message.contains("power of two"), "{}", d[0]);
    }
}
