//! KernelC: parsing, canonical printing, lowering to icode, diagnostics and a
//! reference AST interpreter.

mod ast_interp;
mod lexer;
mod lower;
mod parser;
mod printer;
mod validate;

use std::fmt;

use thiserror::Error;

pub use ast_interp::{interpret_ast, AstInterpError};
pub use lexer::{tokenize, Tok, Token};
pub use lower::lower_to_icode;
pub use parser::parse_kernel_source;
pub use printer::print_unit;
pub use validate::{validate_kernel, Diagnostic, Severity};

/// Functions callable from kernel code without a definition.
pub const INTRINSICS: [&str; 4] = ["cos", "sin", "malloc", "free"];

#[derive(Debug, Clone, PartialEq, Error)]
pub enum FrontendError {
    #[error("{line}:{col}: expected {expected}, found {found}")]
    Syntax { line: usize, col: usize, expected: String, found: String },
    #[error("line {line}: unsupported construct: {construct}")]
    Unsupported { line: usize, construct: String },
    #[error("line {line}: call to undefined function `{name}`")]
    Unresolved { line: usize, name: String },
    #[error("no function named `{0}`")]
    UnknownEntry(String),
    #[error("line {line}: {message}")]
    Lowering { line: usize, message: String },
}

impl FrontendError {
    pub fn line(&self) -> Option<usize> {
        match self {
            FrontendError::Syntax { line, .. }
            | FrontendError::Unsupported { line, .. }
            | FrontendError::Unresolved { line, .. }
            | FrontendError::Lowering { line, .. } => Some(*line),
            FrontendError::UnknownEntry(_) => None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BinOp {
    Add,
    Sub,
    Mul,
    Div,
    Rem,
}

impl BinOp {
    pub fn symbol(self) -> &'static str {
        match self {
            BinOp::Add => "+",
            BinOp::Sub => "-",
            BinOp::Mul => "*",
            BinOp::Div => "/",
            BinOp::Rem => "%",
        }
    }

    fn precedence(self) -> u8 {
        match self {
            BinOp::Add | BinOp::Sub => 1,
            BinOp::Mul | BinOp::Div | BinOp::Rem => 2,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Expr {
    Int(i64),
    Float(f64),
    Pi,
    Var(String),
    Index { array: String, index: Box<Expr> },
    Neg(Box<Expr>),
    Binary(BinOp, Box<Expr>, Box<Expr>),
    /// `cos(...)` or `sin(...)`.
    Intrinsic(String, Box<Expr>),
}

impl Expr {
    pub fn bin(op: BinOp, a: Expr, b: Expr) -> Expr {
        Expr::Binary(op, Box::new(a), Box::new(b))
    }

    pub fn var(name: &str) -> Expr {
        Expr::Var(name.to_string())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Stmt {
    /// `if (N <= threshold) return;`
    Guard { threshold: i64, line: usize },
    /// `double* A = (double*)malloc(size * sizeof(double));`
    Alloc { array: String, size: Expr, line: usize },
    /// `for (int var = 0; var < bound; ++var) { body }`
    For { var: String, bound: Expr, body: Vec<Stmt>, line: usize },
    /// `double name = value;`
    Decl { name: String, value: Expr, line: usize },
    /// `array[index] = value;`
    Assign { array: String, index: Expr, value: Expr, line: usize },
    /// `callee(args);`
    Call { callee: String, args: Vec<Expr>, line: usize },
    /// `free(array);`
    Free { array: String, line: usize },
}

impl Stmt {
    pub fn line(&self) -> usize {
        match self {
            Stmt::Guard { line, .. }
            | Stmt::Alloc { line, .. }
            | Stmt::For { line, .. }
            | Stmt::Decl { line, .. }
            | Stmt::Assign { line, .. }
            | Stmt::Call { line, .. }
            | Stmt::Free { line, .. } => *line,
        }
    }

    fn strip(&self) -> Stmt {
        let mut s = self.clone();
        match &mut s {
            Stmt::Guard { line, .. }
            | Stmt::Alloc { line, .. }
            | Stmt::Decl { line, .. }
            | Stmt::Assign { line, .. }
            | Stmt::Call { line, .. }
            | Stmt::Free { line, .. } => *line = 0,
            Stmt::For { line, body, .. } => {
                *line = 0;
                *body = body.iter().map(Stmt::strip).collect();
            }
        }
        s
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct KernelFunction {
    pub name: String,
    pub array_params: Vec<String>,
    pub size_param: String,
    pub body: Vec<Stmt>,
    pub line: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SourceUnit {
    pub source_name: String,
    /// Value bound by `#define M_PI`, if present.
    pub pi: Option<f64>,
    pub functions: Vec<KernelFunction>,
}

impl SourceUnit {
    pub fn function(&self, name: &str) -> Option<&KernelFunction> {
        self.functions.iter().find(|f| f.name == name)
    }

    /// Value substituted for `M_PI`.
    pub fn pi_value(&self) -> f64 {
        self.pi.unwrap_or(std::f64::consts::PI)
    }

    /// The same unit with all source positions cleared, for structural comparison.
    pub fn without_positions(&self) -> SourceUnit {
        SourceUnit {
            source_name: self.source_name.clone(),
            pi: self.pi,
            functions: self
                .functions
                .iter()
                .map(|f| KernelFunction { body: f.body.iter().map(Stmt::strip).collect(), line: 0, ..f.clone() })
                .collect(),
        }
    }
}

impl fmt::Display for SourceUnit {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&print_unit(self))
    }
}
