//! SPL operator algebra: transform operators, Kronecker products,
//! composition, and the interleaved-complex `RC` wrapper.

mod eval;
mod matching;
mod normalize;
mod size;
mod syntax;

use std::fmt;

use num_complex::Complex64;
use thiserror::Error;

pub use eval::{eval_rc, eval_real, eval_spl, root_of_unity, standard_twiddles, Evaluator};
pub use matching::{structural_match, Bindings, Constraint};
pub use normalize::normalize;
pub use size::SizeExpr;
pub use syntax::{parse_spl, parse_spl_with_metas, ParseError};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum SplError {
    #[error("dimension mismatch in {op}: {left:?} vs {right:?}")]
    DimensionMismatch { op: &'static str, left: (usize, usize), right: (usize, usize) },
    #[error("{op}({size}, {param}): {param} does not divide {size}")]
    NotDivisible { op: &'static str, size: usize, param: usize },
    #[error("size {size} is not an integer at n = {n}")]
    InexactSize { size: String, n: i64 },
    #[error("unbound metavariable `{0}`")]
    UnboundMeta(String),
    #[error("expression contains the unknown operator {0}")]
    HolePresent(String),
    #[error("empty composition")]
    EmptyCompose,
    #[error("expression is not real-valued; wrap complex operators in RC")]
    NotReal,
}

/// Scalar factor of a [`SplExpr::Scale`]: a literal or a template metavariable.
#[derive(Debug, Clone, PartialEq)]
pub enum ScalarValue {
    Value(f64),
    Meta(String),
}

impl fmt::Display for ScalarValue {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ScalarValue::Value(v) => write!(f, "{v:?}"),
            ScalarValue::Meta(m) => write!(f, "{m}"),
        }
    }
}

/// An SPL operator expression. `Compose` lists factors left to right as in
/// the matrix product, so the rightmost factor is applied first.
#[derive(Debug, Clone, PartialEq)]
pub enum SplExpr {
    Dft(SizeExpr),
    I(SizeExpr),
    /// Stride permutation `L(size, stride)`.
    L { size: SizeExpr, stride: SizeExpr },
    /// Twiddle diagonal `T(size, block)`; printed as `Diag(size, block)`.
    T { size: SizeExpr, block: SizeExpr },
    /// Explicit diagonal.
    Diag(Vec<Complex64>),
    Tensor(Box<SplExpr>, Box<SplExpr>),
    Compose(Vec<SplExpr>),
    Rc(Box<SplExpr>),
    /// Horizontal block concatenation `[left | right]`.
    Augment(Box<SplExpr>, Box<SplExpr>),
    Scale(ScalarValue, Box<SplExpr>),
    /// Unknown operator standing for a recursive call, e.g. `M(n/2)`.
    Hole { name: String, size: SizeExpr },
}

impl SplExpr {
    pub fn dft(s: impl Into<SizeExpr>) -> Self {
        SplExpr::Dft(s.into())
    }

    pub fn id(s: impl Into<SizeExpr>) -> Self {
        SplExpr::I(s.into())
    }

    pub fn l(size: impl Into<SizeExpr>, stride: impl Into<SizeExpr>) -> Self {
        SplExpr::L { size: size.into(), stride: stride.into() }
    }

    pub fn t(size: impl Into<SizeExpr>, block: impl Into<SizeExpr>) -> Self {
        SplExpr::T { size: size.into(), block: block.into() }
    }

    pub fn tensor(a: SplExpr, b: SplExpr) -> Self {
        SplExpr::Tensor(Box::new(a), Box::new(b))
    }

    pub fn compose(factors: Vec<SplExpr>) -> Self {
        SplExpr::Compose(factors)
    }

    pub fn rc(a: SplExpr) -> Self {
        SplExpr::Rc(Box::new(a))
    }

    pub fn augment(a: SplExpr, b: SplExpr) -> Self {
        SplExpr::Augment(Box::new(a), Box::new(b))
    }

    pub fn scale(v: f64, a: SplExpr) -> Self {
        SplExpr::Scale(ScalarValue::Value(v), Box::new(a))
    }

    pub fn hole(name: &str, size: SizeExpr) -> Self {
        SplExpr::Hole { name: name.to_string(), size }
    }

    pub fn children(&self) -> Vec<&SplExpr> {
        match self {
            SplExpr::Tensor(a, b) | SplExpr::Augment(a, b) => vec![a, b],
            SplExpr::Compose(fs) => fs.iter().collect(),
            SplExpr::Rc(a) | SplExpr::Scale(_, a) => vec![a],
            _ => vec![],
        }
    }

    pub fn contains_hole(&self) -> bool {
        matches!(self, SplExpr::Hole { .. }) || self.children().iter().any(|c| c.contains_hole())
    }

    /// Rebuilds the tree bottom-up through `f`.
    pub fn rewrite(&self, f: &impl Fn(SplExpr) -> SplExpr) -> SplExpr {
        let r = |e: &SplExpr| Box::new(e.rewrite(f));
        let rebuilt = match self {
            SplExpr::Tensor(a, b) => SplExpr::Tensor(r(a), r(b)),
            SplExpr::Augment(a, b) => SplExpr::Augment(r(a), r(b)),
            SplExpr::Compose(fs) => SplExpr::Compose(fs.iter().map(|e| e.rewrite(f)).collect()),
            SplExpr::Rc(a) => SplExpr::Rc(r(a)),
            SplExpr::Scale(s, a) => SplExpr::Scale(s.clone(), r(a)),
            other => other.clone(),
        };
        f(rebuilt)
    }

    /// Replaces every `Hole` named `name` with `with(size)`.
    pub fn fill_hole(&self, name: &str, with: &impl Fn(&SizeExpr) -> SplExpr) -> SplExpr {
        self.rewrite(&|e| match e {
            SplExpr::Hole { name: h, size } if h == name => with(&size),
            other => other,
        })
    }

    /// Every size expression mentioned, in pre-order.
    pub fn sizes(&self) -> Vec<&SizeExpr> {
        let mut out = Vec::new();
        match self {
            SplExpr::Dft(s) | SplExpr::I(s) | SplExpr::Hole { size: s, .. } => out.push(s),
            SplExpr::L { size, stride } => out.extend([size, stride]),
            SplExpr::T { size, block } => out.extend([size, block]),
            _ => {}
        }
        for c in self.children() {
            out.extend(c.sizes());
        }
        out
    }
}

impl fmt::Display for SplExpr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            SplExpr::Dft(s) => write!(f, "F({s})"),
            SplExpr::I(s) => write!(f, "I({s})"),
            SplExpr::L { size, stride } => write!(f, "L({size}, {stride})"),
            SplExpr::T { size, block } => write!(f, "Diag({size}, {block})"),
            SplExpr::Diag(entries) => {
                write!(f, "Diag([")?;
                for (i, z) in entries.iter().enumerate() {
                    if i > 0 {
                        write!(f, ", ")?;
                    }
                    if z.im == 0.0 {
                        write!(f, "{:?}", z.re)?;
                    } else {
                        write!(f, "({:?}, {:?})", z.re, z.im)?;
                    }
                }
                write!(f, "])")
            }
            SplExpr::Tensor(a, b) => write!(f, "Tensor({a}, {b})"),
            SplExpr::Compose(fs) => {
                for (i, e) in fs.iter().enumerate() {
                    if i > 0 {
                        write!(f, " * ")?;
                    }
                    if matches!(e, SplExpr::Compose(_)) {
                        write!(f, "({e})")?;
                    } else {
                        write!(f, "{e}")?;
                    }
                }
                Ok(())
            }
            SplExpr::Rc(a) => write!(f, "RC({a})"),
            SplExpr::Augment(a, b) => write!(f, "Augment({a}, {b})"),
            SplExpr::Scale(s, a) => write!(f, "Scale({s}, {a})"),
            SplExpr::Hole { name, size } => write!(f, "{name}({size})"),
        }
    }
}
