//! Internal code: the lowered kernel IR, its interpreter, and the
//! linear-operator extraction oracle.

mod index;
mod interp;
mod oracle;
mod unroll;

use std::collections::BTreeMap;
use std::fmt;

pub use index::{is_power_of_two, IndexError, IndexExpr, ModTerm};
pub use interp::{interpret, ExecStats, InterpError, Interpreter};
pub use oracle::{
    extract_linear_matrix, extract_matrix_with_extents, fragment_matrix, linearity_deviation,
    OracleError,
};
pub use unroll::{unroll_block, unroll_constant_loops};

/// Scalar (floating-point) expression tree.
#[derive(Debug, Clone, PartialEq)]
pub enum ScalarExpr {
    Read { array: String, index: IndexExpr },
    Temp(String),
    Lit(f64),
    LoopVar(String),
    Size,
    Add(Box<ScalarExpr>, Box<ScalarExpr>),
    Sub(Box<ScalarExpr>, Box<ScalarExpr>),
    Mul(Box<ScalarExpr>, Box<ScalarExpr>),
    Div(Box<ScalarExpr>, Box<ScalarExpr>),
    Neg(Box<ScalarExpr>),
    Cos(Box<ScalarExpr>),
    Sin(Box<ScalarExpr>),
}

impl ScalarExpr {
    pub fn read(array: &str, index: IndexExpr) -> Self {
        ScalarExpr::Read { array: array.to_string(), index }
    }

    /// Calls `f` on every sub-expression, pre-order.
    pub fn visit(&self, f: &mut impl FnMut(&ScalarExpr)) {
        f(self);
        match self {
            ScalarExpr::Add(a, b) | ScalarExpr::Sub(a, b) | ScalarExpr::Mul(a, b) | ScalarExpr::Div(a, b) => {
                a.visit(f);
                b.visit(f);
            }
            ScalarExpr::Neg(a) | ScalarExpr::Cos(a) | ScalarExpr::Sin(a) => a.visit(f),
            _ => {}
        }
    }

    /// Rebuilds the tree bottom-up through `f`.
    pub fn map(&self, f: &impl Fn(ScalarExpr) -> ScalarExpr) -> ScalarExpr {
        let b = |e: &ScalarExpr| Box::new(e.map(f));
        let rebuilt = match self {
            ScalarExpr::Add(x, y) => ScalarExpr::Add(b(x), b(y)),
            ScalarExpr::Sub(x, y) => ScalarExpr::Sub(b(x), b(y)),
            ScalarExpr::Mul(x, y) => ScalarExpr::Mul(b(x), b(y)),
            ScalarExpr::Div(x, y) => ScalarExpr::Div(b(x), b(y)),
            ScalarExpr::Neg(x) => ScalarExpr::Neg(b(x)),
            ScalarExpr::Cos(x) => ScalarExpr::Cos(b(x)),
            ScalarExpr::Sin(x) => ScalarExpr::Sin(b(x)),
            other => other.clone(),
        };
        f(rebuilt)
    }

    pub fn reads(&self) -> Vec<(String, IndexExpr)> {
        let mut out = Vec::new();
        self.visit(&mut |e| {
            if let ScalarExpr::Read { array, index } = e {
                out.push((array.clone(), index.clone()));
            }
        });
        out
    }

    pub fn temps(&self) -> Vec<String> {
        let mut out = Vec::new();
        self.visit(&mut |e| {
            if let ScalarExpr::Temp(t) = e {
                out.push(t.clone());
            }
        });
        out
    }
}

impl fmt::Display for ScalarExpr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ScalarExpr::Read { array, index } => write!(f, "{array}[{index}]"),
            ScalarExpr::Temp(t) => write!(f, "{t}"),
            ScalarExpr::Lit(v) => write!(f, "{v:?}"),
            ScalarExpr::LoopVar(v) => write!(f, "{v}"),
            ScalarExpr::Size => write!(f, "n"),
            ScalarExpr::Add(a, b) => write!(f, "({a} + {b})"),
            ScalarExpr::Sub(a, b) => write!(f, "({a} - {b})"),
            ScalarExpr::Mul(a, b) => write!(f, "({a} * {b})"),
            ScalarExpr::Div(a, b) => write!(f, "({a} / {b})"),
            ScalarExpr::Neg(a) => write!(f, "-{a}"),
            ScalarExpr::Cos(a) => write!(f, "cos({a})"),
            ScalarExpr::Sin(a) => write!(f, "sin({a})"),
        }
    }
}

/// One icode statement.
#[derive(Debug, Clone, PartialEq)]
pub enum Stmt {
    /// `if (n <= threshold) return;`
    Guard { threshold: i64 },
    /// Scoped local array of `extent` doubles.
    Alloc { array: String, extent: IndexExpr },
    /// End of a local array's scope.
    Free { array: String },
    /// Counted loop `for var in 0..trip`.
    Loop { var: String, trip: IndexExpr, body: Vec<Stmt> },
    /// Single-assignment scalar temporary.
    Def { temp: String, value: ScalarExpr },
    Store { array: String, index: IndexExpr, value: ScalarExpr },
    Call { callee: String, arrays: Vec<String>, size: IndexExpr },
}

impl Stmt {
    pub fn is_loop(&self) -> bool {
        matches!(self, Stmt::Loop { .. })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct IcodeFunction {
    pub name: String,
    pub array_params: Vec<String>,
    pub size_param: String,
    pub body: Vec<Stmt>,
}

impl IcodeFunction {
    /// Parameter arrays followed by local arrays in allocation order.
    pub fn declared_arrays(&self) -> Vec<String> {
        let mut out = self.array_params.clone();
        fn walk(stmts: &[Stmt], out: &mut Vec<String>) {
            for s in stmts {
                match s {
                    Stmt::Alloc { array, .. } if !out.contains(array) => out.push(array.clone()),
                    Stmt::Loop { body, .. } => walk(body, out),
                    _ => {}
                }
            }
        }
        walk(&self.body, &mut out);
        out
    }

    pub fn guard_threshold(&self) -> Option<i64> {
        self.body.iter().find_map(|s| match s {
            Stmt::Guard { threshold } => Some(*threshold),
            _ => None,
        })
    }
}

/// The runtime-size constraint attached to every program: `n = 2^k` with `k >= min_log2`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SizeConstraint {
    pub min_log2: u32,
}

impl SizeConstraint {
    pub fn admits(&self, n: i64) -> bool {
        is_power_of_two(n) && n.trailing_zeros() >= self.min_log2
    }
}

impl fmt::Display for SizeConstraint {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "n = 2^k, k >= {}", self.min_log2)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct IcodeProgram {
    pub functions: BTreeMap<String, IcodeFunction>,
    pub entry: String,
    pub size_constraint: SizeConstraint,
}

impl IcodeProgram {
    pub fn function(&self, name: &str) -> Option<&IcodeFunction> {
        self.functions.get(name)
    }

    pub fn entry_function(&self) -> &IcodeFunction {
        &self.functions[&self.entry]
    }

    /// A single-function program wrapping `body`; used to isolate fragments.
    pub fn from_fragment(name: &str, array_params: Vec<String>, size_param: &str, body: Vec<Stmt>) -> Self {
        let f = IcodeFunction {
            name: name.to_string(),
            array_params,
            size_param: size_param.to_string(),
            body,
        };
        let mut functions = BTreeMap::new();
        functions.insert(name.to_string(), f);
        IcodeProgram { functions, entry: name.to_string(), size_constraint: SizeConstraint { min_log2: 1 } }
    }
}

fn fmt_block(f: &mut fmt::Formatter<'_>, stmts: &[Stmt]) -> fmt::Result {
    write!(f, "{{ ")?;
    for s in stmts {
        write!(f, "{s} ")?;
    }
    write!(f, "}}")
}

impl fmt::Display for Stmt {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Stmt::Guard { threshold } => write!(f, "if (n <= {threshold}) return;"),
            Stmt::Alloc { array, extent } => write!(f, "alloc {array}[{extent}];"),
            Stmt::Free { array } => write!(f, "free {array};"),
            Stmt::Loop { var, trip, body } => {
                write!(f, "for {var} < {trip} ")?;
                fmt_block(f, body)
            }
            Stmt::Def { temp, value } => write!(f, "{temp} = {value};"),
            Stmt::Store { array, index, value } => write!(f, "{array}[{index}] = {value};"),
            Stmt::Call { callee, arrays, size } => write!(f, "{callee}({}, {size});", arrays.join(", ")),
        }
    }
}
