use std::collections::BTreeMap;

use thiserror::Error;

use super::{BinOp, Expr, SourceUnit, Stmt};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum AstInterpError {
    #[error("no function `{0}`")]
    UnknownFunction(String),
    #[error("missing input array `{0}`")]
    MissingArray(String),
    #[error("line {line}: {message}")]
    Runtime { line: usize, message: String },
    #[error("recursion deeper than {0}")]
    Depth(usize),
}

const MAX_DEPTH: usize = 64;

struct Frame {
    arrays: BTreeMap<String, usize>,
    ints: BTreeMap<String, i64>,
    temps: BTreeMap<String, f64>,
    size_param: String,
    n: i64,
}

struct Machine<'u> {
    unit: &'u SourceUnit,
    buffers: Vec<Vec<f64>>,
}

fn rt(line: usize, message: impl Into<String>) -> AstInterpError {
    AstInterpError::Runtime { line, message: message.into() }
}

impl Machine<'_> {
    fn int(&self, e: &Expr, f: &Frame, line: usize) -> Result<i64, AstInterpError> {
        Ok(match e {
            Expr::Int(v) => *v,
            Expr::Var(v) if *v == f.size_param => f.n,
            Expr::Var(v) => *f.ints.get(v).ok_or_else(|| rt(line, format!("`{v}` is not an integer")))?,
            Expr::Neg(a) => -self.int(a, f, line)?,
            Expr::Binary(op, a, b) => {
                let (a, b) = (self.int(a, f, line)?, self.int(b, f, line)?);
                match op {
                    BinOp::Add => a + b,
                    BinOp::Sub => a - b,
                    BinOp::Mul => a * b,
                    BinOp::Div | BinOp::Rem if b == 0 => return Err(rt(line, "division by zero")),
                    BinOp::Div if a % b != 0 => return Err(rt(line, format!("inexact division {a} / {b}"))),
                    BinOp::Div => a / b,
                    BinOp::Rem => a.rem_euclid(b),
                }
            }
            _ => return Err(rt(line, "non-integer index")),
        })
    }

    fn slot(&self, array: &str, index: &Expr, f: &Frame, line: usize) -> Result<(usize, usize), AstInterpError> {
        let id = *f.arrays.get(array).ok_or_else(|| rt(line, format!("unknown array `{array}`")))?;
        let i = self.int(index, f, line)?;
        let len = self.buffers[id].len();
        if i < 0 || i as usize >= len {
            return Err(rt(line, format!("{array}[{i}] is outside extent {len}")));
        }
        Ok((id, i as usize))
    }

    fn real(&self, e: &Expr, f: &Frame, line: usize) -> Result<f64, AstInterpError> {
        Ok(match e {
            Expr::Int(v) => *v as f64,
            Expr::Float(v) => *v,
            Expr::Pi => self.unit.pi_value(),
            Expr::Var(v) => match f.temps.get(v) {
                Some(t) => *t,
                None => self.int(e, f, line).map_err(|_| rt(line, format!("unbound `{v}`")))? as f64,
            },
            Expr::Index { array, index } => {
                let (id, i) = self.slot(array, index, f, line)?;
                self.buffers[id][i]
            }
            Expr::Neg(a) => -self.real(a, f, line)?,
            Expr::Binary(op, a, b) => {
                let (a, b) = (self.real(a, f, line)?, self.real(b, f, line)?);
                match op {
                    BinOp::Add => a + b,
                    BinOp::Sub => a - b,
                    BinOp::Mul => a * b,
                    BinOp::Div => a / b,
                    BinOp::Rem => return Err(rt(line, "`%` on reals")),
                }
            }
            Expr::Intrinsic(name, a) => {
                let x = self.real(a, f, line)?;
                match name.as_str() {
                    "cos" => x.cos(),
                    "sin" => x.sin(),
                    other => return Err(rt(line, format!("unknown intrinsic `{other}`"))),
                }
            }
        })
    }

    /// `Ok(true)` when the function returned early.
    fn block(&mut self, stmts: &[Stmt], f: &mut Frame, depth: usize) -> Result<bool, AstInterpError> {
        for s in stmts {
            let line = s.line();
            match s {
                Stmt::Guard { threshold, .. } => {
                    if f.n <= *threshold {
                        return Ok(true);
                    }
                }
                Stmt::Alloc { array, size, .. } => {
                    let e = self.int(size, f, line)?;
                    if e < 0 {
                        return Err(rt(line, "negative allocation"));
                    }
                    f.arrays.insert(array.clone(), self.buffers.len());
                    self.buffers.push(vec![0.0; e as usize]);
                }
                Stmt::Free { array, .. } => {
                    f.arrays.remove(array);
                }
                Stmt::For { var, bound, body, .. } => {
                    let t = self.int(bound, f, line)?;
                    let saved = f.temps.clone();
                    for k in 0..t.max(0) {
                        f.ints.insert(var.clone(), k);
                        if self.block(body, f, depth)? {
                            return Ok(true);
                        }
                    }
                    f.ints.remove(var);
                    f.temps = saved;
                }
                Stmt::Decl { name, value, .. } => {
                    let v = self.real(value, f, line)?;
                    f.temps.insert(name.clone(), v);
                }
                Stmt::Assign { array, index, value, .. } => {
                    let v = self.real(value, f, line)?;
                    let (id, i) = self.slot(array, index, f, line)?;
                    self.buffers[id][i] = v;
                }
                Stmt::Call { callee, args, .. } => {
                    let (size, arrays) = args.split_last().ok_or_else(|| rt(line, "call without arguments"))?;
                    let n = self.int(size, f, line)?;
                    let mut ids = Vec::new();
                    for a in arrays {
                        let Expr::Var(name) = a else { return Err(rt(line, "array argument is not a name")) };
                        ids.push(*f.arrays.get(name).ok_or_else(|| rt(line, format!("unknown array `{name}`")))?);
                    }
                    self.invoke(callee, &ids, n, depth + 1)?;
                }
            }
        }
        Ok(false)
    }

    fn invoke(&mut self, name: &str, ids: &[usize], n: i64, depth: usize) -> Result<(), AstInterpError> {
        if depth > MAX_DEPTH {
            return Err(AstInterpError::Depth(MAX_DEPTH));
        }
        let func = self.unit.function(name).ok_or_else(|| AstInterpError::UnknownFunction(name.into()))?;
        let mut frame = Frame {
            arrays: func.array_params.iter().cloned().zip(ids.iter().copied()).collect(),
            ints: BTreeMap::new(),
            temps: BTreeMap::new(),
            size_param: func.size_param.clone(),
            n,
        };
        self.block(&func.body, &mut frame, depth)?;
        Ok(())
    }
}

/// Runs `entry` directly on the AST and returns its final parameter arrays.
pub fn interpret_ast(
    unit: &SourceUnit,
    entry: &str,
    arrays: &BTreeMap<String, Vec<f64>>,
    n: i64,
) -> Result<BTreeMap<String, Vec<f64>>, AstInterpError> {
    let func = unit.function(entry).ok_or_else(|| AstInterpError::UnknownFunction(entry.into()))?;
    let mut m = Machine { unit, buffers: Vec::new() };
    let mut ids = Vec::new();
    for p in &func.array_params {
        ids.push(m.buffers.len());
        m.buffers.push(arrays.get(p).cloned().ok_or_else(|| AstInterpError::MissingArray(p.clone()))?);
    }
    m.invoke(entry, &ids, n, 1)?;
    Ok(func.array_params.iter().zip(ids).map(|(p, id)| (p.clone(), m.buffers[id].clone())).collect())
}
