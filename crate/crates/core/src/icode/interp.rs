//! Concrete IEEE-double interpreter for icode.

use std::collections::BTreeMap;

use thiserror::Error;

use super::{IcodeProgram, IndexError, ScalarExpr, Stmt};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum InterpError {
    #[error("size {0} violates the size constraint")]
    SizeConstraint(i64),
    #[error("unknown function `{0}`")]
    UnknownFunction(String),
    #[error("entry array `{0}` was not provided")]
    MissingArray(String),
    #[error("array `{0}` is not in scope")]
    UnknownArray(String),
    #[error("temporary `{0}` read before assignment")]
    UnboundTemp(String),
    #[error("index {index} out of extent {extent} for array `{array}`")]
    OutOfExtent { array: String, index: i64, extent: usize },
    #[error("negative extent {extent} for `{array}`")]
    NegativeExtent { array: String, extent: i64 },
    #[error("call to `{callee}` passes array `{array}` twice")]
    Alias { callee: String, array: String },
    #[error("call to `{callee}` expects {expected} arrays, got {got}")]
    Arity { callee: String, expected: usize, got: usize },
    #[error("recursion depth {depth} exceeds limit {limit}")]
    RecursionDepth { depth: usize, limit: usize },
    #[error(transparent)]
    Index(#[from] IndexError),
}

/// Counters gathered during one run.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct ExecStats {
    pub invocations: usize,
    pub max_depth: usize,
}

struct Frame {
    arrays: BTreeMap<String, usize>,
    ints: BTreeMap<String, i64>,
    temps: BTreeMap<String, f64>,
    size_param: String,
    n: i64,
}

impl Frame {
    fn lookup(&self, v: &str) -> Option<i64> {
        if v == self.size_param {
            Some(self.n)
        } else {
            self.ints.get(v).copied()
        }
    }
}

enum Flow {
    Continue,
    Return,
}

/// Executes icode programs with exact source-order double arithmetic.
pub struct Interpreter<'p> {
    program: &'p IcodeProgram,
    buffers: Vec<Vec<f64>>,
    stats: ExecStats,
    depth_limit: usize,
}

impl<'p> Interpreter<'p> {
    pub fn new(program: &'p IcodeProgram) -> Self {
        Interpreter { program, buffers: Vec::new(), stats: ExecStats::default(), depth_limit: 0 }
    }

    pub fn stats(&self) -> ExecStats {
        self.stats
    }

    /// Runs `entry` at size `n` and returns the final contents of its parameter arrays.
    pub fn run(
        &mut self,
        entry: &str,
        arrays: &BTreeMap<String, Vec<f64>>,
        n: i64,
    ) -> Result<BTreeMap<String, Vec<f64>>, InterpError> {
        if !self.program.size_constraint.admits(n) {
            return Err(InterpError::SizeConstraint(n));
        }
        let func = self
            .program
            .function(entry)
            .ok_or_else(|| InterpError::UnknownFunction(entry.to_string()))?;
        self.buffers.clear();
        self.stats = ExecStats::default();
        self.depth_limit = n.trailing_zeros() as usize + 1;
        let mut ids = Vec::new();
        for p in &func.array_params {
            let data = arrays.get(p).ok_or_else(|| InterpError::MissingArray(p.clone()))?;
            ids.push(self.buffers.len());
            self.buffers.push(data.clone());
        }
        self.invoke(entry, &ids, n, 1)?;
        Ok(func
            .array_params
            .iter()
            .zip(&ids)
            .map(|(p, &id)| (p.clone(), self.buffers[id].clone()))
            .collect())
    }

    fn invoke(&mut self, name: &str, ids: &[usize], n: i64, depth: usize) -> Result<(), InterpError> {
        if depth > self.depth_limit {
            return Err(InterpError::RecursionDepth { depth, limit: self.depth_limit });
        }
        let program = self.program;
        let func = program
            .function(name)
            .ok_or_else(|| InterpError::UnknownFunction(name.to_string()))?;
        if func.array_params.len() != ids.len() {
            return Err(InterpError::Arity {
                callee: name.to_string(),
                expected: func.array_params.len(),
                got: ids.len(),
            });
        }
        self.stats.invocations += 1;
        self.stats.max_depth = self.stats.max_depth.max(depth);
        let mut frame = Frame {
            arrays: func.array_params.iter().cloned().zip(ids.iter().copied()).collect(),
            ints: BTreeMap::new(),
            temps: BTreeMap::new(),
            size_param: func.size_param.clone(),
            n,
        };
        self.exec_block(&func.body, &mut frame, depth)?;
        Ok(())
    }

    fn exec_block(&mut self, stmts: &[Stmt], frame: &mut Frame, depth: usize) -> Result<Flow, InterpError> {
        for s in stmts {
            if let Flow::Return = self.exec(s, frame, depth)? {
                return Ok(Flow::Return);
            }
        }
        Ok(Flow::Continue)
    }

    fn exec(&mut self, stmt: &Stmt, frame: &mut Frame, depth: usize) -> Result<Flow, InterpError> {
        match stmt {
            Stmt::Guard { threshold } => {
                if frame.n <= *threshold {
                    return Ok(Flow::Return);
                }
            }
            Stmt::Alloc { array, extent } => {
                let e = extent.eval_with(&|v: &str| frame.lookup(v))?;
                if e < 0 {
                    return Err(InterpError::NegativeExtent { array: array.clone(), extent: e });
                }
                frame.arrays.insert(array.clone(), self.buffers.len());
                self.buffers.push(vec![0.0; e as usize]);
            }
            Stmt::Free { array } => {
                frame.arrays.remove(array);
            }
            Stmt::Loop { var, trip, body } => {
                let t = trip.eval_with(&|v: &str| frame.lookup(v))?;
                for k in 0..t.max(0) {
                    frame.ints.insert(var.clone(), k);
                    if let Flow::Return = self.exec_block(body, frame, depth)? {
                        frame.ints.remove(var);
                        return Ok(Flow::Return);
                    }
                }
                frame.ints.remove(var);
            }
            Stmt::Def { temp, value } => {
                let v = self.eval(value, frame)?;
                frame.temps.insert(temp.clone(), v);
            }
            Stmt::Store { array, index, value } => {
                let v = self.eval(value, frame)?;
                let (id, i) = self.locate(array, index, frame)?;
                self.buffers[id][i] = v;
            }
            Stmt::Call { callee, arrays, size } => {
                let n = size.eval_with(&|v: &str| frame.lookup(v))?;
                let mut ids = Vec::with_capacity(arrays.len());
                for a in arrays {
                    let id = *frame.arrays.get(a).ok_or_else(|| InterpError::UnknownArray(a.clone()))?;
                    if ids.contains(&id) {
                        return Err(InterpError::Alias { callee: callee.clone(), array: a.clone() });
                    }
                    ids.push(id);
                }
                self.invoke(callee, &ids, n, depth + 1)?;
            }
        }
        Ok(Flow::Continue)
    }

    fn locate(&self, array: &str, index: &super::IndexExpr, frame: &Frame) -> Result<(usize, usize), InterpError> {
        let id = *frame
            .arrays
            .get(array)
            .ok_or_else(|| InterpError::UnknownArray(array.to_string()))?;
        let i = index.eval_with(&|v: &str| frame.lookup(v))?;
        let extent = self.buffers[id].len();
        if i < 0 || i as usize >= extent {
            return Err(InterpError::OutOfExtent { array: array.to_string(), index: i, extent });
        }
        Ok((id, i as usize))
    }

    fn eval(&self, e: &ScalarExpr, frame: &Frame) -> Result<f64, InterpError> {
        Ok(match e {
            ScalarExpr::Read { array, index } => {
                let (id, i) = self.locate(array, index, frame)?;
                self.buffers[id][i]
            }
            ScalarExpr::Temp(t) => *frame.temps.get(t).ok_or_else(|| InterpError::UnboundTemp(t.clone()))?,
            ScalarExpr::Lit(v) => *v,
            ScalarExpr::LoopVar(v) => {
                frame.lookup(v).ok_or_else(|| IndexError::Unbound(v.clone()))? as f64
            }
            ScalarExpr::Size => frame.n as f64,
            ScalarExpr::Add(a, b) => self.eval(a, frame)? + self.eval(b, frame)?,
            ScalarExpr::Sub(a, b) => self.eval(a, frame)? - self.eval(b, frame)?,
            ScalarExpr::Mul(a, b) => self.eval(a, frame)? * self.eval(b, frame)?,
            ScalarExpr::Div(a, b) => self.eval(a, frame)? / self.eval(b, frame)?,
            ScalarExpr::Neg(a) => -self.eval(a, frame)?,
            ScalarExpr::Cos(a) => self.eval(a, frame)?.cos(),
            ScalarExpr::Sin(a) => self.eval(a, frame)?.sin(),
        })
    }
}

/// Runs `entry` once and returns the final parameter arrays.
pub fn interpret(
    program: &IcodeProgram,
    entry: &str,
    arrays: &BTreeMap<String, Vec<f64>>,
    n: i64,
) -> Result<BTreeMap<String, Vec<f64>>, InterpError> {
    Interpreter::new(program).run(entry, arrays, n)
}
