//! Brute-force linear-operator extraction: run the kernel on every
//! standard basis vector of the (concatenated) input space.

use std::collections::BTreeMap;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use super::{IcodeProgram, InterpError, Interpreter};
use crate::matrix::RealMat;
use crate::sigma::{range_analysis, RangeError};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum OracleError {
    #[error(transparent)]
    Interp(#[from] InterpError),
    #[error(transparent)]
    Range(#[from] RangeError),
    #[error("array `{0}` is not a parameter of the entry function")]
    NotAParameter(String),
    #[error("no extent known for array `{0}`")]
    NoExtent(String),
}

fn concrete_extents(
    program: &IcodeProgram,
    entry: &str,
    n: i64,
) -> Result<BTreeMap<String, usize>, OracleError> {
    let map = range_analysis(program, entry)?;
    let func = program
        .function(entry)
        .ok_or_else(|| InterpError::UnknownFunction(entry.to_string()))?;
    let mut out = BTreeMap::new();
    for p in &func.array_params {
        let e = map.get(p).ok_or_else(|| OracleError::NoExtent(p.clone()))?;
        let v = e.eval_at(&func.size_param, n).map_err(InterpError::from)?;
        out.insert(p.clone(), v.max(0) as usize);
    }
    Ok(out)
}

/// The `M×E` matrix of `entry` at size `n`: column `c` is the output produced
/// from the `c`-th basis vector of the inputs concatenated in the given order.
pub fn extract_linear_matrix(
    program: &IcodeProgram,
    entry: &str,
    output: &str,
    inputs: &[&str],
    n: i64,
) -> Result<RealMat, OracleError> {
    let extents = concrete_extents(program, entry, n)?;
    extract_matrix_with_extents(program, entry, &[output], inputs, &extents, n)
}

/// Same as [`extract_linear_matrix`] with explicit parameter extents and a
/// concatenated output space.
pub fn extract_matrix_with_extents(
    program: &IcodeProgram,
    entry: &str,
    outputs: &[&str],
    inputs: &[&str],
    extents: &BTreeMap<String, usize>,
    n: i64,
) -> Result<RealMat, OracleError> {
    let func = program
        .function(entry)
        .ok_or_else(|| InterpError::UnknownFunction(entry.to_string()))?;
    for a in outputs.iter().chain(inputs) {
        if !func.array_params.iter().any(|p| p == a) {
            return Err(OracleError::NotAParameter(a.to_string()));
        }
    }
    let ext = |a: &str| extents.get(a).copied().ok_or_else(|| OracleError::NoExtent(a.to_string()));
    let rows: usize = outputs.iter().map(|a| ext(a)).sum::<Result<usize, _>>()?;
    let cols: usize = inputs.iter().map(|a| ext(a)).sum::<Result<usize, _>>()?;

    let zero_state = func
        .array_params
        .iter()
        .map(|p| Ok((p.clone(), vec![0.0; ext(p)?])))
        .collect::<Result<BTreeMap<_, _>, OracleError>>()?;

    let mut interp = Interpreter::new(program);
    let mut m = RealMat::zeros(rows, cols);
    let mut col = 0;
    for input in inputs {
        for k in 0..ext(input)? {
            let mut state = zero_state.clone();
            state.get_mut(*input).expect("input is a parameter")[k] = 1.0;
            let out = interp.run(entry, &state, n)?;
            let mut row = 0;
            for o in outputs {
                for &v in &out[*o] {
                    m[(row, col)] = v;
                    row += 1;
                }
            }
            col += 1;
        }
    }
    Ok(m)
}

/// Matrix of a statement list run in isolation over the given arrays.
pub fn fragment_matrix(
    body: &[super::Stmt],
    size_param: &str,
    outputs: &[&str],
    inputs: &[&str],
    extents: &BTreeMap<String, usize>,
    n: i64,
) -> Result<RealMat, OracleError> {
    let mut params: Vec<String> = Vec::new();
    for a in outputs.iter().chain(inputs) {
        if !params.iter().any(|p| p == a) {
            params.push(a.to_string());
        }
    }
    let program = IcodeProgram::from_fragment("__fragment", params, size_param, body.to_vec());
    extract_matrix_with_extents(&program, "__fragment", outputs, inputs, extents, n)
}

/// Largest deviation of `f(a·u + b·v)` from `a·f(u) + b·f(v)` over `trials`
/// random draws (seeded, so the result is reproducible).
#[allow(clippy::too_many_arguments)]
pub fn linearity_deviation(
    program: &IcodeProgram,
    entry: &str,
    outputs: &[&str],
    inputs: &[&str],
    extents: &BTreeMap<String, usize>,
    n: i64,
    trials: usize,
    seed: u64,
) -> Result<f64, OracleError> {
    let func = program
        .function(entry)
        .ok_or_else(|| InterpError::UnknownFunction(entry.to_string()))?;
    let ext = |a: &str| extents.get(a).copied().ok_or_else(|| OracleError::NoExtent(a.to_string()));
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut interp = Interpreter::new(program);
    let mut worst: f64 = 0.0;
    for _ in 0..trials {
        let a: f64 = rng.gen_range(-2.0..2.0);
        let b: f64 = rng.gen_range(-2.0..2.0);
        let mut u = BTreeMap::new();
        let mut v = BTreeMap::new();
        let mut w = BTreeMap::new();
        for p in &func.array_params {
            let len = ext(p)?;
            let is_input = inputs.contains(&p.as_str());
            let draw = |rng: &mut ChaCha8Rng| -> Vec<f64> {
                (0..len).map(|_| if is_input { rng.gen_range(-1.0..1.0) } else { 0.0 }).collect()
            };
            let uu = draw(&mut rng);
            let vv = draw(&mut rng);
            let ww: Vec<f64> = uu.iter().zip(&vv).map(|(x, y)| a * x + b * y).collect();
            u.insert(p.clone(), uu);
            v.insert(p.clone(), vv);
            w.insert(p.clone(), ww);
        }
        let fu = interp.run(entry, &u, n)?;
        let fv = interp.run(entry, &v, n)?;
        let fw = interp.run(entry, &w, n)?;
        for o in outputs {
            for ((x, y), z) in fu[*o].iter().zip(&fv[*o]).zip(&fw[*o]) {
                worst = worst.max((a * x + b * y - z).abs());
            }
        }
    }
    Ok(worst)
}
