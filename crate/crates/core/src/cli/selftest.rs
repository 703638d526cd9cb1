use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::kb::KnowledgeBase;
use crate::matrix::{interleave, ComplexMat};
use crate::spl::{Evaluator, SplExpr};

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SelfCheck {
    pub name: String,
    pub deviation: f64,
    pub tolerance: f64,
    pub passed: bool,
}

fn check(name: String, deviation: Option<f64>, tolerance: f64) -> SelfCheck {
    let deviation = deviation.unwrap_or(f64::INFINITY);
    SelfCheck { name, deviation, tolerance, passed: deviation <= tolerance }
}

/// Radix-`m` Cooley-Tukey factorization of `DFT(m·k)`.
pub fn cooley_tukey(m: u64, k: u64) -> SplExpr {
    SplExpr::compose(vec![
        SplExpr::tensor(SplExpr::dft(m), SplExpr::id(k)),
        SplExpr::t(m * k, k),
        SplExpr::tensor(SplExpr::id(m), SplExpr::dft(k)),
        SplExpr::l(m * k, m),
    ])
}

fn diff(ev: &Evaluator, a: &SplExpr, b: &SplExpr) -> Option<f64> {
    ev.eval(a, 1).ok()?.max_abs_diff(&ev.eval(b, 1).ok()?)
}

/// The identity suite, evaluated with `ev`.
pub fn run_selftest_with(ev: &Evaluator) -> Vec<SelfCheck> {
    let mut out = Vec::new();
    for (m, k) in [(2, 2), (2, 4), (4, 2), (2, 8), (4, 4)] {
        let d = diff(ev, &cooley_tukey(m, k), &SplExpr::dft(m * k));
        out.push(check(format!("cooley-tukey m={m} k={k}"), d, 1e-10));
    }
    for n in [4u64, 8, 16] {
        for m in (1..=n).filter(|m| n % m == 0) {
            let prod = SplExpr::compose(vec![SplExpr::l(n, m), SplExpr::l(n, n / m)]);
            out.push(check(format!("L({n},{m}) * L({n},{}) = I", n / m), diff(ev, &prod, &SplExpr::id(n)), 0.0));
        }
    }
    let mut rng = ChaCha8Rng::seed_from_u64(0x5eed);
    let samples = [
        SplExpr::dft(4u64),
        SplExpr::l(8u64, 2u64),
        SplExpr::t(8u64, 4u64),
        SplExpr::compose(vec![SplExpr::t(8u64, 4u64), SplExpr::l(8u64, 2u64)]),
    ];
    for a in &samples {
        let d = (|| {
            let complex: ComplexMat = ev.eval(a, 1).ok()?;
            let real = ev.eval_rc(&SplExpr::rc(a.clone()), 1).ok()?;
            let x: Vec<Complex64> =
                (0..complex.cols()).map(|_| Complex64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0))).collect();
            let lhs = real.apply(&interleave(&x))?;
            let rhs = interleave(&complex.apply(&x)?);
            Some(lhs.iter().zip(&rhs).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max))
        })();
        out.push(check(format!("RC homomorphism {a}"), d, 1e-12));
    }
    for t in KnowledgeBase::builtin().templates() {
        let d = t.validate().ok();
        out.push(check(format!("template {}", t.name), d, crate::kb::VALIDATION_TOL));
    }
    out
}

pub fn run_selftest() -> Vec<SelfCheck> {
    run_selftest_with(&Evaluator::default())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn broken(n: usize, k: usize) -> Vec<Complex64> {
        let mut t = crate::spl::standard_twiddles(n, k);
        if let Some(last) = t.last_mut() {
            *last = last.conj();
        }
        t
    }

    #[test]
    fn fresh_build_passes() {
        let r = run_selftest();
        assert!(r.iter().all(|c| c.passed), "{:?}", r.iter().filter(|c| !c.passed).collect::<Vec<_>>());
    }

    #[test]
    fn corrupted_twiddles_fail() {
        let r = run_selftest_with(&Evaluator { twiddles: broken });
        assert!(r.iter().any(|c| !c.passed && c.name.starts_with("cooley-tukey")));
    }
}
