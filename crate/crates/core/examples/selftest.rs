//! Runs the algebraic identity suite, then again with a corrupted twiddle
//! table to show the suite catching it.
//!
//! ```bash
//! cargo run --example selftest
//! ```

use num_complex::Complex64;
use semlift::cli::{run_selftest, run_selftest_with, selftest_report};
use semlift::spl::{standard_twiddles, Evaluator};

fn conjugated_last(n: usize, k: usize) -> Vec<Complex64> {
    let mut t = standard_twiddles(n, k);
    if let Some(w) = t.last_mut() {
        *w = w.conj();
    }
    t
}

fn main() {
    let (code, text) = selftest_report(&run_selftest(), false);
    print!("{text}");
    println!("exit {code}\n");

    let broken = run_selftest_with(&Evaluator { twiddles: conjugated_last });
    for c in broken.iter().filter(|c| !c.passed) {
        println!("caught: {} (deviation {:.3e})", c.name, c.deviation);
    }
}
