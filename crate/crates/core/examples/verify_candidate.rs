//! Checks hand-written SPL candidates against a kernel's extracted matrix.
//!
//! ```bash
//! cargo run --example verify_candidate
//! ```

use semlift::cli::verify_source;

const SOURCE: &str = include_str!("../kernels/fft_recursive.c");

fn main() {
    let candidates = [
        "RC(F(n))",
        "RC(Tensor(F(2), I(n/2)) * Diag(n, n/2)) * RC(Tensor(I(2), F(n/2))) * RC(L(n, 2))",
        "RC(Tensor(F(2), I(n/2))) * RC(Tensor(I(2), F(n/2))) * RC(L(n, 2))",
        "RC(L(n, 2))",
    ];
    for spl in candidates {
        let (code, report) = verify_source(SOURCE, "fft_recursive.c", spl, &[4, 8, 16, 32], 1e-10);
        print!("{report}");
        println!("exit {code}\n");
    }
}
