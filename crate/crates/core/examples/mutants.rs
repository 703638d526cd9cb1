//! Runs the lifter on single-edit variants of the FFT kernel and reports
//! the stage and evidence that rejects each one.
//!
//! ```bash
//! cargo run --example mutants
//! ```

use semlift::cli::{lift_source, LiftOptions};

const MUTANTS: [(&str, &str); 8] = [
    ("sign", include_str!("../kernels/fft_sign_mutant.c")),
    ("gather", include_str!("../kernels/fft_gather_mutant.c")),
    ("butterfly", include_str!("../kernels/fft_butterfly_mutant.c")),
    ("cos", include_str!("../kernels/fft_cos_mutant.c")),
    ("guard", include_str!("../kernels/fft_guard_mutant.c")),
    ("halfsize", include_str!("../kernels/fft_halfsize_mutant.c")),
    ("alias", include_str!("../kernels/fft_alias_mutant.c")),
    ("imag", include_str!("../kernels/fft_imag_mutant.c")),
];

fn main() {
    for (name, text) in MUTANTS {
        let (code, doc) = lift_source(text, name, &LiftOptions::default(), 0);
        let Some(f) = doc.failures.first() else {
            println!("{name:<10} exit {code}  NOT REJECTED");
            continue;
        };
        let worst = f.checks.iter().map(|c| c.deviation).fold(0.0, f64::max);
        println!("{name:<10} exit {code}  {:<10} max deviation {worst:.3e}", f.stage);
        println!("           {}", f.reason);
    }
}
