//! Lifts a pointwise `y = y + alpha*x` kernel for several scalars.
//!
//! ```bash
//! cargo run --example axpy_lift
//! ```

use semlift::cli::{lift_source, Emit, LiftOptions};

fn kernel(alpha: f64) -> String {
    format!(
        "void axpy(double* y, double* x, int n) {{\n    for (int i = 0; i < n; ++i) {{\n        \
         y[i] = y[i] + {alpha:?} * x[i];\n    }}\n}}\n"
    )
}

fn main() {
    let opts = LiftOptions { emit: vec![Emit::Spl, Emit::Spec], ..LiftOptions::default() };
    for alpha in [2.5, 1.0, 0.0, -3.0] {
        let (code, doc) = lift_source(&kernel(alpha), "axpy.c", &opts, 0);
        println!("alpha = {alpha} (exit {code})");
        println!("  spl:  {}", doc.closed_spl.as_deref().unwrap_or("-"));
        println!("  spec: {}", doc.specification.as_deref().unwrap_or("-"));
    }
}
