//! Parses KernelC, prints the canonical form, and shows the diagnostics and
//! lowered icode.
//!
//! ```bash
//! cargo run --example parse_print
//! ```

use semlift::frontend::{lower_to_icode, parse_kernel_source, print_unit, validate_kernel};

const LEAKY: &str = r#"
void scale_half(double* y, double* x, int n) {
    double* t = (double*)malloc(n * sizeof(double));
    for (int i = 0; i < n; ++i) {
        t[i] = 0.5 * x[i];
    }
    for (int i = 0; i < n; ++i) {
        y[i] = t[i];
    }
}
"#;

fn main() {
    let unit = parse_kernel_source(LEAKY, "scale_half.c").expect("kernel parses");
    println!("{}", print_unit(&unit));

    for d in validate_kernel(&unit) {
        println!("{d}");
    }

    let program = lower_to_icode(&unit, "scale_half").expect("kernel lowers");
    println!("\nicode ({}):", program.size_constraint);
    for stmt in &program.entry_function().body {
        println!("{stmt}");
    }

    match parse_kernel_source("void f(double* x, int n) {\n  while (n) { }\n}", "bad.c") {
        Ok(_) => unreachable!(),
        Err(e) => println!("rejected: {e}"),
    }
}
