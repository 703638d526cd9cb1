//! Lifts the recursive radix-2 FFT kernel to its closed SPL form and names it.
//!
//! ```bash
//! cargo run --example lift_fft
//! ```

use semlift::frontend::{lower_to_icode, parse_kernel_source};
use semlift::lifter::{run_lift, LiftConfig};

const SOURCE: &str = include_str!("../kernels/fft_recursive.c");

fn main() {
    let unit = parse_kernel_source(SOURCE, "fft_recursive.c").expect("kernel parses");
    let program = lower_to_icode(&unit, "fft_recursive").expect("kernel lowers");
    let trace = run_lift(&program, "fft_recursive", &LiftConfig::default());

    for step in &trace.steps {
        println!("{:<20} {}", step.rule, step.output);
    }
    if let Some(eq) = &trace.equation {
        println!("\nequation: {eq}");
    }
    if let Some(closed) = &trace.closed {
        println!("closed:   {}", closed.expr);
    }
    match &trace.specification {
        Some(spec) => println!("spec:     {}", spec.summary),
        None => println!("lift failed: {:?}", trace.failures),
    }
}
