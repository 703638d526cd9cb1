//! Raises each loop of a kernel to a Σ-SPL term and recognizes permutations.
//!
//! ```bash
//! cargo run --example sigma_spl
//! ```

use semlift::frontend::{lower_to_icode, parse_kernel_source};
use semlift::icode::Stmt;
use semlift::lifter::{recognize_complex_permutation, recognize_stride_permutation};
use semlift::sigma::{analyze_program, eval_sigma, lift_loop};

const SOURCES: [(&str, &str, &str); 2] = [
    ("stride_perm.c", "stride_perm", include_str!("../kernels/stride_perm.c")),
    ("fft_recursive.c", "fft_recursive", include_str!("../kernels/fft_recursive.c")),
];

fn main() {
    let probes = [4, 8, 16];
    for (file, entry, text) in SOURCES {
        println!("== {file}");
        let program = lower_to_icode(&parse_kernel_source(text, file).unwrap(), entry).unwrap();
        let extents = analyze_program(&program).unwrap().remove(entry).unwrap();
        for stmt in program.entry_function().body.iter().filter(|s| matches!(s, Stmt::Loop { .. })) {
            let lifted = match lift_loop(stmt, &extents) {
                Ok(l) => l,
                Err(e) => {
                    println!("arithmetic loop, left to the butterfly rule: {e}");
                    continue;
                }
            };
            println!("{} <- {}", lifted.outputs.join("‖"), lifted.inputs.join("‖"));
            println!("  {}", lifted.term);
            if let Ok(m) = eval_sigma(&lifted.term, 4) {
                println!("  at n = 4: {}x{} matrix, permutation: {}", m.rows(), m.cols(), m.is_permutation());
            }
            let recognized = recognize_stride_permutation(&lifted.term, &probes)
                .or_else(|| recognize_complex_permutation(&lifted.term, &probes));
            match recognized {
                Some(spl) => println!("  = {spl}"),
                None => println!("  not a stride permutation"),
            }
        }
    }
}
