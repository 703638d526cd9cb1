use std::collections::BTreeMap;

use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use semlift::frontend::{
    interpret_ast, lower_to_icode, parse_kernel_source, print_unit, validate_kernel, FrontendError, Severity, Stmt,
};
use semlift::icode::{extract_linear_matrix, interpret};

const FFT: &str = include_str!("../kernels/fft_recursive.c");

fn count(stmts: &[Stmt], f: &impl Fn(&Stmt) -> bool) -> usize {
    stmts
        .iter()
        .map(|s| {
            let inner = match s {
                Stmt::For { body, .. } => count(body, f),
                _ => 0,
            };
            inner + usize::from(f(s))
        })
        .sum()
}

#[test]
fn fft_source_shape() {
    let unit = parse_kernel_source(FFT, "fft_recursive.c").unwrap();
    assert_eq!(unit.functions.len(), 1);
    let f = &unit.functions[0];
    assert_eq!(f.name, "fft_recursive");
    assert_eq!(f.array_params, vec!["data".to_string()]);
    assert_eq!(count(&f.body, &|s| matches!(s, Stmt::For { .. })), 2);
    assert_eq!(count(&f.body, &|s| matches!(s, Stmt::Call { .. })), 2);
    assert_eq!(count(&f.body, &|s| matches!(s, Stmt::Guard { .. })), 1);
    assert!((unit.pi_value() - std::f64::consts::PI).abs() < 1e-15);
}

#[test]
fn fft_validates_clean() {
    let unit = parse_kernel_source(FFT, "fft_recursive.c").unwrap();
    assert!(validate_kernel(&unit).is_empty());
}

fn random_arrays(rng: &mut ChaCha8Rng, names: &[&str], len: usize) -> BTreeMap<String, Vec<f64>> {
    names.iter().map(|n| (n.to_string(), (0..len).map(|_| rng.gen_range(-1.0..1.0)).collect())).collect()
}

#[test]
fn lowering_preserves_semantics_exactly() {
    let unit = parse_kernel_source(FFT, "fft_recursive.c").unwrap();
    let program = lower_to_icode(&unit, "fft_recursive").unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    for n in [2i64, 4, 8] {
        for _ in 0..4 {
            let arrays = random_arrays(&mut rng, &["data"], 2 * n as usize);
            let ast = interpret_ast(&unit, "fft_recursive", &arrays, n).unwrap();
            let ic = interpret(&program, "fft_recursive", &arrays, n).unwrap();
            assert_eq!(ast, ic, "n = {n}");
        }
    }
}

#[test]
fn swapped_recursive_calls_same_operator() {
    let swapped = FFT.replace(
        "fft_recursive(even, n / 2);\n    fft_recursive(odd, n / 2);",
        "fft_recursive(odd, n / 2);\n    fft_recursive(even, n / 2);",
    );
    assert_ne!(swapped, FFT);
    let a = lower_to_icode(&parse_kernel_source(FFT, "a.c").unwrap(), "fft_recursive").unwrap();
    let b = lower_to_icode(&parse_kernel_source(&swapped, "b.c").unwrap(), "fft_recursive").unwrap();
    let ma = extract_linear_matrix(&a, "fft_recursive", "data", &["data"], 4).unwrap();
    let mb = extract_linear_matrix(&b, "fft_recursive", "data", &["data"], 4).unwrap();
    assert_eq!(ma.max_abs_diff(&mb), Some(0.0));
}

#[test]
fn rejects_outside_subset() {
    let cases = [
        "void f(double* x, int n) { int i = 0; while (i < n) { x[i] = 0.0; } }",
        "void f(double* x, int n) { for (int i = 0; i < n; ++i) { x[n * i] = 1.0; } }",
        "void f(double* x, int n) { for (int i = 0; i < n / 3; ++i) { x[i] = 1.0; } }",
        "void f(double* x, int n) { for (int i = 1; i < n; ++i) { x[i] = 1.0; } }",
        "void f(double* x, int n) { for (int i = 0; i < n; ++i) { if (x[i] > 0.0) return; } }",
    ];
    for src in cases {
        assert!(parse_kernel_source(src, "t.c").is_err(), "{src}");
    }
}

#[test]
fn syntax_error_carries_position() {
    let err = parse_kernel_source("void f(double* x, int n) {\n    x[0] = ;\n}", "t.c").unwrap_err();
    assert!(matches!(err, FrontendError::Syntax { line: 2, .. }), "{err}");
}

#[test]
fn aliasing_call_is_an_error() {
    let src = "void g(double* y, double* x, int n) {\n    for (int i = 0; i < n; ++i) {\n        y[i] = x[i];\n    }\n}\n\
               void f(double* a, int n) {\n    g(a, a, n);\n}\n";
    let unit = parse_kernel_source(src, "alias.c").unwrap();
    let diags = validate_kernel(&unit);
    assert!(diags.iter().any(|d| d.severity == Severity::Error && d.message.contains("aliasing")), "{diags:?}");
}

#[test]
fn missing_free_warns() {
    let src = FFT.replace("free(odd);", "");
    let unit = parse_kernel_source(&src, "leak.c").unwrap();
    let diags = validate_kernel(&unit);
    assert!(diags.iter().any(|d| d.severity == Severity::Warning && d.message.contains("odd")), "{diags:?}");
}

fn kernel_text(alpha: f64, shift: u32, swap: bool) -> String {
    let (y, x) = if swap { ("dst", "src") } else { ("y", "x") };
    format!(
        "void k(double* {y}, double* {x}, int n) {{\n    for (int i = 0; i < n / {d}; ++i) {{\n        \
         double t = {alpha:?} * {x}[{d} * i];\n        {y}[i] = t + {x}[{d} * i + 1];\n    }}\n}}\n",
        d = 1u32 << shift,
    )
}

proptest! {
    #[test]
    fn print_parse_round_trip(alpha in -100.0f64..100.0, shift in 1u32..4, swap: bool) {
        let unit = parse_kernel_source(&kernel_text(alpha, shift, swap), "k.c").unwrap();
        let printed = print_unit(&unit);
        let again = parse_kernel_source(&printed, "k.c").unwrap();
        prop_assert_eq!(unit.without_positions(), again.without_positions());
        prop_assert_eq!(print_unit(&again), printed);
    }
}
