use std::path::PathBuf;
use std::process::Command;

use semlift::cli::{lift_source, parse_emit, parse_sizes, verify_source, Emit, LiftOptions, EXIT_INPUT, EXIT_LIFT, EXIT_OK};

const FFT: &str = include_str!("../kernels/fft_recursive.c");
const CLOSED_FORM: &str = "RC(Tensor(F(2), I(n/2)) * Diag(n, n/2)) * RC(Tensor(I(2), F(n/2))) * RC(L(n, 2))";

fn kernel(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("kernels").join(name)
}

fn run(args: &[&str]) -> (i32, String) {
    let out = Command::new(env!("CARGO_BIN_EXE_semlift")).args(args).output().unwrap();
    (out.status.code().unwrap(), String::from_utf8_lossy(&out.stdout).into_owned())
}

#[test]
fn lift_fft_text_report() {
    let path = kernel("fft_recursive.c");
    let (code, out) = run(&["lift", path.to_str().unwrap()]);
    assert_eq!(code, EXIT_OK, "{out}");
    for needle in [
        "RC(L(n, 2))",
        "RC(Tensor(F(2), I(n/2)) * Diag(n, n/2))",
        "Tensor(I(2), M(n/2))",
        CLOSED_FORM,
        "DFT_n : C^n → C^n, recursive Cooley-Tukey, m=2, k=n/2",
        "verified at sizes 4, 8, 16",
        "computer-algebra grade",
    ] {
        assert!(out.contains(needle), "missing `{needle}` in\n{out}");
    }
}

#[test]
fn exit_codes() {
    let sign = kernel("fft_sign_mutant.c");
    assert_eq!(run(&["lift", sign.to_str().unwrap()]).0, EXIT_LIFT);
    assert_eq!(run(&["lift", "/nonexistent/kernel.c"]).0, EXIT_INPUT);
    let fft = kernel("fft_recursive.c");
    assert_eq!(run(&["lift", fft.to_str().unwrap(), "--sizes", "4,6"]).0, EXIT_INPUT);
    let (code, _) = lift_source("void f(double* x, int n) { x[0] = ; }", "bad.c", &LiftOptions::default(), 0);
    assert_eq!(code, EXIT_INPUT);
}

#[test]
fn json_is_deterministic() {
    let a = lift_source(FFT, "fft.c", &LiftOptions::default(), 7).1.to_json();
    let b = lift_source(FFT, "fft.c", &LiftOptions::default(), 7).1.to_json();
    assert_eq!(a, b);
    let v: serde_json::Value = serde_json::from_str(&a).unwrap();
    assert_eq!(v["closed_spl"], CLOSED_FORM);
    assert!(v["failures"].as_array().unwrap().is_empty());
}

#[test]
fn json_flag_emits_json() {
    let path = kernel("axpy.c");
    let (code, out) = run(&["lift", path.to_str().unwrap(), "--json"]);
    assert_eq!(code, EXIT_OK);
    let v: serde_json::Value = serde_json::from_str(&out).unwrap();
    assert!(v["specification"].as_str().is_some());
}

#[test]
fn verify_candidates() {
    assert_eq!(verify_source(FFT, "fft.c", CLOSED_FORM, &[4, 8, 16], 1e-10).0, EXIT_OK);
    assert_eq!(verify_source(FFT, "fft.c", "RC(L(n, 2))", &[4, 8], 1e-10).0, EXIT_LIFT);
    assert_eq!(verify_source(FFT, "fft.c", "RC(F(n))", &[4, 8, 16], 1e-10).0, EXIT_OK);
    assert_eq!(verify_source(FFT, "fft.c", CLOSED_FORM, &[4, 6], 1e-10).0, EXIT_INPUT);
}

#[test]
fn selftest_binary() {
    let (code, out) = run(&["selftest"]);
    assert_eq!(code, EXIT_OK, "{out}");
    assert!(out.contains("identities hold"));
}

#[test]
fn option_parsing() {
    assert_eq!(parse_sizes("4, 8,16").unwrap(), vec![4, 8, 16]);
    assert!(parse_sizes("4,12").is_err());
    assert!(parse_sizes("1").is_err());
    assert_eq!(parse_emit("spl,spec").unwrap(), vec![Emit::Spl, Emit::Spec]);
    assert!(parse_emit("ast").is_err());
}

#[test]
fn emit_filters_sections() {
    let (_, doc) = lift_source(FFT, "fft.c", &LiftOptions::default(), 0);
    let only_spec = doc.render_text(&[Emit::Spec]);
    assert!(only_spec.contains("specification:"));
    assert!(!only_spec.contains("sigma-spl:"));
    assert!(!only_spec.contains("soundness evidence:"));
}
