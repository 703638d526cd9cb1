use num_complex::Complex64;
use proptest::prelude::*;

use semlift::frontend::{lower_to_icode, parse_kernel_source};
use semlift::icode::IcodeProgram;
use semlift::kb::{parse_templates, KnowledgeBase};
use semlift::lifter::{run_lift, verify_trace, LiftConfig, StepKind};
use semlift::matrix::{interleave, ComplexMat};
use semlift::spl::{eval_rc, eval_spl, parse_spl, SplExpr};

const FFT: &str = include_str!("../kernels/fft_recursive.c");

fn lower(src: &str, entry: &str) -> IcodeProgram {
    lower_to_icode(&parse_kernel_source(src, "t.c").unwrap(), entry).unwrap()
}

#[test]
fn fft_lift_trace() {
    let p = lower(FFT, "fft_recursive");
    let trace = run_lift(&p, "fft_recursive", &LiftConfig::default());
    assert!(trace.succeeded(), "{:?}", trace.failures);
    let eq = trace.equation.as_ref().unwrap();
    assert_eq!(
        eq.rhs.to_string(),
        "RC(Tensor(F(2), I(n/2)) * Diag(n, n/2)) * Tensor(I(2), M(n/2)) * RC(L(n, 2))"
    );
    let closed = trace.closed.as_ref().unwrap();
    assert_eq!(
        closed.expr.to_string(),
        "RC(Tensor(F(2), I(n/2)) * Diag(n, n/2)) * RC(Tensor(I(2), F(n/2))) * RC(L(n, 2))"
    );
    let spec = trace.specification.as_ref().unwrap();
    assert_eq!(spec.template, "cooley_tukey");
    assert_eq!(spec.field, "C");
    assert!(trace.trials <= trace.trial_bound);
    for s in &trace.steps {
        assert!(s.checks.iter().all(|c| c.deviation <= s.tolerance), "{}", s.rule);
    }
    assert!(trace.steps.iter().any(|s| s.kind == StepKind::Induction));
    verify_trace(&p, &trace).unwrap();
}

#[test]
fn tampered_trace_is_rejected() {
    let p = lower(FFT, "fft_recursive");
    let mut trace = run_lift(&p, "fft_recursive", &LiftConfig::default());
    let step = trace.steps.iter_mut().find(|s| s.kind == StepKind::Permutation).unwrap();
    step.output = parse_spl("RC(I(n))").unwrap();
    assert!(verify_trace(&p, &trace).is_err());
}

#[test]
fn sign_mutant_fails_with_evidence() {
    let p = lower(include_str!("../kernels/fft_sign_mutant.c"), "fft_recursive");
    let trace = run_lift(&p, "fft_recursive", &LiftConfig::default());
    assert!(!trace.succeeded());
    assert!(trace.specification.is_none());
    let f = &trace.failures[0];
    assert!(f.checks.iter().any(|c| c.deviation > 1e-6), "{f:?}");
}

#[test]
fn stride_kernel_lifts_to_permutation() {
    let p = lower(include_str!("../kernels/stride_perm.c"), "stride_perm");
    let trace = run_lift(&p, "stride_perm", &LiftConfig::default());
    assert!(trace.succeeded(), "{:?}", trace.failures);
    assert_eq!(trace.closed.unwrap().expr.to_string(), "L(n, 2)");
}

#[test]
fn builtin_templates_validate() {
    let kb = KnowledgeBase::builtin();
    assert!(kb.templates().len() >= 3);
    for t in kb.templates() {
        assert!(t.validate().unwrap() <= semlift::kb::VALIDATION_TOL, "{}", t.name);
    }
}

#[test]
fn wrong_template_is_refused() {
    let text = "template bad_ct\nvars N m k\nhead DFT(N)\n\
                body Tensor(F(m), I(k)) * Tensor(I(m), F(k)) * L(N, m)\n\
                where N = m*k\nvalidate m=2 k=2\ntransform DFT_{N}\nsignature x\nalgorithm x\nreport x\nprovenance x\nend\n";
    let t = parse_templates(text).unwrap().remove(0);
    let mut kb = KnowledgeBase::new();
    assert!(kb.register_template(t).is_err());
}

#[test]
fn duplicate_template_is_refused() {
    let mut kb = KnowledgeBase::builtin();
    let first = kb.templates()[0].clone();
    assert!(kb.register_template(first).is_err());
}

#[test]
fn specification_strips_one_rc() {
    let kb = KnowledgeBase::builtin();
    let real = kb.match_specification(&parse_spl("I(n)").unwrap()).unwrap();
    assert_eq!(real.field, "R");
    let ct = parse_spl("RC(Tensor(F(2), I(4)) * Diag(8, 4) * Tensor(I(2), F(4)) * L(8, 2))").unwrap();
    let c = kb.match_specification(&ct).unwrap();
    assert_eq!((c.template.as_str(), c.field), ("cooley_tukey", "C"));
}

fn size_and_stride() -> impl Strategy<Value = (u64, u64)> {
    (1u32..6).prop_flat_map(|k| (Just(1u64 << k), 0..=k)).prop_map(|(n, j)| (n, 1u64 << j))
}

proptest! {
    #[test]
    fn stride_permutation_inverse((n, m) in size_and_stride()) {
        let prod = SplExpr::compose(vec![SplExpr::l(n, m), SplExpr::l(n, n / m)]);
        let d = eval_spl(&prod, 1).unwrap().max_abs_diff(&ComplexMat::identity(n as usize));
        prop_assert_eq!(d, Some(0.0));
    }

    #[test]
    fn rc_is_a_homomorphism(
        k in 1u32..4,
        xs in proptest::collection::vec((-1.0f64..1.0, -1.0f64..1.0), 16),
    ) {
        let n = 1u64 << k;
        let a = SplExpr::compose(vec![SplExpr::t(2 * n, n), SplExpr::l(2 * n, 2)]);
        let x: Vec<Complex64> = xs.iter().take(2 * n as usize).map(|&(r, i)| Complex64::new(r, i)).collect();
        let lhs = eval_rc(&SplExpr::rc(a.clone()), 1).unwrap().apply(&interleave(&x)).unwrap();
        let rhs = interleave(&eval_spl(&a, 1).unwrap().apply(&x).unwrap());
        let d = lhs.iter().zip(&rhs).map(|(p, q)| (p - q).abs()).fold(0.0, f64::max);
        prop_assert!(d <= 1e-12, "deviation {}", d);
    }
}
