//! One pass/fail line per acceptance criterion. Reference values are
//! computed here from first principles rather than from library evaluators
//! wherever the criterion allows it.

use std::collections::BTreeMap;
use std::f64::consts::PI;
use std::time::Instant;

use num_complex::Complex64;
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use semlift::cli::{lift_source, run_selftest, LiftOptions, EXIT_INPUT, EXIT_LIFT, EXIT_OK};
use semlift::frontend::{lower_to_icode, parse_kernel_source};
use semlift::icode::{extract_linear_matrix, Stmt};
use semlift::lifter::{candidate_matrix, kernel_matrix, recognize_stride_permutation};
use semlift::matrix::{interleave, ComplexMat, RealMat};
use semlift::sigma::{analyze_program, lift_loop};
use semlift::spl::{eval_rc, eval_spl, normalize, parse_spl, SplExpr};

const FFT: &str = include_str!("../kernels/fft_recursive.c");
const AXPY: &str = include_str!("../kernels/axpy.c");

const POSITIVES: [(&str, &str); 4] = [
    ("fft_recursive.c", FFT),
    ("axpy.c", AXPY),
    ("copy.c", include_str!("../kernels/copy.c")),
    ("stride_perm.c", include_str!("../kernels/stride_perm.c")),
];

const MUTANTS: [(&str, &str); 8] = [
    ("fft_sign_mutant.c", include_str!("../kernels/fft_sign_mutant.c")),
    ("fft_gather_mutant.c", include_str!("../kernels/fft_gather_mutant.c")),
    ("fft_butterfly_mutant.c", include_str!("../kernels/fft_butterfly_mutant.c")),
    ("fft_cos_mutant.c", include_str!("../kernels/fft_cos_mutant.c")),
    ("fft_guard_mutant.c", include_str!("../kernels/fft_guard_mutant.c")),
    ("fft_halfsize_mutant.c", include_str!("../kernels/fft_halfsize_mutant.c")),
    ("fft_alias_mutant.c", include_str!("../kernels/fft_alias_mutant.c")),
    ("fft_imag_mutant.c", include_str!("../kernels/fft_imag_mutant.c")),
];

const DFT_SPEC: &str = "DFT_n : C^n → C^n, recursive Cooley-Tukey, m=2, k=n/2";
const RECURSIVE_FORM: &str = "RC(Tensor(F(2), I(n/2)) * Diag(n, n/2)) * Tensor(I(2), M(n/2)) * RC(L(n, 2))";
const CLOSED_FORM: &str = "RC(Tensor(F(2), I(n/2)) * Diag(n, n/2)) * RC(Tensor(I(2), F(n/2))) * RC(L(n, 2))";

type Outcome = Result<String, String>;

/// Name, check, time budget in seconds.
type Criterion = (&'static str, fn() -> Outcome, f64);

fn ensure(cond: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg())
    }
}

/// `e^{-2πi·e/n}` from cos/sin.
fn omega(n: usize, e: usize) -> Complex64 {
    let t = -2.0 * PI * (e % n) as f64 / n as f64;
    Complex64::new(t.cos(), t.sin())
}

fn dft(n: usize) -> ComplexMat {
    ComplexMat::from_fn(n, n, |k, l| omega(n, k * l))
}

/// Interleaved real form written out entry by entry.
fn rc_of(m: &ComplexMat) -> RealMat {
    let (r, c) = m.dims();
    RealMat::from_fn(2 * r, 2 * c, |i, j| {
        let z = m[(i / 2, j / 2)];
        match (i % 2, j % 2) {
            (0, 0) | (1, 1) => z.re,
            (0, 1) => -z.im,
            _ => z.im,
        }
    })
}

fn program(src: &str) -> semlift::icode::IcodeProgram {
    let unit = parse_kernel_source(src, "k.c").expect("parses");
    let entry = unit.functions[0].name.clone();
    lower_to_icode(&unit, &entry).expect("lowers")
}

fn criterion_1() -> Outcome {
    let (code, doc) = lift_source(FFT, "fft_recursive.c", &LiftOptions::default(), 0);
    ensure(code == EXIT_OK, || format!("exit {code}, failures {:?}", doc.failures))?;

    // (a) loop 1 as a sum of scatter/gather outer products.
    let p = program(FFT);
    let f = p.entry_function();
    let loop1 = f.body.iter().find(|s| matches!(s, Stmt::Loop { .. })).unwrap();
    let extents = analyze_program(&p).map_err(|e| e.to_string())?.remove("fft_recursive").unwrap();
    let lifted = lift_loop(loop1, &extents).map_err(|e| e.to_string())?;
    ensure(lifted.outputs == ["even", "odd"] && lifted.inputs == ["data"], || format!("{lifted:?}"))?;
    for n in [2i64, 4, 8, 16] {
        let mut got = lifted.term.enumerate(n).map_err(|e| e.to_string())?;
        got.sort_by(|a, b| a.partial_cmp(b).unwrap());
        let mut want = Vec::new();
        for j in 0..n / 2 {
            for i in 0..4 {
                let array_offset = if i < 2 { 0 } else { n };
                want.push((2 * j + (i % 2) + array_offset, 4 * j + i, 1.0));
            }
        }
        want.sort_by(|a, b| a.partial_cmp(b).unwrap());
        ensure(got == want, || format!("sigma-spl atoms differ at n = {n}"))?;
        ensure(lifted.term.dims(n).ok().flatten() == Some((2 * n, 2 * n)), || format!("dims at n = {n}"))?;
    }
    let sigma_text = lifted.term.to_string();
    ensure(doc.stages[0].input == sigma_text, || format!("stage 0 input {}", doc.stages[0].input))?;

    // (b) Reported components, verbatim.
    let text = doc.render_text(&semlift::cli::Emit::ALL);
    for s in ["RC(L(n, 2))", "RC(Tensor(F(2), I(n/2)) * Diag(n, n/2))"] {
        ensure(text.contains(s), || format!("report lacks `{s}`"))?;
    }
    // (c) recursive equation, (d) closed form: structural equality after normalization.
    let eq = doc.equation.clone().ok_or("no equation")?;
    let rhs = eq.strip_prefix("M(n) = ").ok_or_else(|| format!("equation `{eq}`"))?;
    let same = |a: &str, b: &str| -> Result<bool, String> {
        Ok(normalize(&parse_spl(a).map_err(|e| e.to_string())?) == normalize(&parse_spl(b).map_err(|e| e.to_string())?))
    };
    ensure(same(rhs, RECURSIVE_FORM)?, || format!("equation {rhs}"))?;
    let closed = doc.closed_spl.clone().ok_or("no closed form")?;
    ensure(same(&closed, CLOSED_FORM)?, || format!("closed {closed}"))?;
    // (e) specification.
    ensure(doc.specification.as_deref() == Some(DFT_SPEC), || format!("{:?}", doc.specification))?;
    Ok(format!("{} stages, spec `{DFT_SPEC}`", doc.stages.len()))
}

fn criterion_2() -> Outcome {
    let p = program(FFT);
    let mut worst: f64 = 0.0;
    for n in [2usize, 4, 8, 16, 32] {
        let oracle = extract_linear_matrix(&p, "fft_recursive", "data", &["data"], n as i64).map_err(|e| e.to_string())?;
        let via_eval = eval_rc(&SplExpr::rc(SplExpr::dft(n as u64)), n as i64).map_err(|e| e.to_string())?;
        let direct = rc_of(&dft(n));
        let d1 = oracle.max_abs_diff(&via_eval).ok_or("dims")?;
        let d2 = oracle.max_abs_diff(&direct).ok_or("dims")?;
        worst = worst.max(d1).max(d2);
        ensure(d1 <= 1e-9 && d2 <= 1e-9, || format!("n = {n}: {d1:e}, {d2:e}"))?;
    }
    Ok(format!("max deviation {worst:.3e}"))
}

fn criterion_3() -> Outcome {
    let mut worst: f64 = 0.0;
    for (m, k) in [(2u64, 2u64), (2, 4), (4, 2), (2, 8), (4, 4)] {
        let rhs = SplExpr::compose(vec![
            SplExpr::tensor(SplExpr::dft(m), SplExpr::id(k)),
            SplExpr::t(m * k, k),
            SplExpr::tensor(SplExpr::id(m), SplExpr::dft(k)),
            SplExpr::l(m * k, m),
        ]);
        let lhs = eval_spl(&rhs, 1).map_err(|e| e.to_string())?;
        let d_lib = lhs.max_abs_diff(&eval_spl(&SplExpr::dft(m * k), 1).map_err(|e| e.to_string())?).ok_or("dims")?;
        let d_ref = lhs.max_abs_diff(&dft((m * k) as usize)).ok_or("dims")?;
        worst = worst.max(d_lib).max(d_ref);
        ensure(d_lib <= 1e-10 && d_ref <= 1e-10, || format!("(m,k) = ({m},{k}): {d_lib:e}, {d_ref:e}"))?;
    }
    Ok(format!("max deviation {worst:.3e}"))
}

fn stride_kernel(rng: &mut ChaCha8Rng, m: i64, scramble: bool) -> String {
    let mut gathers: Vec<i64> = (0..m).collect();
    if scramble {
        while gathers.iter().enumerate().all(|(j, &g)| j as i64 == g) {
            gathers.shuffle(rng);
        }
    }
    let mut order: Vec<i64> = (0..m).collect();
    order.shuffle(rng);
    let (y, x) = *[("y", "x"), ("out", "in"), ("dst", "src")].choose(rng).unwrap();
    let mut body = String::new();
    for j in order {
        body.push_str(&format!("        {y}[i + {j} * (n / {m})] = {x}[{m} * i + {}];\n", gathers[j as usize]));
    }
    format!("void k(double* {y}, double* {x}, int n) {{\n    for (int i = 0; i < n / {m}; ++i) {{\n{body}    }}\n}}\n")
}

fn criterion_4() -> Outcome {
    for n in [4u64, 8, 16] {
        for m in (1..=n).filter(|m| n % m == 0) {
            let prod = SplExpr::compose(vec![SplExpr::l(n, m), SplExpr::l(n, n / m)]);
            let d = eval_spl(&prod, 1).map_err(|e| e.to_string())?.max_abs_diff(&ComplexMat::identity(n as usize));
            ensure(d == Some(0.0), || format!("L({n},{m}) L({n},{}) deviates by {d:?}", n / m))?;
        }
    }
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let probes = [4i64, 8, 16];
    let (mut recovered, mut false_matches, mut positives) = (0, 0, 0);
    for case in 0..100 {
        let m = *[2i64, 4, 8].choose(&mut rng).unwrap();
        let scramble = case % 4 == 3;
        let p = program(&stride_kernel(&mut rng, m, scramble));
        let extents = analyze_program(&p).map_err(|e| e.to_string())?.remove("k").unwrap();
        let term = lift_loop(&p.entry_function().body[0], &extents).map_err(|e| e.to_string())?.term;
        let got = recognize_stride_permutation(&term, &probes);
        if let Some(c) = &got {
            for &n in &probes {
                let Ok(sigma) = semlift::sigma::eval_sigma(&term, n) else { continue };
                if candidate_matrix(c, n).ok().and_then(|cm| cm.max_abs_diff(&sigma)) != Some(0.0) {
                    false_matches += 1;
                }
            }
        }
        if !scramble {
            positives += 1;
            if got.as_ref().map(ToString::to_string) == Some(format!("L(n, {m})")) {
                recovered += 1;
            }
        } else if matches!(got, Some(SplExpr::L { .. })) {
            false_matches += 1;
        }
    }
    ensure(recovered == positives && false_matches == 0, || {
        format!("recovered {recovered}/{positives}, false matches {false_matches}")
    })?;
    Ok(format!("L inverse exact; {recovered}/{positives} strides recovered, 0 false matches in 100 loops"))
}

fn criterion_5() -> Outcome {
    let pool = [
        SplExpr::dft(4u64),
        SplExpr::l(8u64, 2u64),
        SplExpr::t(8u64, 4u64),
        SplExpr::compose(vec![SplExpr::t(8u64, 4u64), SplExpr::l(8u64, 2u64)]),
        SplExpr::compose(vec![SplExpr::dft(4u64), SplExpr::l(4u64, 2u64), SplExpr::t(4u64, 2u64)]),
    ];
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let mut worst: f64 = 0.0;
    for trial in 0..20 {
        let a = &pool[trial % pool.len()];
        let complex = eval_spl(a, 1).map_err(|e| e.to_string())?;
        let real = eval_rc(&SplExpr::rc(a.clone()), 1).map_err(|e| e.to_string())?;
        let x: Vec<Complex64> =
            (0..complex.cols()).map(|_| Complex64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0))).collect();
        let lhs = real.apply(&interleave(&x)).ok_or("dims")?;
        let rhs = interleave(&complex.apply(&x).ok_or("dims")?);
        let d = lhs.iter().zip(&rhs).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
        worst = worst.max(d);
        ensure(d <= 1e-12, || format!("{a}: {d:e}"))?;
    }
    Ok(format!("20 vectors, max deviation {worst:.3e}"))
}

fn criterion_6() -> Outcome {
    for alpha in [0.0f64, 1.0, 2.5] {
        let src = AXPY.replace("2.5 * x[i]", &format!("{alpha:?} * x[i]"));
        let (code, doc) = lift_source(&src, "axpy.c", &LiftOptions::default(), 0);
        ensure(code == EXIT_OK, || format!("alpha {alpha}: exit {code} {:?}", doc.failures))?;
        let want = format!("Augment(I(n), Scale({alpha:?}, I(n)))");
        let closed = doc.closed_spl.clone().unwrap_or_default();
        ensure(closed == want, || format!("alpha {alpha}: {closed}"))?;
        let expr = parse_spl(&closed).map_err(|e| e.to_string())?;
        let p = program(&src);
        for n in [4usize, 8] {
            let oracle = kernel_matrix(&p, "axpy", n as i64).map_err(|e| e.to_string())?;
            let reference = RealMat::from_fn(n, 2 * n, |r, c| {
                if c == r {
                    1.0
                } else if c == n + r {
                    alpha
                } else {
                    0.0
                }
            });
            let evaluated = candidate_matrix(&expr, n as i64).map_err(|e| e.to_string())?;
            let d1 = oracle.max_abs_diff(&evaluated).ok_or("dims")?;
            let d2 = oracle.max_abs_diff(&reference).ok_or("dims")?;
            ensure(d1 <= 1e-12 && d2 <= 1e-12, || format!("alpha {alpha}, n = {n}: {d1:e} {d2:e}"))?;
        }
    }
    Ok("alpha in {0, 1, 2.5}, n in {4, 8}".into())
}

fn criterion_7() -> Outcome {
    let mut outcomes = Vec::new();
    for (name, src) in MUTANTS {
        let (code, doc) = lift_source(src, name, &LiftOptions::default(), 0);
        let eq6 = doc.closed_spl.as_deref().and_then(|c| parse_spl(c).ok()).map(|c| normalize(&c))
            == parse_spl(CLOSED_FORM).ok().map(|e| normalize(&e));
        ensure(code != EXIT_OK && !eq6 && doc.specification.as_deref() != Some(DFT_SPEC), || {
            format!("{name} was not rejected")
        })?;
        let stage = doc.failures.first().map(|f| f.stage.as_str()).unwrap_or("?");
        outcomes.push(format!("{}:{stage}", name.trim_start_matches("fft_").trim_end_matches("_mutant.c")));
    }
    Ok(format!("8/8 rejected ({})", outcomes.join(", ")))
}

fn criterion_8() -> Outcome {
    let opts = LiftOptions { json: true, ..LiftOptions::default() };
    for (name, src) in POSITIVES.iter().chain(MUTANTS.iter()) {
        let (c1, a) = lift_source(src, name, &opts, 1);
        let (c2, b) = lift_source(src, name, &opts, 2);
        ensure(c1 == c2, || format!("{name}: exit {c1} then {c2}"))?;
        let strip = |s: String| s.lines().filter(|l| !l.contains("\"timestamp\"")).collect::<Vec<_>>().join("\n");
        ensure(strip(a.to_json()) == strip(b.to_json()), || format!("{name}: reports differ"))?;
        let want = if name.contains("mutant") { [EXIT_INPUT, EXIT_LIFT].contains(&c1) } else { c1 == EXIT_OK };
        ensure(want, || format!("{name}: exit {c1}"))?;
    }
    let (bad, _) = lift_source("void f(double* y, int n) { y[0] = ; }", "bad.c", &opts, 0);
    ensure(bad == EXIT_INPUT, || format!("syntax error exit {bad}"))?;
    let failed: Vec<String> = run_selftest().into_iter().filter(|c| !c.passed).map(|c| c.name).collect();
    ensure(failed.is_empty(), || format!("selftest failures {failed:?}"))?;
    Ok(format!("{} inputs deterministic, exit contract holds, selftest passes", POSITIVES.len() + MUTANTS.len()))
}

fn main() {
    let criteria: [Criterion; 8] = [
        ("end-to-end lift of the recursive FFT", criterion_1, 5.0),
        ("oracle equals RC(DFT(n)) for n in 2..32", criterion_2, 10.0),
        ("Cooley-Tukey identity", criterion_3, f64::INFINITY),
        ("stride permutations", criterion_4, f64::INFINITY),
        ("RC homomorphism", criterion_5, f64::INFINITY),
        ("axpy lift", criterion_6, f64::INFINITY),
        ("mutation suite", criterion_7, f64::INFINITY),
        ("determinism and report contract", criterion_8, f64::INFINITY),
    ];
    let mut failures = 0;
    let mut results = BTreeMap::new();
    for (i, (name, run, budget)) in criteria.iter().enumerate() {
        let start = Instant::now();
        let outcome = std::panic::catch_unwind(run).unwrap_or_else(|_| Err("panicked".into()));
        let secs = start.elapsed().as_secs_f64();
        let outcome = match outcome {
            Ok(_) if secs > *budget => Err(format!("took {secs:.2} s, budget {budget} s")),
            o => o,
        };
        let line = match &outcome {
            Ok(detail) => format!("criterion {}: PASS  {name} ({secs:.2} s): {detail}", i + 1),
            Err(why) => {
                failures += 1;
                format!("criterion {}: FAIL  {name} ({secs:.2} s): {why}", i + 1)
            }
        };
        println!("{line}");
        results.insert(i + 1, outcome.is_ok());
    }
    if failures > 0 {
        std::process::exit(1);
    }
}
