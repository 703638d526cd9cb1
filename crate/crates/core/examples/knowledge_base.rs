//! Names SPL expressions with the built-in templates, then registers a
//! user template (decimation in frequency) and shows a faulty one refused.
//!
//! ```bash
//! cargo run --example knowledge_base
//! ```

use semlift::kb::{parse_templates, KnowledgeBase};
use semlift::spl::parse_spl;

const USER: &str = r#"
template decimation_in_frequency
vars N m k
head DFT(N)
body L(N, k) * Tensor(I(m), F(k)) * Diag(N, k) * Tensor(F(m), I(k))
where N = m*k
where m >= 2
where k >= 2
validate m=2 k=2; m=2 k=4; m=4 k=2
transform DFT_{N}
signature {transform} : {field}^{N} → {field}^{N}
algorithm decimation in frequency, m={m}, k={k}
report {signature}, {algorithm}
provenance transposed Cooley-Tukey factorization
end

template missing_twiddles
vars N m k
head DFT(N)
body Tensor(F(m), I(k)) * Tensor(I(m), F(k)) * L(N, m)
where N = m*k
validate m=2 k=2
transform DFT_{N}
signature x
algorithm x
report x
provenance x
end
"#;

fn name(kb: &KnowledgeBase, spl: &str) {
    let expr = parse_spl(spl).expect("expression parses");
    match kb.match_specification(&expr) {
        Some(s) => println!("{spl}\n  -> [{}] {}", s.template, s.summary),
        None => println!("{spl}\n  -> no template"),
    }
}

fn main() {
    let mut kb = KnowledgeBase::builtin();
    for t in kb.templates() {
        println!("template {:<20} validated to {:.1e}", t.name, t.validate().unwrap());
    }
    println!();
    name(&kb, "RC(Tensor(F(2), I(n/2)) * Diag(n, n/2) * Tensor(I(2), F(n/2)) * L(n, 2))");
    name(&kb, "Tensor(F(4), I(2)) * Diag(8, 2) * Tensor(I(4), F(2)) * L(8, 4)");
    name(&kb, "RC(L(n, 2))");
    name(&kb, "Augment(I(n), Scale(2.5, I(n)))");
    name(&kb, "L(n, n/2) * Tensor(I(2), F(n/2)) * Diag(n, n/2) * Tensor(F(2), I(n/2))");

    println!();
    for t in parse_templates(USER).expect("templates parse") {
        let label = t.name.clone();
        match kb.register_template(t) {
            Ok(pos) => println!("registered {label} at position {pos}"),
            Err(e) => println!("refused {label}: {e}"),
        }
    }
    name(&kb, "L(n, n/2) * Tensor(I(2), F(n/2)) * Diag(n, n/2) * Tensor(F(2), I(n/2))");
}
