//! Knowledge base of named transform templates and the final
//! SPL → specification match.

mod format;

use std::collections::BTreeMap;
use std::f64::consts::PI;

use num_complex::Complex64;
use thiserror::Error;

use crate::matrix::ComplexMat;
use crate::spl::{eval_spl, normalize, structural_match, Bindings, Constraint, SizeExpr, SplError, SplExpr};

pub use format::parse_templates;

const BUILTIN: &str = include_str!("builtin.kb");

/// Head-versus-body tolerance at registration.
pub const VALIDATION_TOL: f64 = 1e-10;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum KbError {
    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },
    #[error("template `{0}` is already registered")]
    Duplicate(String),
    #[error("template `{template}` fails validation at {instance}: deviation {deviation:.3e}")]
    Validation { template: String, instance: String, deviation: f64 },
    #[error("template `{template}` cannot be instantiated at {instance}: {reason}")]
    Instantiation { template: String, instance: String, reason: String },
    #[error("template `{0}` has no validation instances")]
    Unvalidated(String),
}

/// A named transform with its own definitional matrix.
#[derive(Debug, Clone, PartialEq)]
pub enum Head {
    Dft(String),
    Identity(String),
    Axpy(String, String),
    Stride(String, String),
    Twiddle(String, String),
}

#[derive(Debug, Clone, PartialEq)]
pub struct RuleTemplate {
    pub name: String,
    pub size_vars: Vec<String>,
    pub scalar_vars: Vec<String>,
    pub head: Head,
    pub body: SplExpr,
    pub constraints: Vec<Constraint>,
    pub validations: Vec<BTreeMap<String, f64>>,
    pub transform: String,
    pub signature: String,
    pub algorithm: String,
    pub report: String,
    pub provenance: String,
}

fn omega(n: usize, e: usize) -> Complex64 {
    let t = -2.0 * PI * (e % n) as f64 / n as f64;
    Complex64::new(t.cos(), t.sin())
}

fn const_size(b: &Bindings, var: &str) -> Result<usize, String> {
    match b.sizes.get(var) {
        Some(SizeExpr::Const(c)) => Ok(*c as usize),
        Some(other) => Err(format!("`{var}` = {other} is not a literal")),
        None => Err(format!("`{var}` is unbound")),
    }
}

impl Head {
    /// The head's matrix from its textbook definition.
    pub fn matrix(&self, b: &Bindings) -> Result<ComplexMat, String> {
        let one = Complex64::new(1.0, 0.0);
        Ok(match self {
            Head::Dft(n) => {
                let n = const_size(b, n)?;
                ComplexMat::from_fn(n, n, |k, l| omega(n, k * l))
            }
            Head::Identity(n) => ComplexMat::identity(const_size(b, n)?),
            Head::Axpy(n, alpha) => {
                let n = const_size(b, n)?;
                let a = *b.scalars.get(alpha).ok_or_else(|| format!("`{alpha}` is unbound"))?;
                ComplexMat::from_fn(n, 2 * n, |r, c| {
                    if c == r {
                        one
                    } else if c == n + r {
                        Complex64::new(a, 0.0)
                    } else {
                        Complex64::new(0.0, 0.0)
                    }
                })
            }
            Head::Stride(n, m) => {
                let (n, m) = (const_size(b, n)?, const_size(b, m)?);
                if m == 0 || n % m != 0 {
                    return Err(format!("{m} does not divide {n}"));
                }
                let k = n / m;
                // y[j·k + i] = x[i·m + j]
                let mut p = ComplexMat::zeros(n, n);
                for i in 0..k {
                    for j in 0..m {
                        p[(j * k + i, i * m + j)] = one;
                    }
                }
                p
            }
            Head::Twiddle(n, k) => {
                let (n, k) = (const_size(b, n)?, const_size(b, k)?);
                if k == 0 || n % k != 0 {
                    return Err(format!("{k} does not divide {n}"));
                }
                let mut d = ComplexMat::zeros(n, n);
                for r in 0..n {
                    d[(r, r)] = omega(n, (r / k) * (r % k));
                }
                d
            }
        })
    }
}

fn render_instance(inst: &BTreeMap<String, f64>) -> String {
    inst.iter().map(|(k, v)| format!("{k}={v}")).collect::<Vec<_>>().join(" ")
}

impl RuleTemplate {
    fn bindings_for(&self, inst: &BTreeMap<String, f64>) -> Result<Bindings, String> {
        let mut b = Bindings::default();
        for (k, v) in inst {
            if self.scalar_vars.contains(k) {
                b.scalars.insert(k.clone(), *v);
            } else if self.size_vars.contains(k) {
                if v.fract() != 0.0 || *v < 1.0 {
                    return Err(format!("size `{k}` must be a positive integer"));
                }
                b.sizes.insert(k.clone(), SizeExpr::Const(*v as u64));
            } else {
                return Err(format!("`{k}` is not a metavariable"));
            }
        }
        if !b.satisfy(&self.constraints) {
            return Err("constraints are not satisfied".into());
        }
        Ok(b)
    }

    /// Largest head-versus-body deviation over the validation instances.
    pub fn validate(&self) -> Result<f64, KbError> {
        if self.validations.is_empty() {
            return Err(KbError::Unvalidated(self.name.clone()));
        }
        let mut worst: f64 = 0.0;
        for inst in &self.validations {
            let instance = render_instance(inst);
            let fail = |reason: String| KbError::Instantiation {
                template: self.name.clone(),
                instance: instance.clone(),
                reason,
            };
            let b = self.bindings_for(inst).map_err(fail)?;
            let head = self.head.matrix(&b).map_err(fail)?;
            let body = eval_spl(&b.instantiate(&self.body), 1).map_err(|e: SplError| fail(e.to_string()))?;
            let deviation = head
                .max_abs_diff(&body)
                .ok_or_else(|| fail(format!("head is {:?} but body is {:?}", head.dims(), body.dims())))?;
            if deviation > VALIDATION_TOL {
                return Err(KbError::Validation { template: self.name.clone(), instance, deviation });
            }
            worst = worst.max(deviation);
        }
        Ok(worst)
    }

    fn fill(&self, text: &str, b: &Bindings, field: &str) -> String {
        let mut out = text.to_string();
        for (k, v) in [("signature", &self.signature), ("algorithm", &self.algorithm), ("transform", &self.transform)] {
            out = out.replace(&format!("{{{k}}}"), v);
        }
        out = out.replace("{field}", field);
        for (k, v) in &b.sizes {
            out = out.replace(&format!("{{{k}}}"), &v.to_string());
        }
        for (k, v) in &b.scalars {
            out = out.replace(&format!("{{{k}}}"), &format!("{v}"));
        }
        out
    }
}

/// The outcome of matching a closed expression.
#[derive(Debug, Clone, PartialEq)]
pub struct SpecificationResult {
    pub template: String,
    pub transform_name: String,
    pub signature: String,
    pub algorithm: String,
    /// One-line statement, e.g. `DFT_n : C^n → C^n, recursive Cooley-Tukey, m=2, k=n/2`.
    pub summary: String,
    pub bindings: Bindings,
    /// `"C"` when a single outer `RC` was stripped, else `"R"`.
    pub field: &'static str,
}

#[derive(Debug, Clone, Default)]
pub struct KnowledgeBase {
    templates: Vec<RuleTemplate>,
}

impl KnowledgeBase {
    pub fn new() -> Self {
        KnowledgeBase::default()
    }

    /// The shipped templates, validated.
    pub fn builtin() -> Self {
        let mut kb = KnowledgeBase::new();
        for t in parse_templates(BUILTIN).expect("built-in templates parse") {
            kb.register_template(t).expect("built-in templates validate");
        }
        kb
    }

    pub fn templates(&self) -> &[RuleTemplate] {
        &self.templates
    }

    /// Validates `t` numerically and appends it; returns its position.
    pub fn register_template(&mut self, t: RuleTemplate) -> Result<usize, KbError> {
        if self.templates.iter().any(|x| x.name == t.name) {
            return Err(KbError::Duplicate(t.name));
        }
        t.validate()?;
        self.templates.push(t);
        Ok(self.templates.len() - 1)
    }

    /// First template (in registration order) whose body matches `expr`
    /// after normalization, modulo one outer `RC`; otherwise a fallback name
    /// for single operators.
    pub fn match_specification(&self, expr: &SplExpr) -> Option<SpecificationResult> {
        let norm = normalize(expr);
        let (inner, field) = match norm {
            SplExpr::Rc(x) => (*x, "C"),
            other if complex_valued(&other) => (other, "C"),
            other => (other, "R"),
        };
        for t in &self.templates {
            if let Some(b) = structural_match(&inner, &t.body, &t.constraints) {
                return Some(SpecificationResult {
                    template: t.name.clone(),
                    transform_name: t.fill(&t.transform, &b, field),
                    signature: t.fill(&t.signature, &b, field),
                    algorithm: t.fill(&t.algorithm, &b, field),
                    summary: t.fill(&t.report, &b, field),
                    bindings: b,
                    field,
                });
            }
        }
        fallback(&inner, field)
    }
}

fn complex_valued(e: &SplExpr) -> bool {
    match e {
        SplExpr::Dft(_) | SplExpr::T { .. } => true,
        SplExpr::Diag(d) => d.iter().any(|z| z.im != 0.0),
        other => other.children().into_iter().any(complex_valued),
    }
}

fn fallback(e: &SplExpr, field: &'static str) -> Option<SpecificationResult> {
    let (name, what) = match e {
        SplExpr::L { size, stride } => (format!("L_{size},{stride}"), format!("permutation L({size},{stride})")),
        SplExpr::T { size, block } => (format!("T_{size},{block}"), format!("twiddle diagonal T({size},{block})")),
        SplExpr::Diag(d) => (format!("Diag_{}", d.len()), format!("diagonal of size {}", d.len())),
        _ => return None,
    };
    Some(SpecificationResult {
        template: "fallback".into(),
        transform_name: name.clone(),
        signature: name,
        algorithm: what.clone(),
        summary: what,
        bindings: Bindings::default(),
        field,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::spl::parse_spl;

    #[test]
    fn builtin_order() {
        let kb = KnowledgeBase::builtin();
        let names: Vec<&str> = kb.templates().iter().map(|t| t.name.as_str()).collect();
        assert_eq!(names, ["cooley_tukey", "dft_definition", "identity", "axpy", "stride_permutation", "twiddle"]);
    }

    #[test]
    fn radix2_expression_is_cooley_tukey() {
        let e = parse_spl("RC(Tensor(F(2), I(n/2)) * Diag(n, n/2)) * RC(Tensor(I(2), F(n/2))) * RC(L(n, 2))").unwrap();
        let s = KnowledgeBase::builtin().match_specification(&e).unwrap();
        assert_eq!(s.summary, "DFT_n : C^n → C^n, recursive Cooley-Tukey, m=2, k=n/2");
        assert_eq!(s.field, "C");
        let bare = KnowledgeBase::builtin().match_specification(&parse_spl("Tensor(F(2), I(2)) * Diag(4, 2) * Tensor(I(2), F(2)) * L(4, 2)").unwrap());
        assert_eq!(bare.unwrap().field, "C");
    }

    #[test]
    fn identity_and_fallback() {
        let kb = KnowledgeBase::builtin();
        assert_eq!(kb.match_specification(&parse_spl("I(n)").unwrap()).unwrap().summary, "Id_n");
        let l = kb.match_specification(&parse_spl("L(n, 2)").unwrap()).unwrap();
        assert_eq!(l.summary, "permutation L(n,2)");
        assert_ne!(l.template, "cooley_tukey");
    }

    #[test]
    fn axpy_summary() {
        let e = parse_spl("Augment(I(n), Scale(2.5, I(n)))").unwrap();
        assert_eq!(KnowledgeBase::builtin().match_specification(&e).unwrap().summary, "axpy: [I_n | 2.5·I_n]");
    }

    #[test]
    fn template_without_twiddle_is_rejected() {
        let text = BUILTIN.replace(" * Diag(N, k) *", " *");
        let t = parse_templates(&text).unwrap().remove(0);
        match KnowledgeBase::new().register_template(t) {
            Err(KbError::Validation { deviation, instance, .. }) => {
                assert!(deviation > 0.1);
                assert!(instance.contains("k=2") && instance.contains("m=2"));
            }
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn duplicates_rejected() {
        let mut kb = KnowledgeBase::builtin();
        let t = kb.templates()[0].clone();
        assert_eq!(kb.register_template(t), Err(KbError::Duplicate("cooley_tukey".into())));
    }
}
