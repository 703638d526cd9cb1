//! Line-oriented template format:
//!
//! ```text
//! template NAME
//! vars N m k            size metavariables
//! scalars alpha         scalar metavariables (optional)
//! head DFT(N)           DFT | Id | axpy | L | T
//! body <SPL>
//! where N = m*k | where m >= 2
//! validate m=2 k=2; m=4 k=2
//! transform / signature / algorithm / report   text with {placeholders}
//! provenance <text>
//! end
//! ```

use std::collections::{BTreeMap, BTreeSet};

use crate::spl::{parse_spl_with_metas, Constraint};

use super::{Head, KbError, RuleTemplate};

fn parse_error(line: usize, message: impl Into<String>) -> KbError {
    KbError::Parse { line, message: message.into() }
}

fn parse_head(text: &str, line: usize) -> Result<Head, KbError> {
    let open = text.find('(').ok_or_else(|| parse_error(line, "head needs arguments"))?;
    if !text.ends_with(')') {
        return Err(parse_error(line, "head must end with `)`"));
    }
    let name = text[..open].trim();
    let args: Vec<String> = text[open + 1..text.len() - 1].split(',').map(|s| s.trim().to_string()).collect();
    let arity = |n: usize| {
        if args.len() == n {
            Ok(())
        } else {
            Err(parse_error(line, format!("head `{name}` takes {n} arguments")))
        }
    };
    Ok(match name {
        "DFT" => {
            arity(1)?;
            Head::Dft(args[0].clone())
        }
        "Id" => {
            arity(1)?;
            Head::Identity(args[0].clone())
        }
        "axpy" => {
            arity(2)?;
            Head::Axpy(args[0].clone(), args[1].clone())
        }
        "L" => {
            arity(2)?;
            Head::Stride(args[0].clone(), args[1].clone())
        }
        "T" => {
            arity(2)?;
            Head::Twiddle(args[0].clone(), args[1].clone())
        }
        other => return Err(parse_error(line, format!("unknown head operator `{other}`"))),
    })
}

fn parse_where(text: &str, line: usize) -> Result<Constraint, KbError> {
    if let Some((lhs, rhs)) = text.split_once(">=") {
        let min = rhs.trim().parse().map_err(|_| parse_error(line, "bound must be an integer"))?;
        return Ok(Constraint::AtLeast { var: lhs.trim().to_string(), min });
    }
    if let Some((lhs, rhs)) = text.split_once('=') {
        let factors = rhs.split('*').map(|s| s.trim().to_string()).collect();
        return Ok(Constraint::Product { target: lhs.trim().to_string(), factors });
    }
    Err(parse_error(line, format!("unrecognized constraint `{text}`")))
}

fn parse_validate(text: &str, line: usize) -> Result<Vec<BTreeMap<String, f64>>, KbError> {
    text.split(';')
        .map(|inst| {
            inst.split_whitespace()
                .map(|kv| {
                    let (k, v) = kv.split_once('=').ok_or_else(|| parse_error(line, format!("expected k=v, found `{kv}`")))?;
                    let v: f64 = v.parse().map_err(|_| parse_error(line, format!("`{v}` is not a number")))?;
                    Ok((k.to_string(), v))
                })
                .collect()
        })
        .collect()
}

#[derive(Default)]
struct Partial {
    name: String,
    line: usize,
    vars: Vec<String>,
    scalars: Vec<String>,
    head: Option<Head>,
    body: Option<(String, usize)>,
    constraints: Vec<Constraint>,
    validations: Vec<BTreeMap<String, f64>>,
    text: BTreeMap<&'static str, String>,
}

impl Partial {
    fn finish(self, end_line: usize) -> Result<RuleTemplate, KbError> {
        let metas: BTreeSet<String> = self.vars.iter().cloned().collect();
        let (body_text, body_line) = self.body.ok_or_else(|| parse_error(end_line, format!("template `{}` has no body", self.name)))?;
        let body = parse_spl_with_metas(&body_text, &metas).map_err(|e| parse_error(body_line, e.to_string()))?;
        let head = self.head.ok_or_else(|| parse_error(end_line, format!("template `{}` has no head", self.name)))?;
        let field = |k: &str| self.text.get(k).cloned().unwrap_or_default();
        Ok(RuleTemplate {
            name: self.name.clone(),
            size_vars: self.vars.clone(),
            scalar_vars: self.scalars.clone(),
            head,
            body,
            constraints: self.constraints.clone(),
            validations: self.validations.clone(),
            transform: field("transform"),
            signature: field("signature"),
            algorithm: field("algorithm"),
            report: field("report"),
            provenance: field("provenance"),
        })
    }
}

/// Parses every template in `text`, in order.
pub fn parse_templates(text: &str) -> Result<Vec<RuleTemplate>, KbError> {
    let mut out = Vec::new();
    let mut cur: Option<Partial> = None;
    for (i, raw) in text.lines().enumerate() {
        let line = i + 1;
        let l = raw.trim();
        if l.is_empty() || l.starts_with('#') {
            continue;
        }
        let (key, rest) = l.split_once(char::is_whitespace).map(|(k, r)| (k, r.trim())).unwrap_or((l, ""));
        if key == "template" {
            if cur.is_some() {
                return Err(parse_error(line, "nested `template` (missing `end`)"));
            }
            cur = Some(Partial { name: rest.to_string(), line, ..Default::default() });
            continue;
        }
        let Some(t) = cur.as_mut() else {
            return Err(parse_error(line, format!("`{key}` outside a template")));
        };
        match key {
            "vars" => t.vars = rest.split_whitespace().map(String::from).collect(),
            "scalars" => t.scalars = rest.split_whitespace().map(String::from).collect(),
            "head" => t.head = Some(parse_head(rest, line)?),
            "body" => t.body = Some((rest.to_string(), line)),
            "where" => t.constraints.push(parse_where(rest, line)?),
            "validate" => t.validations = parse_validate(rest, line)?,
            "transform" | "signature" | "algorithm" | "report" | "provenance" => {
                let k = match key {
                    "transform" => "transform",
                    "signature" => "signature",
                    "algorithm" => "algorithm",
                    "report" => "report",
                    _ => "provenance",
                };
                t.text.insert(k, rest.to_string());
            }
            "end" => {
                let done = cur.take().expect("inside a template");
                if done.name.is_empty() {
                    return Err(parse_error(done.line, "template without a name"));
                }
                out.push(done.finish(line)?);
            }
            other => return Err(parse_error(line, format!("unknown field `{other}`"))),
        }
    }
    if let Some(t) = cur {
        return Err(parse_error(t.line, format!("template `{}` is missing `end`", t.name)));
    }
    Ok(out)
}
