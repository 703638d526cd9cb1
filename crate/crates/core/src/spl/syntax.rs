//! Text syntax for SPL expressions, the inverse of `Display`.
//!
//! ```text
//! expr   := factor ('*' factor)*
//! factor := '(' expr ')' | NAME '(' args ')'
//! size   := atom (('*' | '/') atom)*      atom := INT | n | META
//! ```

use std::collections::BTreeSet;

use num_complex::Complex64;
use thiserror::Error;

use super::{ScalarValue, SizeExpr, SplExpr};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ParseError {
    #[error("at offset {pos}: expected {expected}, found {found}")]
    Unexpected { pos: usize, expected: String, found: String },
    #[error("at offset {pos}: invalid size expression: {reason}")]
    Size { pos: usize, reason: String },
    #[error("at offset {pos}: invalid character `{ch}`")]
    Char { pos: usize, ch: char },
}

#[derive(Debug, Clone, PartialEq)]
enum Tok {
    Ident(String),
    Num(f64, bool),
    Punct(char),
    End,
}

impl Tok {
    fn describe(&self) -> String {
        match self {
            Tok::Ident(s) => format!("`{s}`"),
            Tok::Num(v, _) => format!("`{v}`"),
            Tok::Punct(c) => format!("`{c}`"),
            Tok::End => "end of input".into(),
        }
    }
}

fn lex(text: &str) -> Result<Vec<(usize, Tok)>, ParseError> {
    let chars: Vec<(usize, char)> = text.char_indices().collect();
    let mut out = Vec::new();
    let mut i = 0;
    while i < chars.len() {
        let (pos, c) = chars[i];
        if c.is_whitespace() {
            i += 1;
        } else if c.is_ascii_alphabetic() || c == '_' {
            let start = i;
            while i < chars.len() && (chars[i].1.is_ascii_alphanumeric() || chars[i].1 == '_') {
                i += 1;
            }
            out.push((pos, Tok::Ident(chars[start..i].iter().map(|p| p.1).collect())));
        } else if c.is_ascii_digit() || c == '.' {
            let start = i;
            let mut integral = true;
            while i < chars.len() {
                let ch = chars[i].1;
                if ch.is_ascii_digit() {
                    i += 1;
                } else if ch == '.' || ch == 'e' || ch == 'E' {
                    integral = false;
                    i += 1;
                    if (ch == 'e' || ch == 'E') && i < chars.len() && matches!(chars[i].1, '+' | '-') {
                        i += 1;
                    }
                } else {
                    break;
                }
            }
            let s: String = chars[start..i].iter().map(|p| p.1).collect();
            let v = s.parse::<f64>().map_err(|_| ParseError::Unexpected {
                pos,
                expected: "number".into(),
                found: format!("`{s}`"),
            })?;
            out.push((pos, Tok::Num(v, integral)));
        } else if "()[],*/-".contains(c) {
            out.push((pos, Tok::Punct(c)));
            i += 1;
        } else {
            return Err(ParseError::Char { pos, ch: c });
        }
    }
    out.push((text.len(), Tok::End));
    Ok(out)
}

/// Size accumulated as `coeff · n^power` with a rational coefficient.
struct SizeAcc {
    num: u64,
    den: u64,
    power: u32,
}

struct Parser<'a> {
    toks: Vec<(usize, Tok)>,
    at: usize,
    metas: &'a BTreeSet<String>,
}

impl Parser<'_> {
    fn peek(&self) -> &Tok {
        &self.toks[self.at].1
    }

    fn pos(&self) -> usize {
        self.toks[self.at].0
    }

    fn next(&mut self) -> Tok {
        let t = self.toks[self.at].1.clone();
        if self.at + 1 < self.toks.len() {
            self.at += 1;
        }
        t
    }

    fn fail<T>(&self, expected: &str) -> Result<T, ParseError> {
        Err(ParseError::Unexpected { pos: self.pos(), expected: expected.into(), found: self.peek().describe() })
    }

    fn punct(&mut self, c: char) -> Result<(), ParseError> {
        if *self.peek() == Tok::Punct(c) {
            self.next();
            Ok(())
        } else {
            self.fail(&format!("`{c}`"))
        }
    }

    fn expr(&mut self) -> Result<SplExpr, ParseError> {
        let mut factors = vec![self.factor()?];
        while *self.peek() == Tok::Punct('*') {
            self.next();
            factors.push(self.factor()?);
        }
        Ok(if factors.len() == 1 { factors.pop().expect("one factor") } else { SplExpr::Compose(factors) })
    }

    fn factor(&mut self) -> Result<SplExpr, ParseError> {
        match self.peek().clone() {
            Tok::Punct('(') => {
                self.next();
                let e = self.expr()?;
                self.punct(')')?;
                Ok(e)
            }
            Tok::Ident(name) => {
                self.next();
                self.punct('(')?;
                let e = self.operator(&name)?;
                self.punct(')')?;
                Ok(e)
            }
            _ => self.fail("operator"),
        }
    }

    fn operator(&mut self, name: &str) -> Result<SplExpr, ParseError> {
        Ok(match name {
            "F" | "DFT" => SplExpr::Dft(self.size()?),
            "I" => SplExpr::I(self.size()?),
            "L" => {
                let (a, b) = self.size_pair()?;
                SplExpr::L { size: a, stride: b }
            }
            "T" => {
                let (a, b) = self.size_pair()?;
                SplExpr::T { size: a, block: b }
            }
            "Diag" if *self.peek() == Tok::Punct('[') => SplExpr::Diag(self.entries()?),
            "Diag" => {
                let (a, b) = self.size_pair()?;
                SplExpr::T { size: a, block: b }
            }
            "Tensor" | "Augment" => {
                let a = self.expr()?;
                self.punct(',')?;
                let b = self.expr()?;
                if name == "Tensor" {
                    SplExpr::tensor(a, b)
                } else {
                    SplExpr::augment(a, b)
                }
            }
            "RC" => SplExpr::rc(self.expr()?),
            "Scale" => {
                let s = match self.next() {
                    Tok::Ident(m) => ScalarValue::Meta(m),
                    Tok::Num(v, _) => ScalarValue::Value(v),
                    Tok::Punct('-') => match self.next() {
                        Tok::Num(v, _) => ScalarValue::Value(-v),
                        _ => return self.fail("number"),
                    },
                    _ => return self.fail("scalar"),
                };
                self.punct(',')?;
                SplExpr::Scale(s, Box::new(self.expr()?))
            }
            other => SplExpr::Hole { name: other.to_string(), size: self.size()? },
        })
    }

    fn size_pair(&mut self) -> Result<(SizeExpr, SizeExpr), ParseError> {
        let a = self.size()?;
        self.punct(',')?;
        Ok((a, self.size()?))
    }

    fn signed(&mut self) -> Result<f64, ParseError> {
        let neg = if *self.peek() == Tok::Punct('-') {
            self.next();
            true
        } else {
            false
        };
        match self.next() {
            Tok::Num(v, _) => Ok(if neg { -v } else { v }),
            _ => {
                self.at -= 1;
                self.fail("number")
            }
        }
    }

    fn entries(&mut self) -> Result<Vec<Complex64>, ParseError> {
        self.punct('[')?;
        let mut out = Vec::new();
        if *self.peek() == Tok::Punct(']') {
            self.next();
            return Ok(out);
        }
        loop {
            if *self.peek() == Tok::Punct('(') {
                self.next();
                let re = self.signed()?;
                self.punct(',')?;
                let im = self.signed()?;
                self.punct(')')?;
                out.push(Complex64::new(re, im));
            } else {
                out.push(Complex64::new(self.signed()?, 0.0));
            }
            match self.next() {
                Tok::Punct(',') => {}
                Tok::Punct(']') => return Ok(out),
                _ => {
                    self.at -= 1;
                    return self.fail("`,` or `]`");
                }
            }
        }
    }

    fn size(&mut self) -> Result<SizeExpr, ParseError> {
        let start = self.pos();
        let size_err = |reason: &str| ParseError::Size { pos: start, reason: reason.into() };
        if let Tok::Ident(m) = self.peek().clone() {
            if self.metas.contains(&m) {
                self.next();
                if matches!(self.peek(), Tok::Punct('*') | Tok::Punct('/')) {
                    return Err(size_err("metavariables cannot be combined"));
                }
                return Ok(SizeExpr::Meta(m));
            }
        }
        let mut acc = SizeAcc { num: 1, den: 1, power: 0 };
        let mut divide = false;
        loop {
            match self.next() {
                Tok::Num(v, true) if v >= 1.0 && v.fract() == 0.0 => {
                    if divide {
                        acc.den *= v as u64;
                    } else {
                        acc.num *= v as u64;
                    }
                }
                Tok::Ident(s) if s == "n" && !divide => acc.power += 1,
                Tok::Ident(s) if s == "n" => return Err(size_err("cannot divide by n")),
                _ => {
                    self.at -= 1;
                    return self.fail("size");
                }
            }
            match self.peek() {
                Tok::Punct('*') => divide = false,
                Tok::Punct('/') => divide = true,
                _ => break,
            }
            self.next();
        }
        match acc.power {
            0 if acc.num.is_multiple_of(acc.den) => Ok(SizeExpr::Const(acc.num / acc.den)),
            0 => Err(size_err("non-integer constant")),
            1 if acc.den.is_power_of_two() => Ok(SizeExpr::sym(acc.num, acc.den)),
            1 => Err(size_err("divisor must be a power of two")),
            _ => Err(size_err("size must be linear in n")),
        }
    }
}

/// Parses an SPL expression; every unknown `NAME(size)` becomes a hole.
pub fn parse_spl(text: &str) -> Result<SplExpr, ParseError> {
    parse_spl_with_metas(text, &BTreeSet::new())
}

/// As [`parse_spl`], treating the listed identifiers as size metavariables.
pub fn parse_spl_with_metas(text: &str, metas: &BTreeSet<String>) -> Result<SplExpr, ParseError> {
    let mut p = Parser { toks: lex(text)?, at: 0, metas };
    let e = p.expr()?;
    if *p.peek() != Tok::End {
        return p.fail("end of input");
    }
    Ok(e)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn round_trips_display() {
        let src = "RC(Tensor(F(2), I(n/2)) * Diag(n, n/2)) * RC(Tensor(I(2), F(n/2))) * RC(L(n, 2))";
        let e = parse_spl(src).unwrap();
        assert_eq!(e.to_string(), src);
        assert_eq!(parse_spl(&e.to_string()).unwrap(), e);
    }

    #[test]
    fn dft_alias_and_holes() {
        assert_eq!(parse_spl("DFT(n)").unwrap(), SplExpr::Dft(SizeExpr::n()));
        assert_eq!(parse_spl("M(n/2)").unwrap(), SplExpr::hole("M", SizeExpr::n_over(2)));
    }

    #[test]
    fn explicit_diag_and_scale() {
        let e = parse_spl("Scale(2.5, Diag([1.0, (0.0, -1.0)]))").unwrap();
        assert_eq!(
            e,
            SplExpr::scale(2.5, SplExpr::Diag(vec![Complex64::new(1.0, 0.0), Complex64::new(0.0, -1.0)]))
        );
        assert_eq!(parse_spl(&e.to_string()).unwrap(), e);
    }

    #[test]
    fn metas() {
        let metas: BTreeSet<String> = ["N", "m", "k"].iter().map(|s| s.to_string()).collect();
        let e = parse_spl_with_metas("Tensor(F(m), I(k)) * Diag(N, k)", &metas).unwrap();
        assert_eq!(e.sizes().len(), 4);
        assert!(e.sizes().iter().all(|s| matches!(s, SizeExpr::Meta(_))));
    }

    #[test]
    fn rejects_bad_sizes() {
        assert!(matches!(parse_spl("F(n*n)"), Err(ParseError::Size { .. })));
        assert!(matches!(parse_spl("F(n/3)"), Err(ParseError::Size { .. })));
        assert!(matches!(parse_spl("F(3/2)"), Err(ParseError::Size { .. })));
    }

    #[test]
    fn reports_position() {
        match parse_spl("F(2) * ") {
            Err(ParseError::Unexpected { pos, .. }) => assert_eq!(pos, 7),
            other => panic!("{other:?}"),
        }
        assert!(matches!(parse_spl("F(2) $"), Err(ParseError::Char { ch: '$', .. })));
    }
}
