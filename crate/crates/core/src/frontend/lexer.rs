use std::fmt;

use super::FrontendError;

#[derive(Debug, Clone, PartialEq)]
pub enum Tok {
    Ident(String),
    Int(i64),
    Float(f64),
    /// `#define M_PI <literal>`
    DefinePi(f64),
    Punct(&'static str),
    Eof,
}

impl fmt::Display for Tok {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Tok::Ident(s) => write!(f, "`{s}`"),
            Tok::Int(v) => write!(f, "`{v}`"),
            Tok::Float(v) => write!(f, "`{v:?}`"),
            Tok::DefinePi(_) => f.write_str("`#define`"),
            Tok::Punct(p) => write!(f, "`{p}`"),
            Tok::Eof => f.write_str("end of input"),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Token {
    pub tok: Tok,
    pub line: usize,
    pub col: usize,
}

const PUNCT: [&str; 22] = [
    "++", "+=", "--", "-=", "<=", ">=", "==", "!=", "&&", "||", "+", "-", "*", "/", "%", "<", ">", "=", "(", ")", "{",
    "}",
];
const PUNCT_TAIL: [&str; 5] = ["[", "]", ";", ",", "&"];

fn directive(text: &str, line: usize) -> Result<Option<Tok>, FrontendError> {
    let body = text.trim_start_matches('#').trim();
    let (name, rest) = body.split_once(char::is_whitespace).unwrap_or((body, ""));
    match name {
        "include" => Ok(None),
        "define" => {
            let mut parts = rest.split_whitespace();
            match (parts.next(), parts.next(), parts.next()) {
                (Some("M_PI"), Some(v), None) => v.parse::<f64>().map(|v| Some(Tok::DefinePi(v))).map_err(|_| {
                    FrontendError::Unsupported { line, construct: format!("M_PI value `{v}` is not a numeric literal") }
                }),
                _ => Err(FrontendError::Unsupported { line, construct: format!("#define {rest}") }),
            }
        }
        _ => Err(FrontendError::Unsupported { line, construct: format!("preprocessor directive #{name}") }),
    }
}

/// Splits KernelC source into tokens. Comments and `#include` lines are
/// dropped; `#define M_PI` becomes a single token; other directives are errors.
pub fn tokenize(src: &str) -> Result<Vec<Token>, FrontendError> {
    let chars: Vec<char> = src.chars().collect();
    let mut out = Vec::new();
    let (mut i, mut line, mut col) = (0usize, 1usize, 1usize);
    let mut line_start = true;
    while i < chars.len() {
        let c = chars[i];
        if c == '\n' {
            i += 1;
            line += 1;
            col = 1;
            line_start = true;
            continue;
        }
        if c.is_whitespace() {
            i += 1;
            col += 1;
            continue;
        }
        if c == '/' && chars.get(i + 1) == Some(&'/') {
            while i < chars.len() && chars[i] != '\n' {
                i += 1;
            }
            continue;
        }
        if c == '/' && chars.get(i + 1) == Some(&'*') {
            let (l0, c0) = (line, col);
            i += 2;
            col += 2;
            loop {
                match chars.get(i) {
                    None => {
                        return Err(FrontendError::Syntax {
                            line: l0,
                            col: c0,
                            expected: "`*/`".into(),
                            found: "end of input".into(),
                        })
                    }
                    Some('*') if chars.get(i + 1) == Some(&'/') => {
                        i += 2;
                        col += 2;
                        break;
                    }
                    Some('\n') => {
                        i += 1;
                        line += 1;
                        col = 1;
                    }
                    Some(_) => {
                        i += 1;
                        col += 1;
                    }
                }
            }
            continue;
        }
        let start_col = col;
        if c == '#' {
            if !line_start {
                return Err(FrontendError::Syntax { line, col, expected: "a statement".into(), found: "`#`".into() });
            }
            let begin = i;
            while i < chars.len() && chars[i] != '\n' {
                i += 1;
            }
            let text: String = chars[begin..i].iter().collect();
            let text = text.split("//").next().unwrap_or("");
            if let Some(tok) = directive(text, line)? {
                out.push(Token { tok, line, col: start_col });
            }
            continue;
        }
        line_start = false;
        if c.is_ascii_alphabetic() || c == '_' {
            let begin = i;
            while i < chars.len() && (chars[i].is_ascii_alphanumeric() || chars[i] == '_') {
                i += 1;
            }
            col += i - begin;
            out.push(Token { tok: Tok::Ident(chars[begin..i].iter().collect()), line, col: start_col });
            continue;
        }
        if c.is_ascii_digit() || (c == '.' && chars.get(i + 1).is_some_and(|d| d.is_ascii_digit())) {
            let begin = i;
            let mut float = false;
            while i < chars.len() {
                let d = chars[i];
                if d.is_ascii_digit() {
                    i += 1;
                } else if d == '.' || d == 'e' || d == 'E' {
                    float = true;
                    i += 1;
                    if (d == 'e' || d == 'E') && matches!(chars.get(i), Some('+' | '-')) {
                        i += 1;
                    }
                } else {
                    break;
                }
            }
            let text: String = chars[begin..i].iter().collect();
            col += i - begin;
            let bad = || FrontendError::Syntax {
                line,
                col: start_col,
                expected: "a numeric literal".into(),
                found: format!("`{text}`"),
            };
            let tok = if float {
                Tok::Float(text.parse().map_err(|_| bad())?)
            } else {
                Tok::Int(text.parse().map_err(|_| bad())?)
            };
            out.push(Token { tok, line, col: start_col });
            continue;
        }
        let rest: String = chars[i..chars.len().min(i + 2)].iter().collect();
        let p = PUNCT.iter().chain(PUNCT_TAIL.iter()).find(|p| rest.starts_with(**p));
        match p {
            Some(p) => {
                i += p.len();
                col += p.len();
                out.push(Token { tok: Tok::Punct(p), line, col: start_col });
            }
            None => {
                return Err(FrontendError::Syntax {
                    line,
                    col,
                    expected: "a token".into(),
                    found: format!("`{c}`"),
                })
            }
        }
    }
    out.push(Token { tok: Tok::Eof, line, col });
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn drops_comments_and_includes() {
        let toks = tokenize("#include <math.h>\n// hi\nx /* y */ 2.0 += 3").unwrap();
        let kinds: Vec<Tok> = toks.into_iter().map(|t| t.tok).collect();
        assert_eq!(kinds, [Tok::Ident("x".into()), Tok::Float(2.0), Tok::Punct("+="), Tok::Int(3), Tok::Eof]);
    }

    #[test]
    fn define_pi_and_positions() {
        let toks = tokenize("#define M_PI 3.14159265358979323846\n  a").unwrap();
        assert_eq!(toks[0].tok, Tok::DefinePi(std::f64::consts::PI));
        assert_eq!((toks[1].line, toks[1].col), (2, 3));
    }

    #[test]
    fn other_directives_rejected() {
        assert!(matches!(tokenize("#pragma once"), Err(FrontendError::Unsupported { line: 1, .. })));
        assert!(matches!(tokenize("#define N 4"), Err(FrontendError::Unsupported { .. })));
    }
}
