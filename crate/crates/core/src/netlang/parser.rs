//! Recursive-descent parser.
//!
//! ```text
//! expr := term (('+' | '-') term)*
//! term := atom ('*' atom)*
//! atom := 'base' | 'swap' '(' expr ')' | 'cav' '(' ('s' | 'i') ',' arg ')'
//!       | 'phase' '(' arg ')' | number | '(' expr ')'
//! arg  := ['-'] number
//! ```
//!
//! `pi` is a number literal. Whitespace is ignored and keywords are
//! case-sensitive.

use std::f64::consts::PI;
use std::fmt;

use thiserror::Error;

use super::ast::ModulationExpr;
use crate::modulation::Axis;

const MAX_DEPTH: usize = 200;

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum ParseErrorKind {
    /// Unexpected token.
    Syntax { expected: Vec<String>, found: String },
    /// Well-formed but meaningless, e.g. a non-positive cavity linewidth.
    Semantic(String),
}

#[derive(Clone, Debug, PartialEq, Eq, Error)]
pub struct ParseError {
    /// Byte offset into the input.
    pub offset: usize,
    pub kind: ParseErrorKind,
}

impl fmt::Display for ParseError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match &self.kind {
            ParseErrorKind::Syntax { expected, found } => {
                write!(f, "syntax error at byte {}: expected {}, found {found}", self.offset, expected.join(" | "))
            }
            ParseErrorKind::Semantic(msg) => write!(f, "invalid expression at byte {}: {msg}", self.offset),
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
enum Tok {
    Ident(String),
    Num(f64),
    LParen,
    RParen,
    Comma,
    Plus,
    Minus,
    Star,
    Eof,
}

impl fmt::Display for Tok {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Tok::Ident(s) => write!(f, "'{s}'"),
            Tok::Num(v) => write!(f, "number {v}"),
            Tok::LParen => f.write_str("'('"),
            Tok::RParen => f.write_str("')'"),
            Tok::Comma => f.write_str("','"),
            Tok::Plus => f.write_str("'+'"),
            Tok::Minus => f.write_str("'-'"),
            Tok::Star => f.write_str("'*'"),
            Tok::Eof => f.write_str("end of input"),
        }
    }
}

fn lex(src: &str) -> Result<Vec<(usize, Tok)>, ParseError> {
    let bytes = src.as_bytes();
    let mut out = Vec::new();
    let mut i = 0;
    while i < bytes.len() {
        let c = bytes[i];
        let start = i;
        let tok = match c {
            b' ' | b'\t' | b'\n' | b'\r' => {
                i += 1;
                continue;
            }
            b'(' => Tok::LParen,
            b')' => Tok::RParen,
            b',' => Tok::Comma,
            b'+' => Tok::Plus,
            b'-' => Tok::Minus,
            b'*' => Tok::Star,
            b'0'..=b'9' | b'.' => {
                let mut j = i;
                while j < bytes.len() && (bytes[j].is_ascii_digit() || bytes[j] == b'.') {
                    j += 1;
                }
                if j < bytes.len() && (bytes[j] == b'e' || bytes[j] == b'E') {
                    let mut k = j + 1;
                    if k < bytes.len() && (bytes[k] == b'+' || bytes[k] == b'-') {
                        k += 1;
                    }
                    if k < bytes.len() && bytes[k].is_ascii_digit() {
                        while k < bytes.len() && bytes[k].is_ascii_digit() {
                            k += 1;
                        }
                        j = k;
                    }
                }
                let text = &src[i..j];
                let value: f64 = text.parse().map_err(|_| ParseError {
                    offset: start,
                    kind: ParseErrorKind::Syntax { expected: vec!["number".into()], found: format!("'{text}'") },
                })?;
                if !value.is_finite() {
                    return Err(ParseError {
                        offset: start,
                        kind: ParseErrorKind::Semantic(format!("number literal '{text}' is not finite")),
                    });
                }
                i = j;
                out.push((start, Tok::Num(value)));
                continue;
            }
            c if c.is_ascii_alphabetic() || c == b'_' => {
                let mut j = i;
                while j < bytes.len() && (bytes[j].is_ascii_alphanumeric() || bytes[j] == b'_') {
                    j += 1;
                }
                let word = &src[i..j];
                i = j;
                out.push((start, if word == "pi" { Tok::Num(PI) } else { Tok::Ident(word.to_string()) }));
                continue;
            }
            _ => {
                let ch = src[i..].chars().next().unwrap_or('?');
                return Err(ParseError {
                    offset: start,
                    kind: ParseErrorKind::Syntax {
                        expected: vec!["expression".into()],
                        found: format!("character {ch:?}"),
                    },
                });
            }
        };
        i += 1;
        out.push((start, tok));
    }
    out.push((src.len(), Tok::Eof));
    Ok(out)
}

struct Parser {
    toks: Vec<(usize, Tok)>,
    pos: usize,
    depth: usize,
}

impl Parser {
    fn peek(&self) -> &Tok {
        &self.toks[self.pos].1
    }

    fn offset(&self) -> usize {
        self.toks[self.pos].0
    }

    fn bump(&mut self) -> Tok {
        let t = self.toks[self.pos].1.clone();
        if self.pos + 1 < self.toks.len() {
            self.pos += 1;
        }
        t
    }

    fn unexpected<T>(&self, expected: &[&str]) -> Result<T, ParseError> {
        Err(ParseError {
            offset: self.offset(),
            kind: ParseErrorKind::Syntax {
                expected: expected.iter().map(|s| s.to_string()).collect(),
                found: self.peek().to_string(),
            },
        })
    }

    fn expect(&mut self, tok: Tok, label: &str) -> Result<(), ParseError> {
        if *self.peek() == tok {
            self.bump();
            Ok(())
        } else {
            self.unexpected(&[label])
        }
    }

    fn enter(&mut self) -> Result<(), ParseError> {
        self.depth += 1;
        if self.depth > MAX_DEPTH {
            return Err(ParseError {
                offset: self.offset(),
                kind: ParseErrorKind::Semantic(format!("expression nested deeper than {MAX_DEPTH} levels")),
            });
        }
        Ok(())
    }

    fn expr(&mut self) -> Result<ModulationExpr, ParseError> {
        self.enter()?;
        let mut lhs = self.term()?;
        loop {
            match self.peek() {
                Tok::Plus => {
                    self.bump();
                    lhs = ModulationExpr::Sum(Box::new(lhs), Box::new(self.term()?));
                }
                Tok::Minus => {
                    self.bump();
                    lhs = ModulationExpr::Diff(Box::new(lhs), Box::new(self.term()?));
                }
                _ => break,
            }
        }
        self.depth -= 1;
        Ok(lhs)
    }

    fn term(&mut self) -> Result<ModulationExpr, ParseError> {
        let mut lhs = self.atom()?;
        while *self.peek() == Tok::Star {
            self.bump();
            lhs = ModulationExpr::Prod(Box::new(lhs), Box::new(self.atom()?));
        }
        Ok(lhs)
    }

    fn arg(&mut self) -> Result<(usize, f64), ParseError> {
        let at = self.offset();
        let negative = if *self.peek() == Tok::Minus {
            self.bump();
            true
        } else {
            false
        };
        match self.peek().clone() {
            Tok::Num(v) => {
                self.bump();
                Ok((at, if negative { -v } else { v }))
            }
            _ => self.unexpected(&["number"]),
        }
    }

    fn atom(&mut self) -> Result<ModulationExpr, ParseError> {
        const ATOM: &[&str] = &["'base'", "'swap'", "'cav'", "'phase'", "number", "'('"];
        match self.peek().clone() {
            Tok::Num(v) => {
                self.bump();
                Ok(ModulationExpr::Scalar { re: v, im: 0.0 })
            }
            Tok::LParen => {
                self.bump();
                let inner = self.expr()?;
                self.expect(Tok::RParen, "')'")?;
                Ok(ModulationExpr::Paren(Box::new(inner)))
            }
            Tok::Ident(word) => match word.as_str() {
                "base" => {
                    self.bump();
                    Ok(ModulationExpr::Base)
                }
                "swap" => {
                    self.bump();
                    self.expect(Tok::LParen, "'('")?;
                    let inner = self.expr()?;
                    self.expect(Tok::RParen, "')'")?;
                    Ok(ModulationExpr::Swap(Box::new(inner)))
                }
                "phase" => {
                    self.bump();
                    self.expect(Tok::LParen, "'('")?;
                    let (_, phi) = self.arg()?;
                    self.expect(Tok::RParen, "')'")?;
                    Ok(ModulationExpr::Phase(phi))
                }
                "cav" => {
                    self.bump();
                    self.expect(Tok::LParen, "'('")?;
                    let target = match self.peek() {
                        Tok::Ident(t) if t == "s" => Axis::Signal,
                        Tok::Ident(t) if t == "i" => Axis::Idler,
                        _ => return self.unexpected(&["'s'", "'i'"]),
                    };
                    self.bump();
                    self.expect(Tok::Comma, "','")?;
                    let (at, gamma_c) = self.arg()?;
                    if gamma_c <= 0.0 {
                        return Err(ParseError {
                            offset: at,
                            kind: ParseErrorKind::Semantic(format!("cavity linewidth must be positive, got {gamma_c}")),
                        });
                    }
                    self.expect(Tok::RParen, "')'")?;
                    Ok(ModulationExpr::Cav { target, gamma_c })
                }
                _ => self.unexpected(ATOM),
            },
            _ => self.unexpected(ATOM),
        }
    }
}

/// Parses a modulation-network expression.
pub fn parse(text: &str) -> Result<ModulationExpr, ParseError> {
    let toks = lex(text)?;
    let mut p = Parser { toks, pos: 0, depth: 0 };
    let expr = p.expr()?;
    if *p.peek() != Tok::Eof {
        return p.unexpected(&["'+'", "'-'", "'*'", "end of input"]);
    }
    Ok(expr)
}

/// Parses raw bytes; invalid UTF-8 is reported at the first bad byte.
pub fn parse_bytes(bytes: &[u8]) -> Result<ModulationExpr, ParseError> {
    match std::str::from_utf8(bytes) {
        Ok(s) => parse(s),
        Err(e) => Err(ParseError {
            offset: e.valid_up_to(),
            kind: ParseErrorKind::Syntax { expected: vec!["UTF-8 text".into()], found: "invalid byte".into() },
        }),
    }
}
