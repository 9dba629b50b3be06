use alloc::format;
use alloc::string::{String, ToString};
use alloc::vec::Vec;
use core::fmt;

use super::formula::{Formula, Sequent};
use super::signature::SubexpSignature;

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum ParseErrorKind {
    Syntax(String),
    UnknownIndex(String),
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ParseError {
    /// Byte offset into the input.
    pub pos: usize,
    pub kind: ParseErrorKind,
}

impl fmt::Display for ParseError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match &self.kind {
            ParseErrorKind::Syntax(msg) => write!(f, "parse error at {}: {msg}", self.pos),
            ParseErrorKind::UnknownIndex(i) => {
                write!(f, "parse error at {}: unknown subexponential index '{i}'", self.pos)
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
enum Tok {
    Bot,
    Top,
    One,
    Ident(String),
    BangIdx(String),
    Star,
    LDivOp,
    RDivOp,
    AndOp,
    OrOp,
    LParen,
    RParen,
    Turnstile,
}

struct Lexer<'a> {
    src: &'a [u8],
    pos: usize,
}

impl<'a> Lexer<'a> {
    fn new(src: &'a str) -> Self {
        Lexer { src: src.as_bytes(), pos: 0 }
    }

    fn err(&self, pos: usize, msg: &str) -> ParseError {
        ParseError { pos, kind: ParseErrorKind::Syntax(msg.to_string()) }
    }

    fn tokens(mut self) -> Result<Vec<(usize, Tok)>, ParseError> {
        let mut out = Vec::new();
        while self.pos < self.src.len() {
            let start = self.pos;
            let c = self.src[self.pos];
            match c {
                b' ' | b'\t' | b'\r' | b'\n' => {
                    self.pos += 1;
                }
                b'(' => {
                    self.pos += 1;
                    out.push((start, Tok::LParen));
                }
                b')' => {
                    self.pos += 1;
                    out.push((start, Tok::RParen));
                }
                b'*' => {
                    self.pos += 1;
                    out.push((start, Tok::Star));
                }
                b'/' => {
                    if self.src.get(self.pos + 1) == Some(&b'\\') {
                        self.pos += 2;
                        out.push((start, Tok::AndOp));
                    } else {
                        self.pos += 1;
                        out.push((start, Tok::RDivOp));
                    }
                }
                b'\\' => {
                    if self.src.get(self.pos + 1) == Some(&b'/') {
                        self.pos += 2;
                        out.push((start, Tok::OrOp));
                    } else {
                        self.pos += 1;
                        out.push((start, Tok::LDivOp));
                    }
                }
                b'|' => {
                    if self.src.get(self.pos + 1) == Some(&b'-') {
                        self.pos += 2;
                        out.push((start, Tok::Turnstile));
                    } else {
                        return Err(self.err(start, "expected '|-'"));
                    }
                }
                b'1' => {
                    self.pos += 1;
                    out.push((start, Tok::One));
                }
                b'!' => {
                    if self.src.get(self.pos + 1) != Some(&b'[') {
                        return Err(self.err(start, "expected '![' to open a subexponential"));
                    }
                    self.pos += 2;
                    let name = self.ident().ok_or_else(|| {
                        self.err(self.pos, "expected an index name inside '![...]'")
                    })?;
                    if self.src.get(self.pos) != Some(&b']') {
                        return Err(self.err(self.pos, "expected ']' after the index name"));
                    }
                    self.pos += 1;
                    out.push((start, Tok::BangIdx(name)));
                }
                c if c.is_ascii_alphabetic() || c == b'_' => {
                    let name = self.ident().expect("first byte already checked");
                    let tok = match name.as_str() {
                        "T" => Tok::Top,
                        "F" => Tok::Bot,
                        _ => Tok::Ident(name),
                    };
                    out.push((start, tok));
                }
                other => {
                    return Err(self.err(start, &format!("unexpected character '{}'", other as char)));
                }
            }
        }
        Ok(out)
    }

    fn ident(&mut self) -> Option<String> {
        let start = self.pos;
        while self.pos < self.src.len() {
            let c = self.src[self.pos];
            if c.is_ascii_alphanumeric() || c == b'_' {
                self.pos += 1;
            } else {
                break;
            }
        }
        if self.pos == start {
            None
        } else {
            Some(String::from_utf8(self.src[start..self.pos].to_vec()).expect("ascii"))
        }
    }
}

struct Parser<'a> {
    toks: Vec<(usize, Tok)>,
    pos: usize,
    end: usize,
    sig: &'a SubexpSignature,
}

impl<'a> Parser<'a> {
    fn peek(&self) -> Option<&Tok> {
        self.toks.get(self.pos).map(|(_, t)| t)
    }

    fn here(&self) -> usize {
        self.toks.get(self.pos).map_or(self.end, |(p, _)| *p)
    }

    fn bump(&mut self) -> Option<Tok> {
        let t = self.toks.get(self.pos).map(|(_, t)| t.clone());
        if t.is_some() {
            self.pos += 1;
        }
        t
    }

    fn syntax(&self, msg: &str) -> ParseError {
        ParseError { pos: self.here(), kind: ParseErrorKind::Syntax(msg.to_string()) }
    }

    fn or_expr(&mut self) -> Result<Formula, ParseError> {
        let mut acc = self.and_expr()?;
        while self.peek() == Some(&Tok::OrOp) {
            self.bump();
            acc = Formula::or(acc, self.and_expr()?);
        }
        Ok(acc)
    }

    fn and_expr(&mut self) -> Result<Formula, ParseError> {
        let mut acc = self.div_expr()?;
        while self.peek() == Some(&Tok::AndOp) {
            self.bump();
            acc = Formula::and(acc, self.div_expr()?);
        }
        Ok(acc)
    }

    fn div_expr(&mut self) -> Result<Formula, ParseError> {
        let lhs = self.prod_expr()?;
        let op = match self.peek() {
            Some(Tok::LDivOp) => Some(true),
            Some(Tok::RDivOp) => Some(false),
            _ => None,
        };
        let Some(is_ldiv) = op else { return Ok(lhs) };
        self.bump();
        let rhs = self.prod_expr()?;
        if matches!(self.peek(), Some(Tok::LDivOp) | Some(Tok::RDivOp)) {
            return Err(self.syntax("'\\' and '/' are non-associative; parenthesize"));
        }
        Ok(if is_ldiv { Formula::ldiv(lhs, rhs) } else { Formula::rdiv(lhs, rhs) })
    }

    fn prod_expr(&mut self) -> Result<Formula, ParseError> {
        let mut acc = self.unary()?;
        while self.peek() == Some(&Tok::Star) {
            self.bump();
            acc = Formula::prod(acc, self.unary()?);
        }
        Ok(acc)
    }

    fn unary(&mut self) -> Result<Formula, ParseError> {
        if let Some(Tok::BangIdx(_)) = self.peek() {
            let pos = self.here();
            let Some(Tok::BangIdx(name)) = self.bump() else { unreachable!() };
            if self.sig.index_of(&name).is_none() {
                return Err(ParseError { pos, kind: ParseErrorKind::UnknownIndex(name) });
            }
            let body = self.unary()?;
            return Ok(Formula::Bang(name, alloc::boxed::Box::new(body)));
        }
        self.atom()
    }

    fn atom(&mut self) -> Result<Formula, ParseError> {
        match self.bump() {
            Some(Tok::Top) => Ok(Formula::Top),
            Some(Tok::Bot) => Ok(Formula::Bot),
            Some(Tok::One) => Ok(Formula::One),
            Some(Tok::Ident(v)) => Ok(Formula::Var(v)),
            Some(Tok::LParen) => {
                let inner = self.or_expr()?;
                match self.bump() {
                    Some(Tok::RParen) => Ok(inner),
                    _ => {
                        self.pos -= 1;
                        Err(self.syntax("expected ')'"))
                    }
                }
            }
            Some(_) => {
                self.pos -= 1;
                Err(self.syntax("expected a formula"))
            }
            None => Err(self.syntax("unexpected end of input")),
        }
    }
}

fn parser<'a>(text: &str, sig: &'a SubexpSignature) -> Result<Parser<'a>, ParseError> {
    let toks = Lexer::new(text).tokens()?;
    Ok(Parser { toks, pos: 0, end: text.len(), sig })
}

/// Parses a formula; `Bang` indices are checked against `sig`.
pub fn parse_formula(text: &str, sig: &SubexpSignature) -> Result<Formula, ParseError> {
    let mut p = parser(text, sig)?;
    let f = p.or_expr()?;
    if p.peek().is_some() {
        return Err(p.syntax("trailing input after formula"));
    }
    Ok(f)
}

/// Parses `lhs |- rhs`.
pub fn parse_sequent(text: &str, sig: &SubexpSignature) -> Result<Sequent, ParseError> {
    let mut p = parser(text, sig)?;
    let lhs = p.or_expr()?;
    if p.bump() != Some(Tok::Turnstile) {
        p.pos = p.pos.saturating_sub(1);
        return Err(p.syntax("expected '|-'"));
    }
    let rhs = p.or_expr()?;
    if p.peek().is_some() {
        return Err(p.syntax("trailing input after sequent"));
    }
    Ok(Sequent::new(lhs, rhs))
}
