//! Formula parser.
//!
//! Grammar:
//!
//! ```text
//! expr   := term (('+' | '-') term)*
//! term   := factor (('*' | '/') factor)*
//! factor := '-' factor | base ('^' factor)?
//! base   := number | ident | '(' expr ')' | func '(' expr ')'
//! func   := sin | cos | exp | log | sqrt
//! ident  := theta | q<i> | q<i>d<k> | u<j> | p<i>
//! ```
//!
//! `(-<number>)` is read as a negative literal so printed negative constants
//! re-parse to the same tree.

use super::expr::{Expr, Func, VarRef};
use thiserror::Error;

/// Declared dimensions a formula must respect.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Dims {
    pub state_dim: usize,
    pub control_dim: usize,
    pub max_deriv: usize,
}

impl Dims {
    pub fn new(state_dim: usize, control_dim: usize, max_deriv: usize) -> Self {
        Dims { state_dim, control_dim, max_deriv }
    }
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ParseError {
    #[error("syntax error at {pos}: {msg}")]
    Syntax { pos: usize, msg: String },
    #[error("unknown variable `{name}` at {pos}")]
    UnknownVariable { pos: usize, name: String },
    #[error("derivative order {order} of `{name}` exceeds the maximum {max}")]
    DerivativeOrder { name: String, order: usize, max: usize },
}

#[derive(Debug, Clone, PartialEq)]
enum Tok {
    Num(f64),
    Ident(String),
    Op(char),
    LParen,
    RParen,
    End,
}

fn lex(text: &str) -> Result<Vec<(usize, Tok)>, ParseError> {
    let bytes = text.as_bytes();
    let mut out = Vec::new();
    let mut i = 0;
    while i < bytes.len() {
        let c = bytes[i] as char;
        if c.is_ascii_whitespace() {
            i += 1;
            continue;
        }
        let start = i;
        if c.is_ascii_digit() || c == '.' {
            while i < bytes.len() && (bytes[i].is_ascii_digit() || bytes[i] == b'.') {
                i += 1;
            }
            if i < bytes.len() && (bytes[i] == b'e' || bytes[i] == b'E') {
                let mut j = i + 1;
                if j < bytes.len() && (bytes[j] == b'+' || bytes[j] == b'-') {
                    j += 1;
                }
                if j < bytes.len() && bytes[j].is_ascii_digit() {
                    while j < bytes.len() && bytes[j].is_ascii_digit() {
                        j += 1;
                    }
                    i = j;
                }
            }
            let lit = &text[start..i];
            let value = lit.parse::<f64>().map_err(|_| ParseError::Syntax {
                pos: start,
                msg: format!("malformed number `{lit}`"),
            })?;
            out.push((start, Tok::Num(value)));
        } else if c.is_ascii_alphabetic() || c == '_' {
            while i < bytes.len() && (bytes[i].is_ascii_alphanumeric() || bytes[i] == b'_') {
                i += 1;
            }
            out.push((start, Tok::Ident(text[start..i].to_string())));
        } else {
            let tok = match c {
                '+' | '-' | '*' | '/' | '^' => Tok::Op(c),
                '(' => Tok::LParen,
                ')' => Tok::RParen,
                _ => {
                    return Err(ParseError::Syntax { pos: start, msg: format!("unexpected character `{c}`") });
                }
            };
            out.push((start, tok));
            i += 1;
        }
    }
    out.push((text.len(), Tok::End));
    Ok(out)
}

struct Parser<'a> {
    toks: Vec<(usize, Tok)>,
    at: usize,
    dims: &'a Dims,
}

impl Parser<'_> {
    fn peek(&self) -> &Tok {
        &self.toks[self.at].1
    }

    fn peek_at(&self, k: usize) -> &Tok {
        let idx = (self.at + k).min(self.toks.len() - 1);
        &self.toks[idx].1
    }

    fn pos(&self) -> usize {
        self.toks[self.at].0
    }

    fn bump(&mut self) -> Tok {
        let t = self.toks[self.at].1.clone();
        if self.at < self.toks.len() - 1 {
            self.at += 1;
        }
        t
    }

    fn syntax<T>(&self, msg: impl Into<String>) -> Result<T, ParseError> {
        Err(ParseError::Syntax { pos: self.pos(), msg: msg.into() })
    }

    fn expect_rparen(&mut self) -> Result<(), ParseError> {
        match self.bump() {
            Tok::RParen => Ok(()),
            _ => {
                self.at -= 1;
                self.syntax("expected `)`")
            }
        }
    }

    fn expr(&mut self) -> Result<Expr, ParseError> {
        let mut lhs = self.term()?;
        loop {
            match self.peek() {
                Tok::Op('+') => {
                    self.bump();
                    lhs = Expr::raw_add(lhs, self.term()?);
                }
                Tok::Op('-') => {
                    self.bump();
                    lhs = Expr::raw_sub(lhs, self.term()?);
                }
                _ => return Ok(lhs),
            }
        }
    }

    fn term(&mut self) -> Result<Expr, ParseError> {
        let mut lhs = self.factor()?;
        loop {
            match self.peek() {
                Tok::Op('*') => {
                    self.bump();
                    lhs = Expr::raw_mul(lhs, self.factor()?);
                }
                Tok::Op('/') => {
                    self.bump();
                    lhs = Expr::raw_div(lhs, self.factor()?);
                }
                _ => return Ok(lhs),
            }
        }
    }

    fn factor(&mut self) -> Result<Expr, ParseError> {
        if let Tok::Op('-') = self.peek() {
            self.bump();
            return Ok(Expr::raw_neg(self.factor()?));
        }
        let base = self.base()?;
        if let Tok::Op('^') = self.peek() {
            self.bump();
            let exponent = self.factor()?;
            return Ok(Expr::raw_pow(base, exponent));
        }
        Ok(base)
    }

    fn base(&mut self) -> Result<Expr, ParseError> {
        let pos = self.pos();
        match self.bump() {
            Tok::Num(v) => Ok(Expr::constant(v)),
            Tok::LParen => {
                if let (Tok::Op('-'), Tok::Num(v), Tok::RParen) = (self.peek(), self.peek_at(1), self.peek_at(2)) {
                    let v = *v;
                    self.at += 3;
                    return Ok(Expr::constant(-v));
                }
                let inner = self.expr()?;
                self.expect_rparen()?;
                Ok(inner)
            }
            Tok::Ident(name) => {
                if let Some(f) = Func::from_name(&name) {
                    match self.bump() {
                        Tok::LParen => {}
                        _ => {
                            self.at -= 1;
                            return self.syntax(format!("expected `(` after `{name}`"));
                        }
                    }
                    let arg = self.expr()?;
                    self.expect_rparen()?;
                    return Ok(Expr::raw_func(f, arg));
                }
                Ok(Expr::var(resolve_ident(&name, pos, self.dims)?))
            }
            Tok::End => {
                self.at = self.toks.len() - 1;
                self.syntax("unexpected end of input")
            }
            other => {
                self.at -= 1;
                self.syntax(format!("unexpected token {other:?}"))
            }
        }
    }
}

fn parse_index(s: &str) -> Option<usize> {
    if s.is_empty() || !s.bytes().all(|b| b.is_ascii_digit()) {
        return None;
    }
    s.parse().ok()
}

fn resolve_ident(name: &str, pos: usize, dims: &Dims) -> Result<VarRef, ParseError> {
    let unknown = || ParseError::UnknownVariable { pos, name: name.to_string() };
    if name == "theta" {
        return Ok(VarRef::Theta);
    }
    let (head, rest) = name.split_at(1);
    match head {
        "q" => {
            let (idx, order) = match rest.find('d') {
                Some(k) => (parse_index(&rest[..k]), parse_index(&rest[k + 1..])),
                None => (parse_index(rest), Some(0)),
            };
            let (i, d) = match (idx, order) {
                (Some(i), Some(d)) => (i, d),
                _ => return Err(unknown()),
            };
            if i >= dims.state_dim {
                return Err(unknown());
            }
            if d > dims.max_deriv {
                return Err(ParseError::DerivativeOrder { name: name.to_string(), order: d, max: dims.max_deriv });
            }
            Ok(VarRef::State(i, d))
        }
        "u" => match parse_index(rest) {
            Some(j) if j < dims.control_dim => Ok(VarRef::Control(j)),
            _ => Err(unknown()),
        },
        "p" => match parse_index(rest) {
            Some(i) if i < dims.state_dim => Ok(VarRef::Costate(i)),
            _ => Err(unknown()),
        },
        _ => Err(unknown()),
    }
}

/// Parses `text` into an expression tree, validating variable names
/// against `dims`.
pub fn parse(text: &str, dims: &Dims) -> Result<Expr, ParseError> {
    let toks = lex(text)?;
    let mut p = Parser { toks, at: 0, dims };
    let e = p.expr()?;
    match p.peek() {
        Tok::End => Ok(e),
        _ => p.syntax("trailing input"),
    }
}
