//! Expression DSL for Hamiltonian and jump symbols.
//!
//! Grammar (whitespace-insensitive):
//!
//! ```text
//! expr     := '-'? term (('+' | '-') term)*
//! term     := factor (('*' factor) | ('/' number))*
//! factor   := base ('^' uint)?
//! base     := number | 'i' | ident | '(' expr ')'
//! ident    := ('x' | 'p' | 'a' | 'ad') index? | parameter-name
//! number   := uint | uint '.' digits
//! ```
//!
//! Division is permitted only by numeric literals. Symbols commute (they
//! are classical Weyl symbols): `(x*p + p*x)/2` is simply `x*p`. Ladder
//! aliases expand as `a_k = (x_k + i p_k) / sqrt(2 hbar)` and require
//! `2 hbar` to be a perfect rational square; the Weyl symbol of the
//! operator `adag a` is `ad*a - 1/2` in these units (the DSL product
//! `ad*a` is the symbol `|alpha|^2`, which quantizes to `n + 1/2`).

use crate::context::AlgebraContext;
use crate::poly::{PhasePolynomial, Var};
use crate::rational::{rational_sqrt, GaussRat, Rat};
use crate::{PhaseError, Result};
use num::traits::Zero;
use num::BigInt;
use std::collections::BTreeMap;

/// Named rational parameter bindings (e.g. `g = 1/10`).
pub type Bindings = BTreeMap<String, Rat>;

#[derive(Debug, Clone, PartialEq)]
enum Tok {
    Num(Rat),
    Ident(String),
    Plus,
    Minus,
    Star,
    Slash,
    Caret,
    LParen,
    RParen,
}

struct Lexer<'a> {
    src: &'a [u8],
    pos: usize,
}

impl<'a> Lexer<'a> {
    fn new(src: &'a str) -> Self {
        Lexer {
            src: src.as_bytes(),
            pos: 0,
        }
    }

    fn error(&self, message: impl Into<String>) -> PhaseError {
        PhaseError::Parse {
            position: self.pos,
            message: message.into(),
        }
    }

    fn tokens(mut self) -> Result<Vec<(usize, Tok)>> {
        let mut out = Vec::new();
        while self.pos < self.src.len() {
            let c = self.src[self.pos];
            let start = self.pos;
            match c {
                b' ' | b'\t' | b'\n' | b'\r' => {
                    self.pos += 1;
                }
                b'+' => {
                    out.push((start, Tok::Plus));
                    self.pos += 1;
                }
                b'-' => {
                    out.push((start, Tok::Minus));
                    self.pos += 1;
                }
                b'*' => {
                    out.push((start, Tok::Star));
                    self.pos += 1;
                }
                b'/' => {
                    out.push((start, Tok::Slash));
                    self.pos += 1;
                }
                b'^' => {
                    out.push((start, Tok::Caret));
                    self.pos += 1;
                }
                b'(' => {
                    out.push((start, Tok::LParen));
                    self.pos += 1;
                }
                b')' => {
                    out.push((start, Tok::RParen));
                    self.pos += 1;
                }
                b'0'..=b'9' => {
                    let mut end = self.pos;
                    while end < self.src.len() && self.src[end].is_ascii_digit() {
                        end += 1;
                    }
                    let int_part = std::str::from_utf8(&self.src[self.pos..end]).unwrap();
                    let mut value: Rat = Rat::new(
                        int_part.parse::<BigInt>().map_err(|_| {
                            self.error(format!("bad integer literal {int_part:?}"))
                        })?,
                        BigInt::from(1),
                    );
                    // optional decimal part, kept exact
                    if end < self.src.len() && self.src[end] == b'.' {
                        let frac_start = end + 1;
                        let mut fend = frac_start;
                        while fend < self.src.len() && self.src[fend].is_ascii_digit() {
                            fend += 1;
                        }
                        if fend == frac_start {
                            self.pos = end;
                            return Err(self.error("expected digits after decimal point"));
                        }
                        let frac = std::str::from_utf8(&self.src[frac_start..fend]).unwrap();
                        let scale = BigInt::from(10).pow((fend - frac_start) as u32);
                        value += Rat::new(frac.parse::<BigInt>().unwrap(), scale);
                        end = fend;
                    }
                    self.pos = end;
                    out.push((start, Tok::Num(value)));
                }
                b'a'..=b'z' | b'A'..=b'Z' | b'_' => {
                    let mut end = self.pos;
                    while end < self.src.len()
                        && (self.src[end].is_ascii_alphanumeric() || self.src[end] == b'_')
                    {
                        end += 1;
                    }
                    let name = std::str::from_utf8(&self.src[self.pos..end]).unwrap();
                    self.pos = end;
                    out.push((start, Tok::Ident(name.to_string())));
                }
                _ => {
                    return Err(self.error(format!("unexpected character {:?}", c as char)));
                }
            }
        }
        Ok(out)
    }
}

struct Parser<'a> {
    toks: Vec<(usize, Tok)>,
    idx: usize,
    ctx: &'a AlgebraContext,
    bindings: &'a Bindings,
    end: usize,
}

impl<'a> Parser<'a> {
    fn error_at(&self, message: impl Into<String>) -> PhaseError {
        let position = self
            .toks
            .get(self.idx)
            .map(|(p, _)| *p)
            .unwrap_or(self.end);
        PhaseError::Parse {
            position,
            message: message.into(),
        }
    }

    fn peek(&self) -> Option<&Tok> {
        self.toks.get(self.idx).map(|(_, t)| t)
    }

    fn next(&mut self) -> Option<Tok> {
        let t = self.toks.get(self.idx).map(|(_, t)| t.clone());
        if t.is_some() {
            self.idx += 1;
        }
        t
    }

    fn expr(&mut self) -> Result<PhasePolynomial> {
        let mut negate = false;
        if self.peek() == Some(&Tok::Minus) {
            self.next();
            negate = true;
        }
        let mut acc = self.term()?;
        if negate {
            acc = acc.neg();
        }
        loop {
            match self.peek() {
                Some(Tok::Plus) => {
                    self.next();
                    let rhs = self.term()?;
                    acc = acc.add(&rhs)?;
                }
                Some(Tok::Minus) => {
                    self.next();
                    let rhs = self.term()?;
                    acc = acc.sub(&rhs)?;
                }
                _ => break,
            }
        }
        Ok(acc)
    }

    fn term(&mut self) -> Result<PhasePolynomial> {
        let mut acc = self.factor()?;
        loop {
            match self.peek() {
                Some(Tok::Star) => {
                    self.next();
                    let rhs = self.factor()?;
                    acc = acc.mul(&rhs)?;
                }
                Some(Tok::Slash) => {
                    self.next();
                    match self.next() {
                        Some(Tok::Num(v)) => {
                            if v.is_zero() {
                                self.idx -= 1;
                                return Err(self.error_at("division by zero"));
                            }
                            acc = acc.scale_rat(&v.recip());
                        }
                        _ => {
                            self.idx = self.idx.saturating_sub(1);
                            return Err(
                                self.error_at("division is only allowed by numeric literals")
                            );
                        }
                    }
                }
                _ => break,
            }
        }
        Ok(acc)
    }

    fn factor(&mut self) -> Result<PhasePolynomial> {
        let base = self.base()?;
        if self.peek() == Some(&Tok::Caret) {
            self.next();
            match self.next() {
                Some(Tok::Num(v)) => {
                    use num::ToPrimitive;
                    if !v.denom().eq(&BigInt::from(1)) {
                        self.idx -= 1;
                        return Err(self.error_at("exponent must be a non-negative integer"));
                    }
                    let e = v.numer().to_u32().ok_or_else(|| {
                        self.error_at("exponent must be a non-negative integer")
                    })?;
                    return Ok(base.pow(e));
                }
                _ => {
                    self.idx = self.idx.saturating_sub(1);
                    return Err(self.error_at("exponent must be a non-negative integer"));
                }
            }
        }
        Ok(base)
    }

    fn base(&mut self) -> Result<PhasePolynomial> {
        match self.next() {
            Some(Tok::Num(v)) => Ok(PhasePolynomial::constant(
                self.ctx,
                GaussRat::from_rat(v),
            )),
            Some(Tok::LParen) => {
                let inner = self.expr()?;
                match self.next() {
                    Some(Tok::RParen) => Ok(inner),
                    _ => {
                        self.idx = self.idx.saturating_sub(1);
                        Err(self.error_at("expected closing parenthesis"))
                    }
                }
            }
            Some(Tok::Ident(name)) => {
                self.idx -= 1;
                let poly = self.resolve_ident(&name)?;
                self.idx += 1;
                Ok(poly)
            }
            Some(_) => {
                self.idx -= 1;
                Err(self.error_at("expected a value"))
            }
            None => Err(self.error_at("unexpected end of input")),
        }
    }

    fn resolve_ident(&self, name: &str) -> Result<PhasePolynomial> {
        if name == "i" {
            return Ok(PhasePolynomial::constant(self.ctx, GaussRat::i()));
        }
        // canonical variables and ladder aliases with optional 1-based index
        for (prefix, kind) in [("ad", 'd'), ("x", 'x'), ("p", 'p'), ("a", 'a')] {
            if let Some(rest) = name.strip_prefix(prefix) {
                if rest.is_empty() || rest.chars().all(|c| c.is_ascii_digit()) {
                    let mode = if rest.is_empty() {
                        0
                    } else {
                        let k: usize = rest.parse().map_err(|_| {
                            self.error_at(format!("bad variable index in {name:?}"))
                        })?;
                        if k == 0 || k > self.ctx.modes() {
                            return Err(self.error_at(format!(
                                "variable {name:?} out of range for {} mode(s)",
                                self.ctx.modes()
                            )));
                        }
                        k - 1
                    };
                    return match kind {
                        'x' => Ok(PhasePolynomial::var(self.ctx, Var::X(mode))),
                        'p' => Ok(PhasePolynomial::var(self.ctx, Var::P(mode))),
                        a => self.ladder(mode, a == 'd'),
                    };
                }
            }
        }
        match self.bindings.get(name) {
            Some(v) => Ok(PhasePolynomial::constant(
                self.ctx,
                GaussRat::from_rat(v.clone()),
            )),
            None => Err(self.error_at(format!("unknown identifier {name:?}"))),
        }
    }

    fn ladder(&self, mode: usize, dagger: bool) -> Result<PhasePolynomial> {
        let two_hbar = self.ctx.hbar() * Rat::from_integer(2.into());
        let root = rational_sqrt(&two_hbar).ok_or_else(|| PhaseError::NonSquareHbar {
            value: two_hbar.to_string(),
        })?;
        let x = PhasePolynomial::var(self.ctx, Var::X(mode));
        let ip = PhasePolynomial::var(self.ctx, Var::P(mode)).scale(&GaussRat::i());
        let combo = if dagger { x.sub(&ip)? } else { x.add(&ip)? };
        Ok(combo.scale_rat(&root.recip()))
    }
}

/// Parse an expression into an exact polynomial in the given context.
pub fn parse_expression(
    text: &str,
    ctx: &AlgebraContext,
    bindings: &Bindings,
) -> Result<PhasePolynomial> {
    let toks = Lexer::new(text).tokens()?;
    let end = text.len();
    let mut parser = Parser {
        toks,
        idx: 0,
        ctx,
        bindings,
        end,
    };
    let poly = parser.expr()?;
    if parser.idx != parser.toks.len() {
        return Err(parser.error_at("trailing input after expression"));
    }
    Ok(poly)
}
