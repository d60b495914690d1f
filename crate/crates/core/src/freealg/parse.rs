//! Text format for polynomials, e.g. `(1.5-2i)*z1*z2^* + 3`.
//!
//! Grammar: sums and differences of products; factors are real or imaginary
//! numbers (`2.5`, `3i`, `i`), variable names, or parenthesized
//! expressions. Postfix `^*` takes the adjoint and `^k` a power.

use std::sync::Arc;

use num_complex::Complex64;

use super::{FreePoly, Signature};
use crate::error::{Error, Result};
use crate::linalg;

#[derive(Clone, Debug, PartialEq)]
enum Tok {
    Num(f64),
    Imag(f64),
    Ident(String),
    Plus,
    Minus,
    Star,
    Caret,
    LParen,
    RParen,
}

fn tokenize(src: &str) -> Result<Vec<(usize, Tok)>> {
    let bytes = src.as_bytes();
    let mut out = Vec::new();
    let mut k = 0;
    while k < bytes.len() {
        let c = bytes[k] as char;
        let start = k;
        match c {
            ' ' | '\t' | '\n' | '\r' => {
                k += 1;
                continue;
            }
            '+' => out.push((start, Tok::Plus)),
            '-' => out.push((start, Tok::Minus)),
            '*' => out.push((start, Tok::Star)),
            '^' => out.push((start, Tok::Caret)),
            '(' => out.push((start, Tok::LParen)),
            ')' => out.push((start, Tok::RParen)),
            '0'..='9' | '.' => {
                while k < bytes.len() && (bytes[k].is_ascii_digit() || bytes[k] == b'.') {
                    k += 1;
                }
                if k < bytes.len() && (bytes[k] == b'e' || bytes[k] == b'E') {
                    let mut j = k + 1;
                    if j < bytes.len() && (bytes[j] == b'+' || bytes[j] == b'-') {
                        j += 1;
                    }
                    if j < bytes.len() && bytes[j].is_ascii_digit() {
                        while j < bytes.len() && bytes[j].is_ascii_digit() {
                            j += 1;
                        }
                        k = j;
                    }
                }
                let text = &src[start..k];
                let v: f64 = text.parse().map_err(|_| Error::Parse {
                    pos: start,
                    msg: format!("bad number `{text}`"),
                })?;
                let imag = k < bytes.len()
                    && bytes[k] == b'i'
                    && !(k + 1 < bytes.len() && (bytes[k + 1].is_ascii_alphanumeric() || bytes[k + 1] == b'_'));
                if imag {
                    k += 1;
                    out.push((start, Tok::Imag(v)));
                } else {
                    out.push((start, Tok::Num(v)));
                }
                continue;
            }
            c if c.is_ascii_alphabetic() || c == '_' => {
                while k < bytes.len() && (bytes[k].is_ascii_alphanumeric() || bytes[k] == b'_') {
                    k += 1;
                }
                out.push((start, Tok::Ident(src[start..k].to_string())));
                continue;
            }
            other => {
                return Err(Error::Parse { pos: start, msg: format!("unexpected character `{other}`") })
            }
        }
        k += 1;
    }
    Ok(out)
}

struct Parser<'a> {
    sig: &'a Arc<Signature>,
    toks: Vec<(usize, Tok)>,
    pos: usize,
    len: usize,
}

impl Parser<'_> {
    fn peek(&self) -> Option<&Tok> {
        self.toks.get(self.pos).map(|(_, t)| t)
    }

    fn here(&self) -> usize {
        self.toks.get(self.pos).map_or(self.len, |(p, _)| *p)
    }

    fn err<T>(&self, msg: impl Into<String>) -> Result<T> {
        Err(Error::Parse { pos: self.here(), msg: msg.into() })
    }

    fn expr(&mut self) -> Result<FreePoly> {
        let mut acc = match self.peek() {
            Some(Tok::Plus) => {
                self.pos += 1;
                self.term()?
            }
            Some(Tok::Minus) => {
                self.pos += 1;
                -&self.term()?
            }
            _ => self.term()?,
        };
        loop {
            match self.peek() {
                Some(Tok::Plus) => {
                    self.pos += 1;
                    acc = &acc + &self.term()?;
                }
                Some(Tok::Minus) => {
                    self.pos += 1;
                    acc = &acc - &self.term()?;
                }
                _ => return Ok(acc),
            }
        }
    }

    fn term(&mut self) -> Result<FreePoly> {
        let mut acc = self.unary()?;
        while let Some(Tok::Star) = self.peek() {
            self.pos += 1;
            acc = &acc * &self.unary()?;
        }
        Ok(acc)
    }

    fn unary(&mut self) -> Result<FreePoly> {
        if let Some(Tok::Minus) = self.peek() {
            self.pos += 1;
            return Ok(-&self.unary()?);
        }
        self.postfix()
    }

    fn postfix(&mut self) -> Result<FreePoly> {
        let mut base = self.atom()?;
        while let Some(Tok::Caret) = self.peek() {
            self.pos += 1;
            match self.peek().cloned() {
                Some(Tok::Star) => {
                    self.pos += 1;
                    base = base.adjoint();
                }
                Some(Tok::Num(v)) if v >= 0.0 && v.fract() == 0.0 && v <= 64.0 => {
                    self.pos += 1;
                    let mut acc = FreePoly::one(self.sig);
                    for _ in 0..(v as usize) {
                        acc = &acc * &base;
                    }
                    base = acc;
                }
                _ => return self.err("expected `*` or a small integer after `^`"),
            }
        }
        Ok(base)
    }

    fn atom(&mut self) -> Result<FreePoly> {
        match self.peek().cloned() {
            Some(Tok::Num(v)) => {
                self.pos += 1;
                Ok(FreePoly::real(self.sig, v))
            }
            Some(Tok::Imag(v)) => {
                self.pos += 1;
                Ok(FreePoly::constant(self.sig, Complex64::new(0.0, v)))
            }
            Some(Tok::Ident(name)) => {
                self.pos += 1;
                if name == "i" {
                    return Ok(FreePoly::constant(self.sig, linalg::I));
                }
                match self.sig.var_index(&name) {
                    Some(v) => Ok(FreePoly::var(self.sig, v)),
                    None => {
                        self.pos -= 1;
                        self.err(format!("unknown variable `{name}`"))
                    }
                }
            }
            Some(Tok::LParen) => {
                self.pos += 1;
                let inner = self.expr()?;
                match self.peek() {
                    Some(Tok::RParen) => {
                        self.pos += 1;
                        Ok(inner)
                    }
                    _ => self.err("expected `)`"),
                }
            }
            Some(t) => self.err(format!("unexpected token {t:?}")),
            None => self.err("unexpected end of input"),
        }
    }
}

/// Parses a polynomial over `sig`.
pub fn parse_poly(sig: &Arc<Signature>, src: &str) -> Result<FreePoly> {
    let toks = tokenize(src)?;
    let mut p = Parser { sig, toks, pos: 0, len: src.len() };
    if p.toks.is_empty() {
        return p.err("empty polynomial");
    }
    let out = p.expr()?;
    if p.pos != p.toks.len() {
        return p.err("trailing input");
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::freealg::Word;

    #[test]
    fn parses_documented_example() {
        let sig = Signature::general(2);
        let p = parse_poly(&sig, "(1.5-2i)*z1*z2^* + 3").unwrap();
        assert_eq!(p.coeff(&Word(vec![0, 3])), Complex64::new(1.5, -2.0));
        assert_eq!(p.coeff(&Word::unit()), Complex64::new(3.0, 0.0));
        assert_eq!(p.num_terms(), 2);
    }

    #[test]
    fn adjoint_of_group_and_powers() {
        let sig = Signature::general(1);
        let p = parse_poly(&sig, "(2i*z)^* + z^2").unwrap();
        assert_eq!(p.coeff(&Word(vec![1])), Complex64::new(0.0, -2.0));
        assert_eq!(p.coeff(&Word(vec![0, 0])), linalg::ONE);
    }

    #[test]
    fn errors_name_position() {
        let sig = Signature::hermitian(1);
        match parse_poly(&sig, "z + w") {
            Err(Error::Parse { pos, .. }) => assert_eq!(pos, 4),
            other => panic!("unexpected {other:?}"),
        }
        assert!(parse_poly(&sig, "z +").is_err());
        assert!(parse_poly(&sig, "(z").is_err());
    }

    #[test]
    fn scientific_notation() {
        let sig = Signature::hermitian(1);
        let p = parse_poly(&sig, "1e-3*z - 2.5E+2").unwrap();
        assert_eq!(p.coeff(&Word(vec![0])), Complex64::new(1e-3, 0.0));
        assert_eq!(p.coeff(&Word::unit()), Complex64::new(-250.0, 0.0));
    }
}
