//! Polynomial literals: sums of products of scalars, `i`, `t^k` and
//! generator powers, e.g. `a1*a3 - t^-2*a2^2` or `(1+i)/2*x^3`.

use std::sync::Arc;

use num_traits::ToPrimitive;

use super::{Algebra, Poly};
use crate::scalars::{scalar_from_bigint, LitParser, LiteralError, Scalar};

pub fn parse_poly(alg: &Arc<Algebra>, s: &str) -> Result<Poly, LiteralError> {
    let mut p = PolyParser { lit: LitParser { src: s.as_bytes(), pos: 0 }, alg };
    let v = p.expr()?;
    if p.lit.peek().is_some() {
        return Err(p.lit.err("unexpected trailing input"));
    }
    Ok(v)
}

struct PolyParser<'a> {
    lit: LitParser<'a>,
    alg: &'a Arc<Algebra>,
}

impl PolyParser<'_> {
    fn expr(&mut self) -> Result<Poly, LiteralError> {
        let mut acc = match self.lit.peek() {
            Some(b'-') => {
                self.lit.pos += 1;
                self.term()?.neg()
            }
            Some(b'+') => {
                self.lit.pos += 1;
                self.term()?
            }
            _ => self.term()?,
        };
        loop {
            match self.lit.peek() {
                Some(b'+') => {
                    self.lit.pos += 1;
                    acc = acc.add(&self.term()?);
                }
                Some(b'-') => {
                    self.lit.pos += 1;
                    acc = acc.sub(&self.term()?);
                }
                _ => return Ok(acc),
            }
        }
    }

    fn term(&mut self) -> Result<Poly, LiteralError> {
        let mut acc = self.factor()?;
        loop {
            match self.lit.peek() {
                Some(b'*') => {
                    self.lit.pos += 1;
                    let at = self.lit.pos;
                    let f = self.factor()?;
                    acc = acc.try_mul(&f).map_err(|e| LiteralError { offset: at, msg: e.to_string() })?;
                }
                Some(b'/') => {
                    self.lit.pos += 1;
                    let at = self.lit.pos;
                    let d = self.factor()?;
                    let d = d
                        .as_scalar()
                        .ok_or_else(|| LiteralError { offset: at, msg: "can only divide by a scalar".into() })?;
                    let inv = d.inv().map_err(|_| LiteralError { offset: at, msg: "division by zero".into() })?;
                    acc = acc.scale(&inv);
                }
                _ => return Ok(acc),
            }
        }
    }

    fn factor(&mut self) -> Result<Poly, LiteralError> {
        let start = self.lit.pos;
        let base = self.atom()?;
        if self.lit.peek() != Some(b'^') {
            return Ok(base);
        }
        self.lit.pos += 1;
        let e = self.lit.signed_exponent()?;
        if e >= 0 {
            let e = e.to_u32().ok_or_else(|| self.lit.err("exponent out of range"))?;
            return Ok(base.pow(e));
        }
        let c = base
            .as_scalar()
            .ok_or_else(|| LiteralError { offset: start, msg: "negative power of a non-scalar".into() })?;
        let v = c.pow(e).map_err(|_| LiteralError { offset: start, msg: "division by zero".into() })?;
        Ok(Poly::constant(self.alg, v))
    }

    fn atom(&mut self) -> Result<Poly, LiteralError> {
        match self.lit.peek() {
            Some(b'(') => {
                self.lit.pos += 1;
                let v = self.expr()?;
                if self.lit.peek() != Some(b')') {
                    return Err(self.lit.err("expected ')'"));
                }
                self.lit.pos += 1;
                Ok(v)
            }
            Some(c) if c.is_ascii_digit() => {
                let n = self.lit.integer()?;
                Ok(Poly::constant(self.alg, scalar_from_bigint(n)))
            }
            Some(c) if c.is_ascii_alphabetic() || c == b'_' => {
                let start = self.lit.pos;
                while self
                    .lit
                    .src
                    .get(self.lit.pos)
                    .is_some_and(|c| c.is_ascii_alphanumeric() || *c == b'_')
                {
                    self.lit.pos += 1;
                }
                let name = std::str::from_utf8(&self.lit.src[start..self.lit.pos]).unwrap();
                match name {
                    "i" => Ok(Poly::constant(self.alg, Scalar::i())),
                    "t" => Ok(Poly::constant(self.alg, Scalar::t())),
                    _ => match self.alg.gen_index(name) {
                        Some(g) => Ok(Poly::generator(self.alg, g)),
                        None => Err(LiteralError { offset: start, msg: format!("unknown generator '{}'", name) }),
                    },
                }
            }
            Some(_) => Err(self.lit.err("unexpected character")),
            None => Err(self.lit.err("unexpected end of literal")),
        }
    }
}

fn format_mono(alg: &Algebra, m: &[u32]) -> String {
    let mut parts = Vec::new();
    for (g, e) in alg.generators().iter().zip(m) {
        match e {
            0 => {}
            1 => parts.push(g.name.clone()),
            _ => parts.push(format!("{}^{}", g.name, e)),
        }
    }
    parts.join("*")
}

fn format_coeff(c: &Scalar) -> String {
    if c.needs_parens() {
        format!("({})", c)
    } else {
        c.to_string()
    }
}

/// Canonical text form; parses back to the same element.
pub fn format_poly(p: &Poly) -> String {
    if p.is_zero() {
        return "0".to_string();
    }
    let alg = p.algebra();
    let mut keys: Vec<_> = p.terms().keys().collect();
    keys.sort_by(|a, b| alg.mono_degree(b).cmp(&alg.mono_degree(a)).then(b.cmp(a)));
    let mut out = String::new();
    for m in keys {
        let c = &p.terms()[m];
        let mono = format_mono(alg, m);
        let (neg, mag) = if c.is_negative_looking() { (true, c.neg()) } else { (false, c.clone()) };
        let body = if mono.is_empty() {
            if neg || out.is_empty() {
                mag.to_string()
            } else {
                format_coeff(&mag)
            }
        } else if mag.is_one() {
            mono
        } else {
            format!("{}*{}", format_coeff(&mag), mono)
        };
        if out.is_empty() {
            if neg {
                out.push('-');
            }
        } else {
            out.push_str(if neg { " - " } else { " + " });
        }
        out.push_str(&body);
    }
    out
}
