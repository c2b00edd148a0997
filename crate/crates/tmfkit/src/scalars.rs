//! The coefficient field: rational functions in one parameter `t` with
//! Gaussian-rational coefficients.
//!
//! The catalog uses `q = t^2` and `p = t^(-n^2)`, so every square root it
//! needs already lives in the field.

use std::cmp::Ordering;
use std::fmt;
use std::hash::Hash;
use std::ops::{Add, Mul, Neg, Sub};

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum ScalarError {
    #[error("division by zero")]
    DivisionByZero,
    #[error("no square root representable in Q(i)(t)")]
    NoSquareRoot,
    #[error("pole at evaluation point")]
    PoleAtPoint,
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
#[error("{msg} at offset {offset}")]
pub struct LiteralError {
    pub offset: usize,
    pub msg: String,
}

/// A Gaussian rational `re + im*i`.
#[derive(Clone, PartialEq, Eq, Hash, Debug, Default)]
pub struct Gauss {
    pub re: BigRational,
    pub im: BigRational,
}

fn rat(n: i64) -> BigRational {
    BigRational::from_integer(BigInt::from(n))
}

impl Gauss {
    pub fn new(re: BigRational, im: BigRational) -> Self {
        Gauss { re, im }
    }

    pub fn from_i64(n: i64) -> Self {
        Gauss { re: rat(n), im: BigRational::zero() }
    }

    pub fn from_ints(re: i64, im: i64) -> Self {
        Gauss { re: rat(re), im: rat(im) }
    }

    pub fn zero() -> Self {
        Gauss::default()
    }

    pub fn one() -> Self {
        Gauss::from_i64(1)
    }

    pub fn i() -> Self {
        Gauss { re: BigRational::zero(), im: rat(1) }
    }

    pub fn is_zero(&self) -> bool {
        self.re.is_zero() && self.im.is_zero()
    }

    pub fn is_one(&self) -> bool {
        self.re.is_one() && self.im.is_zero()
    }

    pub fn add(&self, o: &Gauss) -> Gauss {
        Gauss { re: &self.re + &o.re, im: &self.im + &o.im }
    }

    pub fn sub(&self, o: &Gauss) -> Gauss {
        Gauss { re: &self.re - &o.re, im: &self.im - &o.im }
    }

    pub fn neg(&self) -> Gauss {
        Gauss { re: -&self.re, im: -&self.im }
    }

    pub fn mul(&self, o: &Gauss) -> Gauss {
        if self.im.is_zero() && o.im.is_zero() {
            return Gauss { re: &self.re * &o.re, im: BigRational::zero() };
        }
        Gauss {
            re: &self.re * &o.re - &self.im * &o.im,
            im: &self.re * &o.im + &self.im * &o.re,
        }
    }

    pub fn norm(&self) -> BigRational {
        &self.re * &self.re + &self.im * &self.im
    }

    pub fn inv(&self) -> Option<Gauss> {
        if self.is_zero() {
            return None;
        }
        if self.im.is_zero() {
            return Some(Gauss { re: self.re.recip(), im: BigRational::zero() });
        }
        let n = self.norm();
        Some(Gauss { re: &self.re / &n, im: -&self.im / &n })
    }

    pub fn div(&self, o: &Gauss) -> Option<Gauss> {
        o.inv().map(|r| self.mul(&r))
    }

    /// Square root in Q(i), normalized to have positive real part (or
    /// positive imaginary part when the real part vanishes).
    pub fn sqrt(&self) -> Option<Gauss> {
        if self.is_zero() {
            return Some(Gauss::zero());
        }
        let m = rat_sqrt(&self.norm())?;
        let two = rat(2);
        let p2 = (&m + &self.re) / &two;
        let q2 = (&m - &self.re) / &two;
        let p = rat_sqrt(&p2)?;
        let mut q = rat_sqrt(&q2)?;
        // 2pq must equal im
        if (&p * &q * &two) != self.im {
            q = -q;
        }
        let r = Gauss { re: p, im: q };
        let r = if r.re.is_negative() || (r.re.is_zero() && r.im.is_negative()) { r.neg() } else { r };
        if r.mul(&r) == *self {
            Some(r)
        } else {
            None
        }
    }
}

fn int_sqrt(n: &BigInt) -> Option<BigInt> {
    if n.is_negative() {
        return None;
    }
    let r = n.sqrt();
    if &r * &r == *n {
        Some(r)
    } else {
        None
    }
}

fn rat_sqrt(x: &BigRational) -> Option<BigRational> {
    let n = int_sqrt(x.numer())?;
    let d = int_sqrt(x.denom())?;
    Some(BigRational::new(n, d))
}

fn fmt_rat(r: &BigRational) -> String {
    if r.is_integer() {
        r.numer().to_string()
    } else {
        format!("{}/{}", r.numer(), r.denom())
    }
}

impl fmt::Display for Gauss {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", Scalar::from_gauss(self.clone()))
    }
}

/// Dense univariate polynomial in `t`, lowest degree first, no trailing zeros.
#[derive(Clone, PartialEq, Eq, Hash, Debug, Default)]
struct UPoly(Vec<Gauss>);

impl UPoly {
    fn zero() -> Self {
        UPoly(Vec::new())
    }

    fn constant(c: Gauss) -> Self {
        let mut p = UPoly(vec![c]);
        p.trim();
        p
    }

    fn monomial(c: Gauss, k: usize) -> Self {
        if c.is_zero() {
            return UPoly::zero();
        }
        let mut v = vec![Gauss::zero(); k + 1];
        v[k] = c;
        UPoly(v)
    }

    fn trim(&mut self) {
        while self.0.last().is_some_and(|c| c.is_zero()) {
            self.0.pop();
        }
    }

    fn is_zero(&self) -> bool {
        self.0.is_empty()
    }

    fn is_one(&self) -> bool {
        self.0.len() == 1 && self.0[0].is_one()
    }

    fn degree(&self) -> usize {
        self.0.len().saturating_sub(1)
    }

    fn lead(&self) -> &Gauss {
        self.0.last().expect("lead of zero polynomial")
    }

    fn valuation(&self) -> usize {
        self.0.iter().position(|c| !c.is_zero()).unwrap_or(0)
    }

    fn is_monomial(&self) -> bool {
        !self.is_zero() && self.valuation() == self.degree()
    }

    fn add(&self, o: &UPoly) -> UPoly {
        let n = self.0.len().max(o.0.len());
        let mut v = Vec::with_capacity(n);
        for k in 0..n {
            let c = match (self.0.get(k), o.0.get(k)) {
                (Some(a), Some(b)) => a.add(b),
                (Some(a), None) => a.clone(),
                (None, Some(b)) => b.clone(),
                (None, None) => unreachable!(),
            };
            v.push(c);
        }
        let mut p = UPoly(v);
        p.trim();
        p
    }

    fn neg(&self) -> UPoly {
        UPoly(self.0.iter().map(Gauss::neg).collect())
    }

    fn mul(&self, o: &UPoly) -> UPoly {
        if self.is_zero() || o.is_zero() {
            return UPoly::zero();
        }
        let mut v = vec![Gauss::zero(); self.0.len() + o.0.len() - 1];
        for (i, a) in self.0.iter().enumerate() {
            if a.is_zero() {
                continue;
            }
            for (j, b) in o.0.iter().enumerate() {
                if b.is_zero() {
                    continue;
                }
                v[i + j] = v[i + j].add(&a.mul(b));
            }
        }
        let mut p = UPoly(v);
        p.trim();
        p
    }

    fn scale(&self, c: &Gauss) -> UPoly {
        if c.is_zero() {
            return UPoly::zero();
        }
        UPoly(self.0.iter().map(|a| a.mul(c)).collect())
    }

    fn shift_down(&self, k: usize) -> UPoly {
        UPoly(self.0[k..].to_vec())
    }

    fn divrem(&self, d: &UPoly) -> (UPoly, UPoly) {
        assert!(!d.is_zero());
        let mut r = self.clone();
        if r.0.len() < d.0.len() {
            return (UPoly::zero(), r);
        }
        let dl = d.lead().inv().unwrap();
        let mut q = vec![Gauss::zero(); r.0.len() - d.0.len() + 1];
        while !r.is_zero() && r.0.len() >= d.0.len() {
            let k = r.0.len() - d.0.len();
            let c = r.lead().mul(&dl);
            for (j, b) in d.0.iter().enumerate() {
                r.0[k + j] = r.0[k + j].sub(&c.mul(b));
            }
            q[k] = c;
            r.0.pop();
            r.trim();
        }
        let mut q = UPoly(q);
        q.trim();
        (q, r)
    }

    fn monic(&self) -> UPoly {
        let l = self.lead().inv().unwrap();
        self.scale(&l)
    }

    fn gcd(&self, o: &UPoly) -> UPoly {
        if self.is_zero() {
            return o.monic();
        }
        if o.is_zero() {
            return self.monic();
        }
        if self.is_monomial() || o.is_monomial() {
            let k = self.valuation().min(o.valuation());
            return UPoly::monomial(Gauss::one(), k);
        }
        let (mut a, mut b) = (self.clone(), o.clone());
        while !b.is_zero() {
            let (_, r) = a.divrem(&b);
            a = b;
            b = r;
        }
        a.monic()
    }

    fn eval(&self, x: &Gauss) -> Gauss {
        let mut acc = Gauss::zero();
        for c in self.0.iter().rev() {
            acc = acc.mul(x).add(c);
        }
        acc
    }

    fn sqrt(&self) -> Option<UPoly> {
        if self.is_zero() {
            return Some(UPoly::zero());
        }
        let n = self.degree();
        if n % 2 == 1 {
            return None;
        }
        let k = n / 2;
        let mut s = vec![Gauss::zero(); k + 1];
        s[k] = self.lead().sqrt()?;
        let two_lead_inv = s[k].add(&s[k]).inv()?;
        for j in (0..k).rev() {
            let mut rest = Gauss::zero();
            for a in (j + 1)..k {
                let b = k + j - a;
                if b > j && b < k {
                    rest = rest.add(&s[a].mul(&s[b]));
                }
            }
            s[j] = self.0[k + j].sub(&rest).mul(&two_lead_inv);
        }
        let mut r = UPoly(s);
        r.trim();
        if r.mul(&r) == *self {
            Some(r)
        } else {
            None
        }
    }
}

/// Element of k = Q(i)(t), kept as a reduced fraction with monic denominator.
#[derive(Clone, PartialEq, Eq, Hash, Debug)]
pub struct Scalar {
    num: UPoly,
    den: UPoly,
}

impl Default for Scalar {
    fn default() -> Self {
        Scalar::zero()
    }
}

impl Scalar {
    fn from_parts(num: UPoly, den: UPoly) -> Scalar {
        assert!(!den.is_zero());
        if num.is_zero() {
            return Scalar::zero();
        }
        if den.is_one() {
            return Scalar { num, den };
        }
        let g = num.gcd(&den);
        let (mut num, mut den) = if g.is_one() {
            (num, den)
        } else if g.is_monomial() {
            let k = g.degree();
            (num.shift_down(k), den.shift_down(k))
        } else {
            (num.divrem(&g).0, den.divrem(&g).0)
        };
        if !den.lead().is_one() {
            let l = den.lead().inv().unwrap();
            num = num.scale(&l);
            den = den.scale(&l);
        }
        Scalar { num, den }
    }

    pub fn zero() -> Scalar {
        Scalar { num: UPoly::zero(), den: UPoly::constant(Gauss::one()) }
    }

    pub fn one() -> Scalar {
        Scalar::from_i64(1)
    }

    pub fn i() -> Scalar {
        Scalar::from_gauss(Gauss::i())
    }

    pub fn t() -> Scalar {
        Scalar::t_pow(1)
    }

    pub fn from_i64(n: i64) -> Scalar {
        Scalar::from_gauss(Gauss::from_i64(n))
    }

    pub fn from_ratio(n: i64, d: i64) -> Scalar {
        Scalar::from_gauss(Gauss::new(BigRational::new(n.into(), d.into()), BigRational::zero()))
    }

    pub fn from_gauss(g: Gauss) -> Scalar {
        Scalar { num: UPoly::constant(g), den: UPoly::constant(Gauss::one()) }
    }

    /// `t^k` for any integer `k`.
    pub fn t_pow(k: i64) -> Scalar {
        if k >= 0 {
            Scalar { num: UPoly::monomial(Gauss::one(), k as usize), den: UPoly::constant(Gauss::one()) }
        } else {
            Scalar { num: UPoly::constant(Gauss::one()), den: UPoly::monomial(Gauss::one(), (-k) as usize) }
        }
    }

    pub fn is_zero(&self) -> bool {
        self.num.is_zero()
    }

    pub fn is_one(&self) -> bool {
        self.num.is_one() && self.den.is_one()
    }

    /// True when the value is a Gaussian rational (no `t` dependence).
    pub fn is_constant(&self) -> bool {
        self.den.is_one() && self.num.0.len() <= 1
    }

    pub fn as_gauss(&self) -> Option<Gauss> {
        if self.is_zero() {
            Some(Gauss::zero())
        } else if self.is_constant() {
            Some(self.num.0[0].clone())
        } else {
            None
        }
    }

    pub fn neg(&self) -> Scalar {
        Scalar { num: self.num.neg(), den: self.den.clone() }
    }

    pub fn add(&self, o: &Scalar) -> Scalar {
        if self.is_zero() {
            return o.clone();
        }
        if o.is_zero() {
            return self.clone();
        }
        if self.den == o.den {
            let num = self.num.add(&o.num);
            if self.den.is_one() {
                return Scalar { num, den: self.den.clone() };
            }
            return Scalar::from_parts(num, self.den.clone());
        }
        Scalar::from_parts(self.num.mul(&o.den).add(&o.num.mul(&self.den)), self.den.mul(&o.den))
    }

    pub fn sub(&self, o: &Scalar) -> Scalar {
        self.add(&o.neg())
    }

    pub fn mul(&self, o: &Scalar) -> Scalar {
        if self.is_zero() || o.is_zero() {
            return Scalar::zero();
        }
        if self.den.is_one() && o.den.is_one() {
            return Scalar { num: self.num.mul(&o.num), den: self.den.clone() };
        }
        Scalar::from_parts(self.num.mul(&o.num), self.den.mul(&o.den))
    }

    pub fn inv(&self) -> Result<Scalar, ScalarError> {
        if self.is_zero() {
            return Err(ScalarError::DivisionByZero);
        }
        Ok(Scalar::from_parts(self.den.clone(), self.num.clone()))
    }

    pub fn div(&self, o: &Scalar) -> Result<Scalar, ScalarError> {
        Ok(self.mul(&o.inv()?))
    }

    pub fn pow(&self, e: i64) -> Result<Scalar, ScalarError> {
        let base = if e < 0 { self.inv()? } else { self.clone() };
        let mut e = e.unsigned_abs();
        let mut acc = Scalar::one();
        let mut b = base;
        while e > 0 {
            if e & 1 == 1 {
                acc = acc.mul(&b);
            }
            e >>= 1;
            if e > 0 {
                b = b.mul(&b);
            }
        }
        Ok(acc)
    }

    /// A square root inside k, if one exists.
    pub fn try_sqrt(&self) -> Result<Scalar, ScalarError> {
        let n = self.num.sqrt().ok_or(ScalarError::NoSquareRoot)?;
        let d = self.den.sqrt().ok_or(ScalarError::NoSquareRoot)?;
        Ok(Scalar::from_parts(n, d))
    }

    pub fn evaluate(&self, t0: &Gauss) -> Result<Gauss, ScalarError> {
        let d = self.den.eval(t0);
        if d.is_zero() {
            return Err(ScalarError::PoleAtPoint);
        }
        Ok(self.num.eval(t0).div(&d).unwrap())
    }

    pub fn parse(s: &str) -> Result<Scalar, LiteralError> {
        let mut p = LitParser { src: s.as_bytes(), pos: 0 };
        let v = p.scalar()?;
        p.skip_ws();
        if p.pos != p.src.len() {
            return Err(p.err("unexpected character"));
        }
        Ok(v)
    }

    /// Total order used only to make printing and maps deterministic.
    pub fn canonical_cmp(&self, o: &Scalar) -> Ordering {
        self.to_string().cmp(&o.to_string())
    }
}

impl Add for &Scalar {
    type Output = Scalar;
    fn add(self, o: &Scalar) -> Scalar {
        Scalar::add(self, o)
    }
}

impl Sub for &Scalar {
    type Output = Scalar;
    fn sub(self, o: &Scalar) -> Scalar {
        Scalar::sub(self, o)
    }
}

impl Mul for &Scalar {
    type Output = Scalar;
    fn mul(self, o: &Scalar) -> Scalar {
        Scalar::mul(self, o)
    }
}

impl Neg for &Scalar {
    type Output = Scalar;
    fn neg(self) -> Scalar {
        Scalar::neg(self)
    }
}

impl From<i64> for Scalar {
    fn from(n: i64) -> Scalar {
        Scalar::from_i64(n)
    }
}

// ---------- printing ----------

/// Coefficient text for `c * t^k`, without sign handling of the whole term.
fn fmt_coeff_term(c: &Gauss, k: usize) -> String {
    let tpart = match k {
        0 => String::new(),
        1 => "t".to_string(),
        _ => format!("t^{}", k),
    };
    let cstr = if c.im.is_zero() {
        let a = c.re.abs();
        if a.is_one() && k > 0 {
            String::new()
        } else {
            fmt_rat(&a)
        }
    } else if c.re.is_zero() {
        let a = c.im.abs();
        if a.is_one() {
            "i".to_string()
        } else {
            format!("{}*i", fmt_rat(&a))
        }
    } else {
        let sign = if c.im.is_negative() { "-" } else { "+" };
        let a = c.im.abs();
        let ipart = if a.is_one() { "i".to_string() } else { format!("{}*i", fmt_rat(&a)) };
        format!("({}{}{})", fmt_rat(&c.re), sign, ipart)
    };
    match (cstr.is_empty(), tpart.is_empty()) {
        (true, _) => tpart,
        (false, true) => cstr,
        (false, false) => format!("{}*{}", cstr, tpart),
    }
}

/// Whether a term is printed with a leading minus.
fn coeff_negative(c: &Gauss) -> bool {
    if c.im.is_zero() {
        c.re.is_negative()
    } else if c.re.is_zero() {
        c.im.is_negative()
    } else {
        false
    }
}

fn fmt_upoly(p: &UPoly) -> String {
    if p.is_zero() {
        return "0".to_string();
    }
    let mut out = String::new();
    for k in (0..p.0.len()).rev() {
        let c = &p.0[k];
        if c.is_zero() {
            continue;
        }
        let neg = coeff_negative(c);
        let body = fmt_coeff_term(c, k);
        if out.is_empty() {
            if neg {
                out.push('-');
            }
        } else {
            out.push_str(if neg { "-" } else { "+" });
        }
        out.push_str(&body);
    }
    out
}

fn upoly_is_single_term(p: &UPoly) -> bool {
    p.0.iter().filter(|c| !c.is_zero()).count() <= 1
}

impl fmt::Display for Scalar {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let n = fmt_upoly(&self.num);
        if self.den.is_one() {
            return write!(f, "{}", n);
        }
        let n = if upoly_is_single_term(&self.num) { n } else { format!("({})", n) };
        let d = fmt_upoly(&self.den);
        let d = if upoly_is_single_term(&self.den) { d } else { format!("({})", d) };
        write!(f, "{}/{}", n, d)
    }
}

impl Scalar {
    /// True if the printed form needs parentheses when used as a factor.
    pub fn needs_parens(&self) -> bool {
        let s = self.to_string();
        let body = s.strip_prefix('-').unwrap_or(&s);
        body.contains('+') || body.contains('-') || body.contains('/')
    }

    /// True if the printed form starts with a minus sign that can be pulled out.
    pub fn is_negative_looking(&self) -> bool {
        self.to_string().starts_with('-') && !self.neg().to_string().starts_with('-')
    }
}

// ---------- parsing ----------

pub(crate) struct LitParser<'a> {
    pub(crate) src: &'a [u8],
    pub(crate) pos: usize,
}

impl<'a> LitParser<'a> {
    pub(crate) fn err(&self, msg: &str) -> LiteralError {
        LiteralError { offset: self.pos, msg: msg.to_string() }
    }

    pub(crate) fn skip_ws(&mut self) {
        while self.pos < self.src.len() && (self.src[self.pos] as char).is_whitespace() {
            self.pos += 1;
        }
    }

    pub(crate) fn peek(&mut self) -> Option<u8> {
        self.skip_ws();
        self.src.get(self.pos).copied()
    }

    pub(crate) fn integer(&mut self) -> Result<BigInt, LiteralError> {
        self.skip_ws();
        let start = self.pos;
        while self.pos < self.src.len() && self.src[self.pos].is_ascii_digit() {
            self.pos += 1;
        }
        if start == self.pos {
            return Err(self.err("expected integer"));
        }
        let s = std::str::from_utf8(&self.src[start..self.pos]).unwrap();
        Ok(s.parse::<BigInt>().unwrap())
    }

    pub(crate) fn signed_exponent(&mut self) -> Result<i64, LiteralError> {
        let mut neg = false;
        if self.peek() == Some(b'-') {
            neg = true;
            self.pos += 1;
        } else if self.peek() == Some(b'(') {
            self.pos += 1;
            let v = self.signed_exponent()?;
            if self.peek() != Some(b')') {
                return Err(self.err("expected ')'"));
            }
            self.pos += 1;
            return Ok(v);
        }
        let n = self.integer()?;
        let n = n.to_i64().ok_or_else(|| self.err("exponent out of range"))?;
        Ok(if neg { -n } else { n })
    }

    fn scalar(&mut self) -> Result<Scalar, LiteralError> {
        let mut acc = match self.peek() {
            Some(b'-') => {
                self.pos += 1;
                self.term()?.neg()
            }
            Some(b'+') => {
                self.pos += 1;
                self.term()?
            }
            _ => self.term()?,
        };
        loop {
            match self.peek() {
                Some(b'+') => {
                    self.pos += 1;
                    acc = acc.add(&self.term()?);
                }
                Some(b'-') => {
                    self.pos += 1;
                    acc = acc.sub(&self.term()?);
                }
                _ => return Ok(acc),
            }
        }
    }

    fn term(&mut self) -> Result<Scalar, LiteralError> {
        let mut acc = self.factor()?;
        loop {
            match self.peek() {
                Some(b'*') => {
                    self.pos += 1;
                    acc = acc.mul(&self.factor()?);
                }
                Some(b'/') => {
                    self.pos += 1;
                    let at = self.pos;
                    let d = self.factor()?;
                    acc = acc.div(&d).map_err(|_| LiteralError { offset: at, msg: "division by zero".into() })?;
                }
                _ => return Ok(acc),
            }
        }
    }

    fn factor(&mut self) -> Result<Scalar, LiteralError> {
        match self.peek() {
            Some(b'(') => {
                self.pos += 1;
                let v = self.scalar()?;
                if self.peek() != Some(b')') {
                    return Err(self.err("expected ')'"));
                }
                self.pos += 1;
                Ok(v)
            }
            Some(b'i') => {
                self.pos += 1;
                Ok(Scalar::i())
            }
            Some(b't') => {
                self.pos += 1;
                if self.peek() == Some(b'^') {
                    self.pos += 1;
                    let e = self.signed_exponent()?;
                    Ok(Scalar::t_pow(e))
                } else {
                    Ok(Scalar::t())
                }
            }
            Some(c) if c.is_ascii_digit() => {
                let n = self.integer()?;
                Ok(Scalar::from_gauss(Gauss::new(BigRational::from_integer(n), BigRational::zero())))
            }
            Some(_) => Err(self.err("unexpected character")),
            None => Err(self.err("unexpected end of literal")),
        }
    }
}

/// Integer helper shared with the polynomial literal parser.
pub(crate) fn scalar_from_bigint(n: BigInt) -> Scalar {
    Scalar::from_gauss(Gauss::new(BigRational::from_integer(n), BigRational::zero()))
}
