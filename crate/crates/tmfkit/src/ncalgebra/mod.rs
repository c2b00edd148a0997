//! Connected graded algebras given by PBW-shaped rewrite rules.
//!
//! Generators are totally ordered by their listing order. A rule rewrites
//! `x_b * x_a` (with `b > a`) into a combination of normal-ordered monomials
//! `x_1^e1 ... x_k^ek`; pairs without a rule commute. Elements are stored as
//! maps from exponent vectors to scalars.

mod literal;
mod maps;
mod zhang;

use std::collections::{BTreeMap, HashMap};
use std::fmt;
use std::sync::{Arc, RwLock};

use thiserror::Error;

use crate::scalars::{LiteralError, Scalar};

pub use literal::{format_poly, parse_poly};
pub use maps::{normalizing_automorphism, normalizing_automorphism_window, ore_extension, AlgebraMap, SkewDerivation};
pub use zhang::{zhang_transport, ZhangTwist};

/// Exponent vector of a normal-ordered monomial.
pub type Mono = Vec<u32>;
pub type Terms = BTreeMap<Mono, Scalar>;

/// Nested rewrite calls allowed before giving up on termination.
const MAX_REWRITE_DEPTH: usize = 4096;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum AlgebraError {
    #[error("elements belong to different algebras")]
    AlgebraMismatch,
    #[error("bad presentation: {0}")]
    BadPresentation(String),
    #[error("rule {0} is not degree-homogeneous")]
    NotHomogeneous(String),
    #[error("rewriting did not terminate")]
    RewriteLoop,
    #[error("confluence fails on {triple}: the two reductions differ by {residual}")]
    ConfluenceFailure { triple: String, residual: String },
    #[error("map is not well-defined: relation {relation} maps to {residual}")]
    IllDefined { relation: String, residual: String },
    #[error("map is not linear in the generators")]
    NotLinear,
    #[error("map is singular")]
    Singular,
    #[error("element is not normal: {0}")]
    NotNormal(String),
    #[error("normalizing automorphism is not unique: {0}")]
    Ambiguous(String),
    #[error("unknown generator {0}")]
    UnknownGenerator(String),
    #[error("bad literal: {0}")]
    Literal(#[from] LiteralError),
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Generator {
    pub name: String,
    pub degree: u32,
}

pub struct Algebra {
    gens: Vec<Generator>,
    /// `rules[b][a]` for `a < b`; `None` means the pair commutes.
    rules: Vec<Vec<Option<Terms>>>,
    cache: RwLock<HashMap<(Mono, usize), Arc<Terms>>>,
    mono_cache: RwLock<HashMap<u32, Arc<Vec<Mono>>>>,
}

impl fmt::Debug for Algebra {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let names: Vec<String> = self.gens.iter().map(|g| format!("{}:{}", g.name, g.degree)).collect();
        write!(f, "Algebra[{}]", names.join(", "))
    }
}

impl PartialEq for Algebra {
    fn eq(&self, other: &Self) -> bool {
        std::ptr::eq(self, other) || (self.gens == other.gens && self.rules == other.rules)
    }
}

fn valid_name(s: &str) -> bool {
    let mut chars = s.chars();
    match chars.next() {
        Some(c) if c.is_ascii_alphabetic() || c == '_' => {}
        _ => return false,
    }
    chars.all(|c| c.is_ascii_alphanumeric() || c == '_') && s != "i" && s != "t"
}

fn add_into(acc: &mut Terms, m: &Mono, c: &Scalar) {
    if c.is_zero() {
        return;
    }
    match acc.get_mut(m) {
        Some(v) => {
            let s = v.add(c);
            if s.is_zero() {
                acc.remove(m);
            } else {
                *v = s;
            }
        }
        None => {
            acc.insert(m.clone(), c.clone());
        }
    }
}

impl Algebra {
    /// Build and check a presentation: names, degrees, homogeneity, and the
    /// confluence diamond on every generator triple.
    pub fn new(gens: Vec<Generator>, rules: Vec<((usize, usize), Terms)>) -> Result<Arc<Algebra>, AlgebraError> {
        let n = gens.len();
        for (k, g) in gens.iter().enumerate() {
            if !valid_name(&g.name) {
                return Err(AlgebraError::BadPresentation(format!("invalid generator name '{}'", g.name)));
            }
            if g.degree == 0 {
                return Err(AlgebraError::BadPresentation(format!("generator {} has degree 0", g.name)));
            }
            if gens[..k].iter().any(|h| h.name == g.name) {
                return Err(AlgebraError::BadPresentation(format!("duplicate generator {}", g.name)));
            }
        }
        let mut table: Vec<Vec<Option<Terms>>> = (0..n).map(|b| vec![None; b]).collect();
        for ((b, a), rhs) in rules {
            if b >= n || a >= b {
                return Err(AlgebraError::BadPresentation(format!("rule lhs ({}, {}) must have b > a", b, a)));
            }
            if table[b][a].is_some() {
                return Err(AlgebraError::BadPresentation(format!(
                    "duplicate rule for {}*{}",
                    gens[b].name, gens[a].name
                )));
            }
            let want = gens[b].degree + gens[a].degree;
            let mut clean = Terms::new();
            for (m, c) in &rhs {
                if m.len() != n {
                    return Err(AlgebraError::BadPresentation(format!(
                        "monomial {:?} in rule for {}*{} has wrong length",
                        m, gens[b].name, gens[a].name
                    )));
                }
                let deg: u32 = m.iter().zip(&gens).map(|(e, g)| e * g.degree).sum();
                if deg != want && !c.is_zero() {
                    return Err(AlgebraError::NotHomogeneous(format!("{}*{}", gens[b].name, gens[a].name)));
                }
                add_into(&mut clean, m, c);
            }
            let mut commuting = vec![0; n];
            commuting[a] += 1;
            commuting[b] += 1;
            if clean.len() == 1 && clean.get(&commuting).is_some_and(|c| c.is_one()) {
                continue;
            }
            table[b][a] = Some(clean);
        }
        let alg = Arc::new(Algebra {
            gens,
            rules: table,
            cache: RwLock::new(HashMap::new()),
            mono_cache: RwLock::new(HashMap::new()),
        });
        alg.check_confluence()?;
        Ok(alg)
    }

    pub fn generators(&self) -> &[Generator] {
        &self.gens
    }

    pub fn ngens(&self) -> usize {
        self.gens.len()
    }

    pub fn gen_index(&self, name: &str) -> Option<usize> {
        self.gens.iter().position(|g| g.name == name)
    }

    /// The rule for `x_b * x_a`, `None` when the pair commutes.
    pub fn rule(&self, b: usize, a: usize) -> Option<&Terms> {
        self.rules[b][a].as_ref()
    }

    pub fn is_commutative(&self) -> bool {
        (0..self.ngens()).all(|b| (0..b).all(|a| self.rules[b][a].is_none()))
    }

    /// Every rule, including commuting pairs written out explicitly.
    pub fn all_rules(&self) -> Vec<((usize, usize), Terms)> {
        let mut out = Vec::new();
        for b in 0..self.ngens() {
            for a in 0..b {
                out.push(((b, a), self.rule_terms(b, a)));
            }
        }
        out
    }

    fn rule_terms(&self, b: usize, a: usize) -> Terms {
        match &self.rules[b][a] {
            Some(t) => t.clone(),
            None => {
                let mut m = vec![0; self.ngens()];
                m[a] += 1;
                m[b] += 1;
                BTreeMap::from([(m, Scalar::one())])
            }
        }
    }

    pub fn mono_degree(&self, m: &Mono) -> u32 {
        m.iter().zip(&self.gens).map(|(e, g)| e * g.degree).sum()
    }

    pub fn unit_mono(&self) -> Mono {
        vec![0; self.ngens()]
    }

    pub fn gen_mono(&self, i: usize) -> Mono {
        let mut m = self.unit_mono();
        m[i] = 1;
        m
    }

    /// The generator word of a normal monomial, in generator order.
    pub fn word(m: &Mono) -> Vec<usize> {
        let mut w = Vec::new();
        for (i, e) in m.iter().enumerate() {
            for _ in 0..*e {
                w.push(i);
            }
        }
        w
    }

    fn mul_mono_gen(&self, m: &Mono, x: usize, depth: usize) -> Result<Arc<Terms>, AlgebraError> {
        if depth > MAX_REWRITE_DEPTH {
            return Err(AlgebraError::RewriteLoop);
        }
        let key = (m.clone(), x);
        if let Some(t) = self.cache.read().unwrap().get(&key) {
            return Ok(t.clone());
        }
        let last = m.iter().rposition(|&e| e > 0);
        let out = match last {
            Some(y) if y > x => {
                let mut rest = m.clone();
                rest[y] -= 1;
                let mut acc = Terms::new();
                for (n, c) in self.rule_terms(y, x) {
                    let prod = self.mul_mono_mono(&rest, &n, depth + 1)?;
                    for (k, v) in prod.iter() {
                        add_into(&mut acc, k, &v.mul(&c));
                    }
                }
                acc
            }
            _ => {
                let mut mm = m.clone();
                mm[x] += 1;
                BTreeMap::from([(mm, Scalar::one())])
            }
        };
        let out = Arc::new(out);
        self.cache.write().unwrap().insert(key, out.clone());
        Ok(out)
    }

    fn mul_mono_mono(&self, a: &Mono, b: &Mono, depth: usize) -> Result<Terms, AlgebraError> {
        let mut cur: Terms = BTreeMap::from([(a.clone(), Scalar::one())]);
        for g in Self::word(b) {
            let mut next = Terms::new();
            for (m, c) in &cur {
                let p = self.mul_mono_gen(m, g, depth)?;
                for (k, v) in p.iter() {
                    add_into(&mut next, k, &v.mul(c));
                }
            }
            cur = next;
        }
        Ok(cur)
    }

    /// Normal form of a word of generator indices.
    pub fn normal_form(self: &Arc<Self>, word: &[usize]) -> Result<Poly, AlgebraError> {
        let mut cur: Terms = BTreeMap::from([(self.unit_mono(), Scalar::one())]);
        for &g in word {
            if g >= self.ngens() {
                return Err(AlgebraError::UnknownGenerator(format!("index {}", g)));
            }
            let mut next = Terms::new();
            for (m, c) in &cur {
                let p = self.mul_mono_gen(m, g, 0)?;
                for (k, v) in p.iter() {
                    add_into(&mut next, k, &v.mul(c));
                }
            }
            cur = next;
        }
        Ok(Poly::from_terms(self, cur))
    }

    fn mul_terms(&self, a: &Terms, b: &Terms) -> Result<Terms, AlgebraError> {
        let mut acc = Terms::new();
        for (mb, cb) in b {
            for (ma, ca) in a {
                let p = self.mul_mono_mono(ma, mb, 0)?;
                let c = ca.mul(cb);
                for (k, v) in p {
                    add_into(&mut acc, &k, &v.mul(&c));
                }
            }
        }
        Ok(acc)
    }

    /// Diamond test on every triple `c > b > a`.
    pub fn check_confluence(self: &Arc<Self>) -> Result<(), AlgebraError> {
        let n = self.ngens();
        for c in 0..n {
            for b in 0..c {
                for a in 0..b {
                    let xc = Poly::generator(self, c);
                    let xb = Poly::generator(self, b);
                    let xa = Poly::generator(self, a);
                    let left = xc.try_mul(&xb)?.try_mul(&xa)?;
                    let right = xc.try_mul(&xb.try_mul(&xa)?)?;
                    let diff = left.sub(&right);
                    if !diff.is_zero() {
                        return Err(AlgebraError::ConfluenceFailure {
                            triple: format!("{}*{}*{}", self.gens[c].name, self.gens[b].name, self.gens[a].name),
                            residual: diff.to_string(),
                        });
                    }
                }
            }
        }
        Ok(())
    }

    /// All normal monomials of degree `e`.
    pub fn monomials(&self, e: u32) -> Arc<Vec<Mono>> {
        if let Some(v) = self.mono_cache.read().unwrap().get(&e) {
            return v.clone();
        }
        let mut out = Vec::new();
        let mut cur = vec![0u32; self.ngens()];
        self.enumerate(0, e, &mut cur, &mut out);
        let out = Arc::new(out);
        self.mono_cache.write().unwrap().insert(e, out.clone());
        out
    }

    fn enumerate(&self, i: usize, left: u32, cur: &mut Mono, out: &mut Vec<Mono>) {
        if i == self.ngens() {
            if left == 0 {
                out.push(cur.clone());
            }
            return;
        }
        let d = self.gens[i].degree;
        let mut e = 0;
        while e * d <= left {
            cur[i] = e;
            self.enumerate(i + 1, left - e * d, cur, out);
            e += 1;
        }
        cur[i] = 0;
    }

    /// Dimensions of the graded pieces in degrees `0..=max_degree`.
    pub fn hilbert_series(&self, max_degree: u32) -> Vec<u64> {
        let top = max_degree as usize;
        let mut dims = vec![0u64; top + 1];
        dims[0] = 1;
        for g in &self.gens {
            let d = g.degree as usize;
            for e in d..=top {
                dims[e] += dims[e - d];
            }
        }
        dims
    }

    /// True when `other` lists the same generators first and contains all of
    /// this algebra's rules, so exponent vectors can be padded.
    pub fn is_prefix_of(&self, other: &Algebra) -> bool {
        let n = self.ngens();
        if other.ngens() < n || other.gens[..n] != self.gens[..] {
            return false;
        }
        let pad = |t: &Terms| -> Terms {
            t.iter()
                .map(|(m, c)| {
                    let mut mm = m.clone();
                    mm.resize(other.ngens(), 0);
                    (mm, c.clone())
                })
                .collect()
        };
        (0..n).all(|b| (0..b).all(|a| pad(&self.rule_terms(b, a)) == other.rule_terms(b, a)))
    }
}

/// An element of an algebra.
#[derive(Clone)]
pub struct Poly {
    alg: Arc<Algebra>,
    terms: Terms,
}

impl fmt::Debug for Poly {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self)
    }
}

impl fmt::Display for Poly {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", format_poly(self))
    }
}

impl PartialEq for Poly {
    fn eq(&self, other: &Self) -> bool {
        self.terms == other.terms && (Arc::ptr_eq(&self.alg, &other.alg) || *self.alg == *other.alg)
    }
}

impl Poly {
    pub fn zero(alg: &Arc<Algebra>) -> Poly {
        Poly { alg: alg.clone(), terms: Terms::new() }
    }

    pub fn one(alg: &Arc<Algebra>) -> Poly {
        Poly::constant(alg, Scalar::one())
    }

    pub fn constant(alg: &Arc<Algebra>, c: Scalar) -> Poly {
        Poly::monomial(alg, alg.unit_mono(), c)
    }

    pub fn generator(alg: &Arc<Algebra>, i: usize) -> Poly {
        Poly::monomial(alg, alg.gen_mono(i), Scalar::one())
    }

    pub fn monomial(alg: &Arc<Algebra>, m: Mono, c: Scalar) -> Poly {
        let mut terms = Terms::new();
        if !c.is_zero() {
            terms.insert(m, c);
        }
        Poly { alg: alg.clone(), terms }
    }

    pub fn from_terms(alg: &Arc<Algebra>, terms: Terms) -> Poly {
        let terms = terms.into_iter().filter(|(_, c)| !c.is_zero()).collect();
        Poly { alg: alg.clone(), terms }
    }

    /// Parse a polynomial literal over `alg`.
    pub fn parse(alg: &Arc<Algebra>, s: &str) -> Result<Poly, LiteralError> {
        parse_poly(alg, s)
    }

    pub fn algebra(&self) -> &Arc<Algebra> {
        &self.alg
    }

    pub fn terms(&self) -> &Terms {
        &self.terms
    }

    pub fn coeff(&self, m: &Mono) -> Scalar {
        self.terms.get(m).cloned().unwrap_or_default()
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn same_algebra(&self, other: &Poly) -> bool {
        Arc::ptr_eq(&self.alg, &other.alg) || *self.alg == *other.alg
    }

    fn assert_same(&self, other: &Poly) {
        assert!(self.same_algebra(other), "{}", AlgebraError::AlgebraMismatch);
    }

    pub fn add(&self, other: &Poly) -> Poly {
        self.assert_same(other);
        let mut t = self.terms.clone();
        for (m, c) in &other.terms {
            add_into(&mut t, m, c);
        }
        Poly { alg: self.alg.clone(), terms: t }
    }

    pub fn sub(&self, other: &Poly) -> Poly {
        self.add(&other.neg())
    }

    pub fn neg(&self) -> Poly {
        Poly { alg: self.alg.clone(), terms: self.terms.iter().map(|(m, c)| (m.clone(), c.neg())).collect() }
    }

    pub fn scale(&self, c: &Scalar) -> Poly {
        if c.is_zero() {
            return Poly::zero(&self.alg);
        }
        Poly { alg: self.alg.clone(), terms: self.terms.iter().map(|(m, v)| (m.clone(), v.mul(c))).collect() }
    }

    pub fn try_mul(&self, other: &Poly) -> Result<Poly, AlgebraError> {
        if !self.same_algebra(other) {
            return Err(AlgebraError::AlgebraMismatch);
        }
        let t = self.alg.mul_terms(&self.terms, &other.terms)?;
        Ok(Poly { alg: self.alg.clone(), terms: t })
    }

    /// Product in the algebra. Panics on mismatched algebras; presentations
    /// are checked for confluence at construction.
    pub fn mul(&self, other: &Poly) -> Poly {
        match self.try_mul(other) {
            Ok(p) => p,
            Err(e) => panic!("{}", e),
        }
    }

    pub fn pow(&self, e: u32) -> Poly {
        let mut acc = Poly::one(&self.alg);
        for _ in 0..e {
            acc = acc.mul(self);
        }
        acc
    }

    /// Degree if nonzero and homogeneous.
    pub fn degree(&self) -> Option<u32> {
        let mut it = self.terms.keys().map(|m| self.alg.mono_degree(m));
        let d = it.next()?;
        if it.all(|e| e == d) {
            Some(d)
        } else {
            None
        }
    }

    /// Zero, or homogeneous of degree `d`.
    pub fn is_homogeneous_of(&self, d: i64) -> bool {
        self.terms.keys().all(|m| self.alg.mono_degree(m) as i64 == d)
    }

    /// The scalar if this element has degree 0 (or is zero).
    pub fn as_scalar(&self) -> Option<Scalar> {
        match self.terms.len() {
            0 => Some(Scalar::zero()),
            1 => {
                let (m, c) = self.terms.iter().next().unwrap();
                m.iter().all(|&e| e == 0).then(|| c.clone())
            }
            _ => None,
        }
    }

    /// Degree-0 coefficient.
    pub fn constant_term(&self) -> Scalar {
        self.coeff(&self.alg.unit_mono())
    }

    /// Apply a function to every coefficient.
    pub fn map_coeffs(&self, f: impl Fn(&Scalar) -> Scalar) -> Poly {
        let terms = self.terms.iter().map(|(m, c)| (m.clone(), f(c))).filter(|(_, c)| !c.is_zero()).collect();
        Poly { alg: self.alg.clone(), terms }
    }

    /// Regard this element inside an extension listing the same generators
    /// first.
    pub fn lift(&self, ext: &Arc<Algebra>) -> Poly {
        debug_assert!(self.alg.is_prefix_of(ext));
        let n = ext.ngens();
        let terms = self
            .terms
            .iter()
            .map(|(m, c)| {
                let mut mm = m.clone();
                mm.resize(n, 0);
                (mm, c.clone())
            })
            .collect();
        Poly { alg: ext.clone(), terms }
    }

    /// Set every generator not in `base` to zero and read the result in
    /// `base`.
    pub fn restrict(&self, base: &Arc<Algebra>) -> Poly {
        let n = base.ngens();
        let terms = self
            .terms
            .iter()
            .filter(|(m, _)| m[n..].iter().all(|&e| e == 0))
            .map(|(m, c)| (m[..n].to_vec(), c.clone()))
            .collect();
        Poly { alg: base.clone(), terms }
    }

    /// Same coefficients, read in a structurally equal algebra.
    pub fn rehome(&self, alg: &Arc<Algebra>) -> Poly {
        debug_assert!(*self.alg == **alg);
        Poly { alg: alg.clone(), terms: self.terms.clone() }
    }
}
