//! Left Zhang twists by a graded automorphism `phi`: the product
//! `c1 * c2 = phi^h(c1) c2` for `c2` of degree `h`.

use std::collections::HashMap;
use std::sync::Arc;

use super::{Algebra, AlgebraError, AlgebraMap, Generator, Mono, Poly, Terms};
use crate::linalg::{self, SparseVec};

pub struct ZhangTwist {
    base: Arc<Algebra>,
    twisted: Arc<Algebra>,
    phi: AlgebraMap,
    phi_inv: AlgebraMap,
}

/// Build the twisted presentation, keeping the generator order. `names`
/// optionally renames the generators of the twist.
pub fn zhang_transport(
    base: &Arc<Algebra>,
    phi: &AlgebraMap,
    names: Option<&[&str]>,
) -> Result<ZhangTwist, AlgebraError> {
    let phi_inv = phi.inverse()?;
    let n = base.ngens();
    let gens: Vec<Generator> = base
        .generators()
        .iter()
        .enumerate()
        .map(|(i, g)| Generator { name: names.map_or(g.name.clone(), |v| v[i].to_string()), degree: g.degree })
        .collect();
    let z = ZhangTwist { base: base.clone(), twisted: base.clone(), phi: phi.clone(), phi_inv };
    let mut rules = Vec::new();
    for b in 0..n {
        for a in 0..b {
            let deg_a = base.generators()[a].degree as i64;
            let prod = z.phi_pow(deg_a).apply(&Poly::generator(base, b)).mul(&Poly::generator(base, a));
            let e = base.generators()[a].degree + base.generators()[b].degree;
            let monos = base.monomials(e);
            let mut index = HashMap::new();
            let cols: Vec<SparseVec> = monos.iter().map(|m| sparse(&z.theta_mono(m), &mut index)).collect();
            let target = sparse(&prod, &mut index);
            let (x, unique) = linalg::solve(&cols, &target).ok_or(AlgebraError::Singular)?;
            if !unique {
                return Err(AlgebraError::Singular);
            }
            let rhs: Terms = monos.iter().cloned().zip(x).filter(|(_, c)| !c.is_zero()).collect();
            rules.push(((b, a), rhs));
        }
    }
    let twisted = Algebra::new(gens, rules)?;
    Ok(ZhangTwist { twisted, ..z })
}

fn sparse(p: &Poly, index: &mut HashMap<Mono, usize>) -> SparseVec {
    p.terms()
        .iter()
        .map(|(m, c)| {
            let next = index.len();
            (*index.entry(m.clone()).or_insert(next), c.clone())
        })
        .collect()
}

impl ZhangTwist {
    pub fn base(&self) -> &Arc<Algebra> {
        &self.base
    }

    pub fn twisted(&self) -> &Arc<Algebra> {
        &self.twisted
    }

    /// `phi^k` for any integer `k`.
    pub fn phi_pow(&self, k: i64) -> AlgebraMap {
        let step = if k >= 0 { &self.phi } else { &self.phi_inv };
        let mut acc = AlgebraMap::identity(&self.base);
        for _ in 0..k.unsigned_abs() {
            acc = acc.then(step);
        }
        acc
    }

    /// The base element equal to a twisted normal monomial, nesting to the
    /// right: `x * m' = phi^(deg m')(x) m'`.
    fn theta_mono(&self, m: &Mono) -> Poly {
        let word = Algebra::word(m);
        let mut acc = Poly::one(&self.base);
        let mut deg = 0i64;
        for &g in word.iter().rev() {
            let x = self.phi_pow(deg).apply(&Poly::generator(&self.base, g));
            acc = x.mul(&acc);
            deg += self.base.generators()[g].degree as i64;
        }
        acc
    }

    /// Twisted element to the equal base element.
    pub fn theta(&self, p: &Poly) -> Poly {
        let mut acc = Poly::zero(&self.base);
        for (m, c) in p.terms() {
            acc = acc.add(&self.theta_mono(m).scale(c));
        }
        acc
    }

    /// A twisted matrix entry `e` whose column generator sits in degree `h`
    /// becomes the base entry `phi^h(theta(e))`.
    pub fn transport_entry(&self, e: &Poly, h: i64) -> Poly {
        self.phi_pow(h).apply(&self.theta(e))
    }
}
