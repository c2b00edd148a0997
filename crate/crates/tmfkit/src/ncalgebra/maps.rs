//! Graded algebra maps, skew derivations, Ore extensions and normalizing
//! automorphisms.

use std::collections::{BTreeMap, HashMap};
use std::fmt;
use std::sync::{Arc, Mutex};

use super::{Algebra, AlgebraError, Generator, Mono, Poly, Terms};
use crate::linalg::{self, SparseVec};
use crate::scalars::Scalar;

/// A degree-preserving algebra map given by generator images.
pub struct AlgebraMap {
    src: Arc<Algebra>,
    dst: Arc<Algebra>,
    images: Vec<Poly>,
    cache: Mutex<HashMap<Mono, Poly>>,
}

impl Clone for AlgebraMap {
    fn clone(&self) -> Self {
        AlgebraMap {
            src: self.src.clone(),
            dst: self.dst.clone(),
            images: self.images.clone(),
            cache: Mutex::new(HashMap::new()),
        }
    }
}

impl fmt::Debug for AlgebraMap {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let parts: Vec<String> = self
            .src
            .generators()
            .iter()
            .zip(&self.images)
            .map(|(g, p)| format!("{} -> {}", g.name, p))
            .collect();
        write!(f, "{{{}}}", parts.join(", "))
    }
}

impl PartialEq for AlgebraMap {
    fn eq(&self, other: &Self) -> bool {
        self.images == other.images
    }
}

fn rule_poly(alg: &Arc<Algebra>, t: &Terms) -> Poly {
    Poly::from_terms(alg, t.clone())
}

impl AlgebraMap {
    /// Check degrees and that every defining relation maps to zero.
    pub fn new(src: &Arc<Algebra>, dst: &Arc<Algebra>, images: Vec<Poly>) -> Result<AlgebraMap, AlgebraError> {
        if images.len() != src.ngens() {
            return Err(AlgebraError::BadPresentation("wrong number of generator images".into()));
        }
        for (g, p) in src.generators().iter().zip(&images) {
            if !p.same_algebra(&Poly::zero(dst)) {
                return Err(AlgebraError::AlgebraMismatch);
            }
            if !p.is_homogeneous_of(g.degree as i64) {
                return Err(AlgebraError::BadPresentation(format!(
                    "image of {} is not homogeneous of degree {}",
                    g.name, g.degree
                )));
            }
        }
        let images = images.into_iter().map(|p| p.rehome(dst)).collect();
        let map = AlgebraMap { src: src.clone(), dst: dst.clone(), images, cache: Mutex::new(HashMap::new()) };
        for ((b, a), rhs) in src.all_rules() {
            let lhs = map.images[b].mul(&map.images[a]);
            let residual = lhs.sub(&map.apply(&rule_poly(src, &rhs)));
            if !residual.is_zero() {
                let gens = src.generators();
                return Err(AlgebraError::IllDefined {
                    relation: format!("{}*{} = {}", gens[b].name, gens[a].name, rule_poly(src, &rhs)),
                    residual: residual.to_string(),
                });
            }
        }
        Ok(map)
    }

    /// Parse generator images given as literals, keyed by generator name.
    /// Missing generators map to themselves.
    pub fn from_literals(alg: &Arc<Algebra>, images: &BTreeMap<String, String>) -> Result<AlgebraMap, AlgebraError> {
        for name in images.keys() {
            if alg.gen_index(name).is_none() {
                return Err(AlgebraError::UnknownGenerator(name.clone()));
            }
        }
        let mut out = Vec::new();
        for (i, g) in alg.generators().iter().enumerate() {
            match images.get(&g.name) {
                Some(s) => out.push(Poly::parse(alg, s)?),
                None => out.push(Poly::generator(alg, i)),
            }
        }
        AlgebraMap::new(alg, alg, out)
    }

    pub fn identity(alg: &Arc<Algebra>) -> AlgebraMap {
        let images = (0..alg.ngens()).map(|i| Poly::generator(alg, i)).collect();
        AlgebraMap { src: alg.clone(), dst: alg.clone(), images, cache: Mutex::new(HashMap::new()) }
    }

    /// `x_i -> c_i x_i`.
    pub fn diagonal(alg: &Arc<Algebra>, scalars: &[Scalar]) -> Result<AlgebraMap, AlgebraError> {
        let images = scalars.iter().enumerate().map(|(i, c)| Poly::generator(alg, i).scale(c)).collect();
        AlgebraMap::new(alg, alg, images)
    }

    pub fn source(&self) -> &Arc<Algebra> {
        &self.src
    }

    pub fn target(&self) -> &Arc<Algebra> {
        &self.dst
    }

    pub fn images(&self) -> &[Poly] {
        &self.images
    }

    pub fn image(&self, i: usize) -> &Poly {
        &self.images[i]
    }

    pub fn is_identity(&self) -> bool {
        self.images.iter().enumerate().all(|(i, p)| *p == Poly::generator(&self.src, i))
    }

    fn apply_mono(&self, m: &Mono) -> Poly {
        if let Some(p) = self.cache.lock().unwrap().get(m) {
            return p.clone();
        }
        let mut acc = Poly::one(&self.dst);
        for g in Algebra::word(m) {
            acc = acc.mul(&self.images[g]);
        }
        self.cache.lock().unwrap().insert(m.clone(), acc.clone());
        acc
    }

    pub fn apply(&self, p: &Poly) -> Poly {
        assert!(**p.algebra() == *self.src, "{}", AlgebraError::AlgebraMismatch);
        let mut acc = Poly::zero(&self.dst);
        for (m, c) in p.terms() {
            acc = acc.add(&self.apply_mono(m).scale(c));
        }
        acc
    }

    /// `x -> other(self(x))`.
    pub fn then(&self, other: &AlgebraMap) -> AlgebraMap {
        let images = self.images.iter().map(|p| other.apply(p)).collect();
        AlgebraMap { src: self.src.clone(), dst: other.dst.clone(), images, cache: Mutex::new(HashMap::new()) }
    }

    /// Coefficient matrix `M[i][j]` of `x_j` in the image of `x_i`, when all
    /// images are linear in the generators.
    pub fn linear_matrix(&self) -> Result<Vec<Vec<Scalar>>, AlgebraError> {
        let n = self.src.ngens();
        let mut m = vec![vec![Scalar::zero(); self.dst.ngens()]; n];
        for (i, p) in self.images.iter().enumerate() {
            for (mono, c) in p.terms() {
                if mono.iter().sum::<u32>() != 1 {
                    return Err(AlgebraError::NotLinear);
                }
                let j = mono.iter().position(|&e| e == 1).unwrap();
                m[i][j] = c.clone();
            }
        }
        Ok(m)
    }

    /// Inverse of an endomorphism whose images are linear in the generators.
    pub fn inverse(&self) -> Result<AlgebraMap, AlgebraError> {
        if !Arc::ptr_eq(&self.src, &self.dst) && *self.src != *self.dst {
            return Err(AlgebraError::AlgebraMismatch);
        }
        let m = self.linear_matrix()?;
        let inv = linalg::dense_inverse(&m).ok_or(AlgebraError::Singular)?;
        let alg = &self.src;
        let images = inv
            .iter()
            .map(|row| {
                let terms = row.iter().enumerate().map(|(j, c)| (alg.gen_mono(j), c.clone())).collect();
                Poly::from_terms(alg, terms)
            })
            .collect();
        AlgebraMap::new(alg, alg, images)
    }

    /// Extend an endomorphism of `A` to an extension listing `A`'s generators
    /// first, with the given images for the new generators.
    pub fn extend(&self, ext: &Arc<Algebra>, new_images: Vec<Poly>) -> Result<AlgebraMap, AlgebraError> {
        let mut images: Vec<Poly> = self.images.iter().map(|p| p.lift(ext)).collect();
        images.extend(new_images);
        AlgebraMap::new(ext, ext, images)
    }

    /// Transport an endomorphism of an extension down to `base` by
    /// restricting images (setting new generators to zero).
    pub fn restrict(&self, base: &Arc<Algebra>) -> Result<AlgebraMap, AlgebraError> {
        let images = self.images[..base.ngens()].iter().map(|p| p.restrict(base)).collect();
        AlgebraMap::new(base, base, images)
    }

    /// Same generator images read in a structurally equal algebra.
    pub fn rehome(&self, alg: &Arc<Algebra>) -> AlgebraMap {
        let images = self.images.iter().map(|p| p.rehome(alg)).collect();
        AlgebraMap { src: alg.clone(), dst: alg.clone(), images, cache: Mutex::new(HashMap::new()) }
    }
}

/// A left `tau`-derivation: `delta(xy) = delta(x) y + tau(x) delta(y)`.
#[derive(Clone, Debug)]
pub struct SkewDerivation {
    tau: AlgebraMap,
    images: Vec<Poly>,
    degree: u32,
}

impl SkewDerivation {
    /// Check degrees and that the Leibniz rule is compatible with every
    /// defining relation.
    pub fn new(tau: &AlgebraMap, images: Vec<Poly>, degree: u32) -> Result<SkewDerivation, AlgebraError> {
        let alg = tau.source().clone();
        if images.len() != alg.ngens() {
            return Err(AlgebraError::BadPresentation("wrong number of derivation images".into()));
        }
        for (g, p) in alg.generators().iter().zip(&images) {
            if !p.is_homogeneous_of((g.degree + degree) as i64) {
                return Err(AlgebraError::BadPresentation(format!("derivation image of {} has wrong degree", g.name)));
            }
        }
        let d = SkewDerivation { tau: tau.clone(), images, degree };
        for ((b, a), rhs) in alg.all_rules() {
            let lhs = d.images[b].mul(&Poly::generator(&alg, a)).add(&tau.image(b).mul(&d.images[a]));
            let residual = lhs.sub(&d.apply(&rule_poly(&alg, &rhs)));
            if !residual.is_zero() {
                let gens = alg.generators();
                return Err(AlgebraError::IllDefined {
                    relation: format!("{}*{}", gens[b].name, gens[a].name),
                    residual: residual.to_string(),
                });
            }
        }
        Ok(d)
    }

    pub fn zero(tau: &AlgebraMap, degree: u32) -> SkewDerivation {
        let alg = tau.source();
        SkewDerivation { tau: tau.clone(), images: vec![Poly::zero(alg); alg.ngens()], degree }
    }

    pub fn degree(&self) -> u32 {
        self.degree
    }

    pub fn image(&self, i: usize) -> &Poly {
        &self.images[i]
    }

    pub fn apply(&self, p: &Poly) -> Poly {
        let alg = self.tau.source();
        let mut acc = Poly::zero(alg);
        for (m, c) in p.terms() {
            let w = Algebra::word(m);
            for k in 0..w.len() {
                let mut prefix = Poly::one(alg);
                for &g in &w[..k] {
                    prefix = prefix.mul(self.tau.image(g));
                }
                let mut suffix = Poly::one(alg);
                for &g in &w[k + 1..] {
                    suffix = suffix.mul(&Poly::generator(alg, g));
                }
                acc = acc.add(&prefix.mul(&self.images[w[k]]).mul(&suffix).scale(c));
            }
        }
        acc
    }
}

/// `A[z; tau, delta]`: adds a last generator `z` of degree `degree` with
/// rules `z * x = tau(x) z + delta(x)`.
pub fn ore_extension(
    base: &Arc<Algebra>,
    name: &str,
    degree: u32,
    tau: &AlgebraMap,
    delta: Option<&SkewDerivation>,
) -> Result<Arc<Algebra>, AlgebraError> {
    if **tau.source() != **base || **tau.target() != **base {
        return Err(AlgebraError::AlgebraMismatch);
    }
    if let Some(d) = delta {
        if d.degree() != degree {
            return Err(AlgebraError::BadPresentation("derivation degree must equal the new generator's degree".into()));
        }
    }
    let n = base.ngens();
    let mut gens: Vec<Generator> = base.generators().to_vec();
    gens.push(Generator { name: name.to_string(), degree });
    let pad = |m: &Mono, z: u32| -> Mono {
        let mut mm = m.clone();
        mm.push(z);
        mm
    };
    let mut rules: Vec<((usize, usize), Terms)> = Vec::new();
    for ((b, a), rhs) in base.all_rules() {
        rules.push(((b, a), rhs.iter().map(|(m, c)| (pad(m, 0), c.clone())).collect()));
    }
    for a in 0..n {
        let mut rhs: Terms = BTreeMap::new();
        for (m, c) in tau.image(a).terms() {
            rhs.insert(pad(m, 1), c.clone());
        }
        if let Some(d) = delta {
            for (m, c) in d.image(a).terms() {
                rhs.insert(pad(m, 0), c.clone());
            }
        }
        rules.push(((n, a), rhs));
    }
    Algebra::new(gens, rules)
}

/// The automorphism `sigma` with `a f = f sigma(a)`, checking regularity of
/// `f` up to degree `2 deg f`.
pub fn normalizing_automorphism(f: &Poly) -> Result<AlgebraMap, AlgebraError> {
    let d = f.degree().ok_or_else(|| AlgebraError::NotNormal("f must be nonzero and homogeneous".into()))?;
    normalizing_automorphism_window(f, 2 * d)
}

fn to_sparse(p: &Poly, index: &mut HashMap<Mono, usize>) -> SparseVec {
    let mut v = SparseVec::new();
    for (m, c) in p.terms() {
        let next = index.len();
        let k = *index.entry(m.clone()).or_insert(next);
        v.insert(k, c.clone());
    }
    v
}

/// Same as [`normalizing_automorphism`] with an explicit regularity window.
pub fn normalizing_automorphism_window(f: &Poly, window: u32) -> Result<AlgebraMap, AlgebraError> {
    let alg = f.algebra().clone();
    f.degree().ok_or_else(|| AlgebraError::NotNormal("f must be nonzero and homogeneous".into()))?;
    let max_gen = alg.generators().iter().map(|g| g.degree).max().unwrap_or(0);
    // Left multiplication by f must be injective where unknowns live.
    for e in 0..=window.max(max_gen) {
        let monos = alg.monomials(e);
        let mut index = HashMap::new();
        let rows: Vec<SparseVec> =
            monos.iter().map(|m| to_sparse(&f.mul(&Poly::monomial(&alg, m.clone(), Scalar::one())), &mut index)).collect();
        if linalg::rank_of(&rows) < rows.len() {
            return Err(AlgebraError::Ambiguous(format!("left multiplication by f is not injective in degree {}", e)));
        }
    }
    let mut images = Vec::new();
    for (i, g) in alg.generators().iter().enumerate() {
        let monos = alg.monomials(g.degree);
        let mut index = HashMap::new();
        let target = to_sparse(&Poly::generator(&alg, i).mul(f), &mut index);
        let cols: Vec<SparseVec> =
            monos.iter().map(|m| to_sparse(&f.mul(&Poly::monomial(&alg, m.clone(), Scalar::one())), &mut index)).collect();
        let (x, unique) = linalg::solve(&cols, &target)
            .ok_or_else(|| AlgebraError::NotNormal(format!("{}*f is not in f*A", g.name)))?;
        if !unique {
            return Err(AlgebraError::Ambiguous(format!("image of {}", g.name)));
        }
        let terms = monos.iter().cloned().zip(x).collect();
        images.push(Poly::from_terms(&alg, terms));
    }
    AlgebraMap::new(&alg, &alg, images)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn gen(name: &str, degree: u32) -> Generator {
        Generator { name: name.into(), degree }
    }

    fn quantum_plane(q: Scalar) -> Arc<Algebra> {
        Algebra::new(vec![gen("x", 1), gen("y", 1)], vec![((1, 0), BTreeMap::from([(vec![1, 1], q)]))]).unwrap()
    }

    #[test]
    fn diagonal_map_and_inverse() {
        let a = quantum_plane(Scalar::from_i64(2));
        let s = AlgebraMap::diagonal(&a, &[Scalar::t(), Scalar::from_i64(3)]).unwrap();
        let inv = s.inverse().unwrap();
        assert!(s.then(&inv).is_identity());
        assert!(inv.then(&s).is_identity());
    }

    #[test]
    fn ill_defined_map_rejected() {
        let a = quantum_plane(Scalar::from_i64(2));
        let x = Poly::generator(&a, 0);
        let y = Poly::generator(&a, 1);
        // swapping x and y does not respect yx = 2xy
        assert!(matches!(AlgebraMap::new(&a, &a, vec![y, x]), Err(AlgebraError::IllDefined { .. })));
    }

    #[test]
    fn normal_generator_of_quantum_plane() {
        let a = quantum_plane(Scalar::from_i64(2));
        // y x = 2 x y, so x y = y (x/2): sigma(x) = x/2 for f = y.
        let s = normalizing_automorphism(&Poly::generator(&a, 1)).unwrap();
        assert_eq!(*s.image(0), Poly::generator(&a, 0).scale(&Scalar::from_ratio(1, 2)));
        assert_eq!(*s.image(1), Poly::generator(&a, 1));
    }

    #[test]
    fn non_normal_element() {
        let a = quantum_plane(Scalar::from_i64(2));
        let f = Poly::parse(&a, "x + y").unwrap();
        assert!(matches!(normalizing_automorphism(&f), Err(AlgebraError::NotNormal(_))));
    }

    #[test]
    fn ore_extension_of_polynomial_ring() {
        let a = Algebra::new(vec![gen("a", 1)], vec![]).unwrap();
        let id = AlgebraMap::identity(&a);
        let ext = ore_extension(&a, "z", 1, &id, None).unwrap();
        assert_eq!(ext.hilbert_series(3), vec![1, 2, 3, 4]);
        assert!(ext.rule(1, 0).is_none());
    }

    #[test]
    fn weyl_like_derivation() {
        // k[a] with z a = -a z + a^2 (tau(a) = -a, delta(a) = a^2).
        let a = Algebra::new(vec![gen("a", 1)], vec![]).unwrap();
        let tau = AlgebraMap::diagonal(&a, &[Scalar::from_i64(-1)]).unwrap();
        let delta = SkewDerivation::new(&tau, vec![Poly::parse(&a, "a^2").unwrap()], 1).unwrap();
        // delta(a^2) = a^2 a + (-a) a^2 = 0
        assert!(delta.apply(&Poly::parse(&a, "a^2").unwrap()).is_zero());
        let ext = ore_extension(&a, "z", 1, &tau, Some(&delta)).unwrap();
        let za = ext.normal_form(&[1, 0]).unwrap();
        assert_eq!(za, Poly::parse(&ext, "a^2 - a*z").unwrap());
    }
}
