//! Twisted matrix factorizations `(phi: F -> G, psi: ^tw G -> F)` of a
//! normal element `f`.
//!
//! With the row convention of [`crate::gradedmod`] the defining identities
//! read `psi * phi = f I` and `sigma^-1(phi) * psi = f I`.

use std::sync::Arc;

use thiserror::Error;

use crate::gradedmod::{
    self, image_rank, module_dims_range, solve_intertwiners_with, GradedError, GradedMatrix, Verdict,
};
use crate::linalg;
use crate::ncalgebra::{Algebra, AlgebraError, AlgebraMap, Poly};
use crate::scalars::{Scalar, ScalarError};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum TmfError {
    #[error(transparent)]
    Graded(#[from] GradedError),
    #[error(transparent)]
    Algebra(#[from] AlgebraError),
    #[error(transparent)]
    Scalar(#[from] ScalarError),
    #[error("context has no square root of sigma")]
    NoSquareRoot,
    #[error("hypothesis violated: {0}")]
    HypothesisViolation(String),
    #[error("endomorphism has more than one eigenvalue")]
    MultiEigenvalue,
    #[error("input is not of the form (phi0, ^tau phi0)")]
    NotSymmetricForm,
    #[error("cokernel dimension oracles disagree in degree {degree}: {formula} vs {brute}")]
    OracleMismatch { degree: i64, formula: i64, brute: i64 },
    #[error("{0}")]
    Invalid(String),
}

/// Square root of the normalizing automorphism.
#[derive(Clone, Debug)]
pub struct SquareRoot {
    pub tau: AlgebraMap,
    pub tau_inv: AlgebraMap,
    pub ell: i64,
}

/// A normal element with its normalizing automorphism and optional square
/// root.
#[derive(Clone, Debug)]
pub struct NormalContext {
    pub algebra: Arc<Algebra>,
    pub f: Poly,
    pub d: i64,
    pub sigma: AlgebraMap,
    pub sigma_inv: AlgebraMap,
    pub root: Option<SquareRoot>,
}

impl NormalContext {
    /// Check `a f = f sigma(a)` on generators, and for `tau`: `tau^2 =
    /// sigma`, `tau(f) = f`, `d` even.
    pub fn new(f: Poly, sigma: AlgebraMap, tau: Option<AlgebraMap>) -> Result<Arc<NormalContext>, TmfError> {
        let alg = f.algebra().clone();
        let d = f
            .degree()
            .ok_or_else(|| TmfError::HypothesisViolation("f must be nonzero and homogeneous".into()))?
            as i64;
        if d == 0 {
            return Err(TmfError::HypothesisViolation("f must have positive degree".into()));
        }
        for (i, g) in alg.generators().iter().enumerate() {
            let a = Poly::generator(&alg, i);
            if a.mul(&f) != f.mul(sigma.image(i)) {
                return Err(TmfError::HypothesisViolation(format!("{} f != f sigma({})", g.name, g.name)));
            }
        }
        let sigma_inv = sigma.inverse()?;
        let root = match tau {
            None => None,
            Some(tau) => {
                if d % 2 != 0 {
                    return Err(TmfError::HypothesisViolation("deg f is odd".into()));
                }
                if tau.then(&tau) != sigma {
                    return Err(TmfError::HypothesisViolation("tau^2 != sigma".into()));
                }
                if tau.apply(&f) != f {
                    return Err(TmfError::HypothesisViolation("tau(f) != f".into()));
                }
                let tau_inv = tau.inverse()?;
                Some(SquareRoot { tau, tau_inv, ell: d / 2 })
            }
        };
        Ok(Arc::new(NormalContext { algebra: alg, f, d, sigma, sigma_inv, root }))
    }

    pub fn root(&self) -> Result<&SquareRoot, TmfError> {
        self.root.as_ref().ok_or(TmfError::NoSquareRoot)
    }

    /// `f I` as a map `^tw M -> M`.
    pub fn lambda_f(&self, shifts: &[i64]) -> GradedMatrix {
        GradedMatrix::lambda(&self.algebra, shifts, &self.f)
    }

    /// Matrix of the twisted map `^tw phi`.
    pub fn tw(&self, m: &GradedMatrix) -> GradedMatrix {
        m.map_entries(&self.sigma_inv, self.d)
    }

    /// Matrix of `^tau phi`: entries `tau^-1(.)`, shifts raised by `ell`.
    pub fn tau_twist(&self, m: &GradedMatrix) -> Result<GradedMatrix, TmfError> {
        let r = self.root()?;
        Ok(m.map_entries(&r.tau_inv, r.ell))
    }

    /// Matrix of `^(tau^-1) phi`: entries `tau(.)`, shifts lowered by `ell`.
    pub fn tau_untwist(&self, m: &GradedMatrix) -> Result<GradedMatrix, TmfError> {
        let r = self.root()?;
        Ok(m.map_entries(&r.tau, -r.ell))
    }
}

#[derive(Clone, Debug)]
pub struct Tmf {
    pub ctx: Arc<NormalContext>,
    pub phi: GradedMatrix,
    pub psi: GradedMatrix,
}

impl PartialEq for Tmf {
    fn eq(&self, other: &Self) -> bool {
        self.phi == other.phi && self.psi == other.psi
    }
}

#[derive(Clone, Debug)]
pub struct VerifyReport {
    pub pass: bool,
    pub shapes_ok: bool,
    pub homogeneous: bool,
    /// `psi * phi - f I`, when shapes allow.
    pub residual1: Option<GradedMatrix>,
    /// `sigma^-1(phi) * psi - f I`, when shapes allow.
    pub residual2: Option<GradedMatrix>,
    pub messages: Vec<String>,
}

impl VerifyReport {
    /// Nonzero residual entries as `(identity, row, col, residual)`.
    pub fn nonzero_residuals(&self) -> Vec<(u8, usize, usize, Poly)> {
        let mut out = Vec::new();
        for (k, r) in [(1u8, &self.residual1), (2, &self.residual2)] {
            if let Some(m) = r {
                for (i, row) in m.entries().iter().enumerate() {
                    for (j, p) in row.iter().enumerate() {
                        if !p.is_zero() {
                            out.push((k, i, j, p.clone()));
                        }
                    }
                }
            }
        }
        out
    }
}

fn check_homogeneous(m: &GradedMatrix) -> bool {
    m.entries().iter().enumerate().all(|(i, r)| {
        r.iter().enumerate().all(|(j, p)| p.is_homogeneous_of(m.source()[i] - m.target()[j]))
    })
}

/// Whether a trivial summand split off by [`reduce`] came from `phi` or from
/// `psi`.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct TrivialCounts {
    pub unit_first: usize,
    pub f_first: usize,
}

impl TrivialCounts {
    pub fn total(&self) -> usize {
        self.unit_first + self.f_first
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum TrivialKind {
    UnitFirst,
    FFirst,
}

impl Tmf {
    pub fn new(ctx: &Arc<NormalContext>, phi: GradedMatrix, psi: GradedMatrix) -> Tmf {
        let phi = phi.rehome(&ctx.algebra);
        let psi = psi.rehome(&ctx.algebra);
        Tmf { ctx: ctx.clone(), phi, psi }
    }

    pub fn rank(&self) -> usize {
        self.phi.nrows()
    }

    /// Shifts of `F` and `G`.
    pub fn f_shifts(&self) -> &[i64] {
        self.phi.source()
    }

    pub fn g_shifts(&self) -> &[i64] {
        self.phi.target()
    }

    pub fn verify(&self) -> VerifyReport {
        let ctx = &self.ctx;
        let mut messages = Vec::new();
        let homogeneous = check_homogeneous(&self.phi) && check_homogeneous(&self.psi);
        if !homogeneous {
            messages.push("an entry is not homogeneous of the degree its shifts force".into());
        }
        let tw_g: Vec<i64> = self.phi.target().iter().map(|s| s + ctx.d).collect();
        let shapes_ok = self.psi.source() == tw_g.as_slice() && self.psi.target() == self.phi.source();
        if !shapes_ok {
            messages.push(format!(
                "psi must map {:?} -> {:?}, found {:?} -> {:?}",
                tw_g,
                self.phi.source(),
                self.psi.source(),
                self.psi.target()
            ));
        }
        let (mut residual1, mut residual2) = (None, None);
        if shapes_ok {
            let r1 = self.psi.then(&self.phi).sub(&ctx.lambda_f(self.phi.target())).unwrap();
            let r2 = ctx.tw(&self.phi).then(&self.psi).sub(&ctx.lambda_f(self.phi.source())).unwrap();
            if !r1.is_zero() {
                messages.push("psi * phi != f I".into());
            }
            if !r2.is_zero() {
                messages.push("sigma^-1(phi) * psi != f I".into());
            }
            residual1 = Some(r1);
            residual2 = Some(r2);
        }
        let pass = homogeneous
            && shapes_ok
            && residual1.as_ref().is_some_and(GradedMatrix::is_zero)
            && residual2.as_ref().is_some_and(GradedMatrix::is_zero);
        VerifyReport { pass, shapes_ok, homogeneous, residual1, residual2, messages }
    }

    /// Diagonal of `psi * phi`, to catch unit multiples of `f`.
    pub fn infer_f(&self) -> Vec<Poly> {
        if self.psi.target() != self.phi.source() {
            return Vec::new();
        }
        let p = self.psi.then(&self.phi);
        (0..p.nrows().min(p.ncols())).map(|i| p.entry(i, i).clone()).collect()
    }

    /// `(1_F, f)` or `(f, 1_{^tw F})`.
    pub fn trivial(ctx: &Arc<NormalContext>, shifts: &[i64], kind: TrivialKind) -> Tmf {
        let alg = &ctx.algebra;
        match kind {
            TrivialKind::UnitFirst => {
                Tmf::new(ctx, GradedMatrix::identity(alg, shifts.to_vec()), ctx.lambda_f(shifts))
            }
            TrivialKind::FFirst => {
                let tw: Vec<i64> = shifts.iter().map(|s| s + ctx.d).collect();
                Tmf::new(ctx, ctx.lambda_f(shifts), GradedMatrix::identity(alg, tw))
            }
        }
    }

    pub fn irrelevant(ctx: &Arc<NormalContext>) -> Tmf {
        Tmf::trivial(ctx, &[], TrivialKind::UnitFirst)
    }

    pub fn direct_sum(&self, other: &Tmf) -> Result<Tmf, TmfError> {
        Ok(Tmf {
            ctx: self.ctx.clone(),
            phi: self.phi.direct_sum(&other.phi)?,
            psi: self.psi.direct_sum(&other.psi)?,
        })
    }

    /// `(phi[n], psi[n])`.
    pub fn shift(&self, n: i64) -> Tmf {
        Tmf { ctx: self.ctx.clone(), phi: self.phi.shift(n), psi: self.psi.shift(n) }
    }

    /// `(psi, ^tw phi)`.
    pub fn tw_functor(&self) -> Tmf {
        Tmf { ctx: self.ctx.clone(), phi: self.psi.clone(), psi: self.ctx.tw(&self.phi) }
    }

    /// Inverse of [`Tmf::tw_functor`].
    pub fn tw_inverse(&self) -> Tmf {
        Tmf { ctx: self.ctx.clone(), phi: self.psi.map_entries(&self.ctx.sigma, -self.ctx.d), psi: self.phi.clone() }
    }

    /// `(^(tau^-1) psi, ^tau phi)`.
    pub fn t_functor(&self) -> Result<Tmf, TmfError> {
        Ok(Tmf { ctx: self.ctx.clone(), phi: self.ctx.tau_untwist(&self.psi)?, psi: self.ctx.tau_twist(&self.phi)? })
    }

    /// `^tau` applied to both maps.
    pub fn tau_twist(&self) -> Result<Tmf, TmfError> {
        Ok(Tmf { ctx: self.ctx.clone(), phi: self.ctx.tau_twist(&self.phi)?, psi: self.ctx.tau_twist(&self.psi)? })
    }

    /// `^tw` applied to both maps.
    pub fn tw_twist(&self) -> Tmf {
        Tmf { ctx: self.ctx.clone(), phi: self.ctx.tw(&self.phi), psi: self.ctx.tw(&self.psi) }
    }

    /// Conjugate by an isomorphism pair: `phi' = alpha^-1 phi beta`,
    /// `psi' = sigma^-1(beta)^-1 psi alpha`.
    pub fn conjugate(&self, alpha: &GradedMatrix, beta: &GradedMatrix) -> Result<Tmf, TmfError> {
        let ai = alpha.inverse()?.ok_or_else(|| TmfError::Invalid("alpha is not invertible".into()))?;
        let bi = beta.inverse()?.ok_or_else(|| TmfError::Invalid("beta is not invertible".into()))?;
        let phi = ai.compose(&self.phi)?.compose(beta)?;
        let psi = self.ctx.tw(&bi).compose(&self.psi)?.compose(alpha)?;
        Ok(Tmf { ctx: self.ctx.clone(), phi, psi })
    }

    /// Basis of morphisms `(alpha, beta): self -> other`.
    pub fn morphisms(&self, other: &Tmf) -> Vec<(GradedMatrix, GradedMatrix)> {
        solve_intertwiners_with(&self.phi, &other.phi, Some((&self.psi, &other.psi, &self.ctx.sigma_inv)))
    }

    pub fn endomorphism_dimension(&self) -> usize {
        self.morphisms(self).len()
    }

    pub fn probably_isomorphic(&self, other: &Tmf, trials: usize, seed: u64) -> Verdict {
        if self.rank() != other.rank()
            || !same_multiset(self.f_shifts(), other.f_shifts())
            || !same_multiset(self.g_shifts(), other.g_shifts())
        {
            return Verdict::ProbablyNot { failures: 0 };
        }
        let basis = self.morphisms(other);
        gradedmod::probably_isomorphic_from_basis(&self.phi, &other.phi, &basis, trials, seed)
    }

    pub fn is_symmetric(&self, trials: usize, seed: u64) -> Result<Verdict, TmfError> {
        Ok(self.probably_isomorphic(&self.t_functor()?, trials, seed))
    }

    /// True if no entry of `phi` or `psi` has a nonzero degree-0 part.
    pub fn is_reduced(&self) -> bool {
        self.phi.degree_zero_entries().is_empty() && self.psi.degree_zero_entries().is_empty()
    }

    /// Dimensions of `coker phi` in degrees `0..=max_degree`, computed from
    /// shifts and cross-checked by linear algebra on each graded slice.
    pub fn coker_hilbert(&self, max_degree: u32) -> Result<Vec<i64>, TmfError> {
        self.coker_hilbert_range(0, max_degree as i64)
    }

    /// As [`Tmf::coker_hilbert`], over degrees `lo..=hi`.
    pub fn coker_hilbert_range(&self, lo: i64, hi: i64) -> Result<Vec<i64>, TmfError> {
        let alg = &self.ctx.algebra;
        let g = module_dims_range(alg, self.g_shifts(), lo, hi);
        let f = module_dims_range(alg, self.f_shifts(), lo, hi);
        let mut out = Vec::new();
        for (k, e) in (lo..=hi).enumerate() {
            let formula = g[k] as i64 - f[k] as i64;
            let brute = g[k] as i64 - image_rank(&self.phi, e) as i64;
            if formula != brute {
                return Err(TmfError::OracleMismatch { degree: e, formula, brute });
            }
            out.push(formula);
        }
        Ok(out)
    }
}

fn same_multiset(a: &[i64], b: &[i64]) -> bool {
    let mut x = a.to_vec();
    let mut y = b.to_vec();
    x.sort();
    y.sort();
    x == y
}

/// Split off one trivial summand using a degree-0 entry of `phi`.
fn pivot_once(t: &Tmf) -> Option<Tmf> {
    let (i, j, c) = t.phi.degree_zero_entries().into_iter().next()?;
    let alg = t.ctx.algebra.clone();
    let n = t.phi.nrows();
    let m = t.phi.ncols();
    let cinv = c.inv().ok()?;
    // Row operations on F: row_k -= (phi_kj / c) row_i.
    let mut l = GradedMatrix::identity(&alg, t.phi.source().to_vec());
    let mut l_inv = l.clone();
    let mut l_entries: Vec<Vec<Poly>> = l.entries().to_vec();
    let mut li_entries: Vec<Vec<Poly>> = l_inv.entries().to_vec();
    for k in 0..n {
        if k != i {
            let r = t.phi.entry(k, j).scale(&cinv);
            l_entries[k][i] = r.neg();
            li_entries[k][i] = r;
        }
    }
    l = GradedMatrix::new(&alg, t.phi.source().to_vec(), t.phi.source().to_vec(), l_entries).ok()?;
    l_inv = GradedMatrix::new(&alg, t.phi.source().to_vec(), t.phi.source().to_vec(), li_entries).ok()?;
    let lphi = l.then(&t.phi);
    // Column operations on G: col_l -= col_j (lphi_il / c).
    let mut r_entries: Vec<Vec<Poly>> = GradedMatrix::identity(&alg, t.phi.target().to_vec()).entries().to_vec();
    let mut ri_entries = r_entries.clone();
    for col in 0..m {
        if col != j {
            let r = lphi.entry(i, col).scale(&cinv);
            r_entries[j][col] = r.neg();
            ri_entries[j][col] = r;
        }
    }
    let rmat = GradedMatrix::new(&alg, t.phi.target().to_vec(), t.phi.target().to_vec(), r_entries).ok()?;
    let rinv = GradedMatrix::new(&alg, t.phi.target().to_vec(), t.phi.target().to_vec(), ri_entries).ok()?;
    // New pair: phi' = L phi R, psi' = sigma^-1(R^-1) psi L^-1.
    let phi2 = lphi.then(&rmat);
    let psi2 = t.ctx.tw(&rinv).then(&t.psi).then(&l_inv);
    let phi_rest = phi2.minor(i, j);
    let psi_rest = psi2.minor(j, i);
    let rest = Tmf { ctx: t.ctx.clone(), phi: phi_rest, psi: psi_rest };
    // The split is exact only if the off-block parts of psi' vanish.
    let clean = (0..n).all(|k| k == i || psi2.entry(j, k).is_zero()) && (0..m).all(|k| k == j || psi2.entry(k, i).is_zero());
    clean.then_some(rest)
}

/// Remove trivial summands until no degree-0 entries remain.
pub fn reduce(t: &Tmf) -> (Tmf, TrivialCounts) {
    let mut cur = t.clone();
    let mut counts = TrivialCounts::default();
    loop {
        if let Some(next) = pivot_once(&cur) {
            cur = next;
            counts.unit_first += 1;
            continue;
        }
        if let Some(next) = pivot_once(&cur.tw_functor()) {
            cur = next.tw_inverse();
            counts.f_first += 1;
            continue;
        }
        return (cur, counts);
    }
}

/// `(1 + x)^(-1/2)` for a nilpotent square matrix `x`.
fn inv_sqrt_unipotent(x: &GradedMatrix) -> Result<GradedMatrix, TmfError> {
    let alg = x.algebra();
    let mut term = GradedMatrix::identity(alg, x.source().to_vec());
    let mut sum = term.clone();
    let mut coeff = Scalar::one();
    for k in 1..=512i64 {
        term = term.then(x);
        if term.is_zero() {
            return Ok(sum);
        }
        // binom(-1/2, k) = binom(-1/2, k-1) * (-1/2 - k + 1) / k
        coeff = coeff.mul(&Scalar::from_ratio(1 - 2 * k, 2 * k));
        sum = sum.add(&term.scale(&coeff))?;
    }
    Err(TmfError::MultiEigenvalue)
}

/// Given an isomorphism `(alpha, beta): t -> T(t)`, produce `phi0` with
/// `(phi0, ^tau phi0)` a factorization isomorphic to `t`.
pub fn symmetric_root(t: &Tmf, alpha: &GradedMatrix, beta: &GradedMatrix) -> Result<GradedMatrix, TmfError> {
    let ctx = &t.ctx;
    let r = ctx.root()?;
    let y = beta.compose(&alpha.map_entries(&r.tau, -r.ell))?;
    let s = y.scalar_part()?;
    let n = s.len();
    let mut trace = Scalar::zero();
    for (k, row) in s.iter().enumerate() {
        trace = trace.add(&row[k]);
    }
    let c = trace.mul(&Scalar::from_i64(n as i64).inv()?);
    // S - cI must be nilpotent.
    let mut nil: Vec<Vec<Scalar>> = s.clone();
    for (k, row) in nil.iter_mut().enumerate() {
        row[k] = row[k].sub(&c);
    }
    let mut p = nil.clone();
    for _ in 0..n {
        p = linalg::dense_mul(&p, &nil);
    }
    if c.is_zero() || p.iter().flatten().any(|x| !x.is_zero()) {
        return Err(TmfError::MultiEigenvalue);
    }
    let root = c.try_sqrt()?;
    let scale = root.inv()?;
    let beta = beta.scale(&scale);
    let y = y.scale(&scale.mul(&scale));
    let rho = y.sub(&GradedMatrix::identity(&ctx.algebra, y.source().to_vec()))?;
    let half = inv_sqrt_unipotent(&rho)?;
    let beta2 = half.compose(&beta)?;
    Ok(t.phi.compose(&beta2)?)
}

/// The factorization `(phi0, ^tau phi0)`.
pub fn symmetric_form(ctx: &Arc<NormalContext>, phi0: &GradedMatrix) -> Result<Tmf, TmfError> {
    Ok(Tmf::new(ctx, phi0.clone(), ctx.tau_twist(phi0)?))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ncalgebra::Generator;

    fn ctx() -> Arc<NormalContext> {
        let a = Algebra::new(
            vec![Generator { name: "x".into(), degree: 1 }, Generator { name: "y".into(), degree: 1 }],
            vec![],
        )
        .unwrap();
        let f = Poly::parse(&a, "x*y").unwrap();
        let id = AlgebraMap::identity(&a);
        NormalContext::new(f, id.clone(), Some(id)).unwrap()
    }

    fn xy(ctx: &Arc<NormalContext>) -> Tmf {
        let a = &ctx.algebra;
        let phi = GradedMatrix::new(a, vec![1], vec![0], vec![vec![Poly::parse(a, "x").unwrap()]]).unwrap();
        let psi = GradedMatrix::new(a, vec![2], vec![1], vec![vec![Poly::parse(a, "y").unwrap()]]).unwrap();
        Tmf::new(ctx, phi, psi)
    }

    #[test]
    fn trivial_factorizations_verify() {
        let c = ctx();
        for kind in [TrivialKind::UnitFirst, TrivialKind::FFirst] {
            assert!(Tmf::trivial(&c, &[0, 3], kind).verify().pass);
        }
        assert!(Tmf::irrelevant(&c).verify().pass);
    }

    #[test]
    fn classical_pair() {
        let c = ctx();
        let t = xy(&c);
        assert!(t.verify().pass);
        let tt = t.t_functor().unwrap();
        assert!(tt.verify().pass);
        assert_eq!(tt.t_functor().unwrap(), t);
        assert!(t.tw_functor().verify().pass);
        assert_eq!(t.tw_functor().tw_inverse(), t);
        assert_eq!(t.endomorphism_dimension(), 1);
    }

    #[test]
    fn reduce_strips_trivials() {
        let c = ctx();
        let t = xy(&c);
        let big = t
            .direct_sum(&Tmf::trivial(&c, &[1], TrivialKind::UnitFirst))
            .unwrap()
            .direct_sum(&Tmf::trivial(&c, &[0], TrivialKind::FFirst))
            .unwrap();
        assert!(big.verify().pass);
        let (red, counts) = reduce(&big);
        assert_eq!(counts, TrivialCounts { unit_first: 1, f_first: 1 });
        assert!(red.verify().pass);
        assert_eq!(red, t);
    }

    #[test]
    fn broken_residual_reported() {
        let c = ctx();
        let mut t = xy(&c);
        t.psi = t.psi.neg();
        let r = t.verify();
        assert!(!r.pass);
        assert_eq!(r.nonzero_residuals().len(), 2);
    }

    #[test]
    fn coker_series() {
        let c = ctx();
        // coker(x) = k[y]
        assert_eq!(xy(&c).coker_hilbert(3).unwrap(), vec![1, 1, 1, 1]);
    }
}
