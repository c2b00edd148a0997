//! Double branched covers `A[z; tau] / (f + z^2)` and the functors between
//! factorizations over `A` and over the cover.
//!
//! The extension uses the relation `a z = z tau(a)`, stored as the rewrite
//! rule `z a -> tau^-1(a) z`. `sigma` and `tau` extend by fixing `z`.

use std::sync::Arc;

use crate::gradedmod::GradedMatrix;
use crate::linalg::Dense;
use crate::ncalgebra::{normalizing_automorphism, ore_extension, Algebra, AlgebraMap, Poly};
use crate::scalars::Scalar;
use crate::tmf::{NormalContext, Tmf, TmfError};

#[derive(Clone, Debug)]
pub struct CoverContext {
    pub base: Arc<NormalContext>,
    /// Context of `f + z^2` over `A[z; tau]`.
    pub cover: Arc<NormalContext>,
    /// Index of `z` among the extension's generators.
    pub z: usize,
    /// Identity on `A`, `z -> -z`.
    pub zeta: AlgebraMap,
}

/// Build the cover, checking normality of `f + z^2` by solving for its
/// normalizing automorphism.
pub fn make_cover(base: &Arc<NormalContext>, name: &str) -> Result<CoverContext, TmfError> {
    let root = base
        .root
        .as_ref()
        .ok_or_else(|| TmfError::HypothesisViolation("no square root tau of sigma".into()))?;
    let alg = &base.algebra;
    let ell = root.ell as u32;
    let ext = ore_extension(alg, name, ell, &root.tau_inv, None)?;
    let z = alg.ngens();
    let zp = Poly::generator(&ext, z);
    let f = base.f.lift(&ext).add(&zp.mul(&zp));
    let sigma = base.sigma.extend(&ext, vec![zp.clone()])?;
    let tau = root.tau.extend(&ext, vec![zp.clone()])?;
    let solved = normalizing_automorphism(&f)
        .map_err(|e| TmfError::HypothesisViolation(format!("f + {}^2 is not normal and regular: {}", name, e)))?;
    if solved != sigma {
        return Err(TmfError::HypothesisViolation(format!(
            "normalizing automorphism of f + {}^2 is not the extension of sigma",
            name
        )));
    }
    let cover = NormalContext::new(f, sigma, Some(tau))?;
    let zeta = AlgebraMap::identity(alg).extend(&ext, vec![zp.neg()])?;
    if !zeta.then(&zeta).is_identity() {
        return Err(TmfError::HypothesisViolation("zeta is not an involution".into()));
    }
    Ok(CoverContext { base: base.clone(), cover, z, zeta })
}

impl CoverContext {
    pub fn algebra(&self) -> &Arc<Algebra> {
        &self.cover.algebra
    }

    fn lift(&self, m: &GradedMatrix) -> GradedMatrix {
        m.lift(self.algebra())
    }

    /// `c z I` as a map `M + deg z -> M`.
    fn z_block(&self, shifts: &[i64], c: &Scalar) -> GradedMatrix {
        let zp = Poly::generator(self.algebra(), self.z).scale(c);
        GradedMatrix::lambda(self.algebra(), shifts, &zp)
    }
}

/// `C(phi, psi) = ([[psi, -z], [z, ^tau phi]], [[^tw phi, z], [-z, ^tau psi]])`.
pub fn functor_c(cc: &CoverContext, t: &Tmf) -> Result<Tmf, TmfError> {
    let base = &cc.base;
    let one = Scalar::one();
    let minus = one.neg();
    let f_sh = t.f_shifts();
    let g_sh = t.g_shifts();
    let ell = base.root()?.ell;
    let g_ell: Vec<i64> = g_sh.iter().map(|s| s + ell).collect();
    let g_d: Vec<i64> = g_sh.iter().map(|s| s + base.d).collect();
    let phi = GradedMatrix::from_blocks(&[
        vec![cc.lift(&t.psi), cc.z_block(&g_ell, &minus)],
        vec![cc.z_block(f_sh, &one), cc.lift(&base.tau_twist(&t.phi)?)],
    ])?;
    let psi = GradedMatrix::from_blocks(&[
        vec![cc.lift(&base.tw(&t.phi)), cc.z_block(&f_sh.iter().map(|s| s + ell).collect::<Vec<_>>(), &one)],
        vec![cc.z_block(&g_d, &minus), cc.lift(&base.tau_twist(&t.psi)?)],
    ])?;
    Ok(Tmf::new(&cc.cover, phi, psi))
}

/// Set `z = 0` entrywise.
pub fn functor_res(cc: &CoverContext, t: &Tmf) -> Tmf {
    let alg = &cc.base.algebra;
    Tmf::new(&cc.base, t.phi.restrict(alg), t.psi.restrict(alg))
}

/// A graded free `A`-module with a `z`-action `Z: ^tau M -> M` and a
/// diagonal involution `theta`.
#[derive(Clone, Debug)]
pub struct EquivariantModule {
    pub shifts: Vec<i64>,
    pub z_action: GradedMatrix,
    pub theta: Vec<i8>,
}

impl EquivariantModule {
    /// `z^2 = -f` and `Z` swaps the `theta` eigenspaces.
    pub fn check(&self, cc: &CoverContext) -> Result<(), TmfError> {
        let base = &cc.base;
        if self.theta.len() != self.shifts.len() || self.theta.iter().any(|s| *s != 1 && *s != -1) {
            return Err(TmfError::Invalid("theta must be a +1/-1 diagonal".into()));
        }
        let sq = base.tau_twist(&self.z_action)?.compose(&self.z_action)?;
        let minus_f = base.lambda_f(&self.shifts).neg();
        if sq != minus_f {
            return Err(TmfError::Invalid("z^2 != -f on the module".into()));
        }
        for (i, row) in self.z_action.entries().iter().enumerate() {
            for (j, p) in row.iter().enumerate() {
                if !p.is_zero() && self.theta[i] == self.theta[j] {
                    return Err(TmfError::Invalid("z-action does not anticommute with theta".into()));
                }
            }
        }
        Ok(())
    }
}

/// `B(phi, psi)`: the module `F + ^tau G` with `z (x, y) = (-psi(y), phi(x))`.
pub fn functor_b(cc: &CoverContext, t: &Tmf) -> Result<EquivariantModule, TmfError> {
    let base = &cc.base;
    let ell = base.root()?.ell;
    let f_sh = t.f_shifts().to_vec();
    let g_ell: Vec<i64> = t.g_shifts().iter().map(|s| s + ell).collect();
    let f_ell: Vec<i64> = f_sh.iter().map(|s| s + ell).collect();
    let g_d: Vec<i64> = t.g_shifts().iter().map(|s| s + base.d).collect();
    let alg = &base.algebra;
    let z_action = GradedMatrix::from_blocks(&[
        vec![GradedMatrix::zero(alg, f_ell, f_sh.clone()), base.tau_twist(&t.phi)?],
        vec![t.psi.neg(), GradedMatrix::zero(alg, g_d, g_ell.clone())],
    ])?;
    let mut shifts = f_sh.clone();
    shifts.extend(&g_ell);
    let mut theta = vec![1i8; f_sh.len()];
    theta.extend(vec![-1i8; g_ell.len()]);
    let m = EquivariantModule { shifts, z_action, theta };
    m.check(cc)?;
    Ok(m)
}

/// `A(M, theta)`: `phi` is `z` from the `+` part to the `-` part, `psi` is
/// `-z` back.
pub fn functor_a(cc: &CoverContext, m: &EquivariantModule) -> Result<Tmf, TmfError> {
    m.check(cc)?;
    let base = &cc.base;
    let plus: Vec<usize> = (0..m.theta.len()).filter(|&i| m.theta[i] == 1).collect();
    let minus: Vec<usize> = (0..m.theta.len()).filter(|&i| m.theta[i] == -1).collect();
    if plus.len() != minus.len() {
        return Err(TmfError::Invalid("theta eigenspaces have different ranks".into()));
    }
    let zpm = m.z_action.permute(&plus, &minus);
    let zmp = m.z_action.permute(&minus, &plus);
    let phi = base.tau_untwist(&zpm)?;
    let psi = zmp.neg();
    Ok(Tmf::new(base, phi, psi))
}

/// `(Delta, Sigma) = (z I - Z, z I + ^tau Z)` over the cover; its cokernel is
/// the module itself.
pub fn delta_sigma(cc: &CoverContext, m: &EquivariantModule) -> Result<Tmf, TmfError> {
    m.check(cc)?;
    let base = &cc.base;
    let ell = base.root()?.ell;
    let one = Scalar::one();
    let z = m.z_action.lift(cc.algebra());
    let delta = cc.z_block(&m.shifts, &one).sub(&z)?;
    let tz = base.tau_twist(&m.z_action)?.lift(cc.algebra());
    let m_ell: Vec<i64> = m.shifts.iter().map(|s| s + ell).collect();
    let sigma = cc.z_block(&m_ell, &one).add(&tz)?;
    Ok(Tmf::new(&cc.cover, delta, sigma))
}

/// The iterated cover `A[u; tau][v; tau] / (f + uv)` together with the
/// route through `A[z][w] / (f + z^2 + w^2)`.
#[derive(Clone, Debug)]
pub struct SecondCover {
    pub first: CoverContext,
    pub second: CoverContext,
    /// Context of `f + uv`.
    pub uv: Arc<NormalContext>,
    pub u: usize,
    pub v: usize,
    /// `z -> (u+v)/2`, `w -> (u-v)/(2i)`.
    pub chi: AlgebraMap,
}

pub fn second_cover(base: &Arc<NormalContext>) -> Result<SecondCover, TmfError> {
    let first = make_cover(base, "z")?;
    let second = make_cover(&first.cover, "w")?;
    let root = base.root()?;
    let alg = &base.algebra;
    let ell = root.ell as u32;
    let ext1 = ore_extension(alg, "u", ell, &root.tau_inv, None)?;
    let u = alg.ngens();
    let up = Poly::generator(&ext1, u);
    let tau1 = root.tau.extend(&ext1, vec![up.clone()])?;
    let ext2 = ore_extension(&ext1, "v", ell, &tau1.inverse()?, None)?;
    let v = u + 1;
    let up = Poly::generator(&ext2, u);
    let vp = Poly::generator(&ext2, v);
    let f = base.f.lift(&ext2).add(&up.mul(&vp));
    let sigma = base.sigma.extend(&ext2, vec![up.clone(), vp.clone()])?;
    let tau = root.tau.extend(&ext2, vec![up.clone(), vp.clone()])?;
    let uv = NormalContext::new(f, sigma, Some(tau))?;
    let zw = second.cover.algebra.clone();
    let half = Scalar::from_ratio(1, 2);
    let mut images: Vec<Poly> = (0..alg.ngens()).map(|i| Poly::generator(&ext2, i)).collect();
    images.push(up.add(&vp).scale(&half));
    images.push(up.sub(&vp).scale(&half.mul(&Scalar::i().neg())));
    let chi = AlgebraMap::new(&zw, &ext2, images)?;
    if chi.apply(&second.cover.f) != uv.f {
        return Err(TmfError::HypothesisViolation("change of variables does not send f + z^2 + w^2 to f + uv".into()));
    }
    Ok(SecondCover { first, second, uv, u, v, chi })
}

/// `H(phi, psi) = ([[^tw phi, -v], [u, ^tau psi]], [[^tw psi, v], [-u, ^tau^3 phi]])`.
pub fn functor_h(sc: &SecondCover, t: &Tmf) -> Result<Tmf, TmfError> {
    let base = &sc.first.base;
    let ext = sc.uv.algebra.clone();
    let ell = base.root()?.ell;
    let d = base.d;
    let lam = |shifts: &[i64], g: usize, c: i64| {
        GradedMatrix::lambda(&ext, shifts, &Poly::generator(&ext, g).scale(&Scalar::from_i64(c)))
    };
    let raise = |v: &[i64], k: i64| -> Vec<i64> { v.iter().map(|s| s + k).collect() };
    let f_sh = t.f_shifts();
    let g_sh = t.g_shifts();
    let tw_phi = base.tw(&t.phi).lift(&ext);
    let tau_psi = base.tau_twist(&t.psi)?.lift(&ext);
    let phi = GradedMatrix::from_blocks(&[
        vec![tw_phi, lam(&raise(f_sh, ell), sc.v, -1)],
        vec![lam(&raise(g_sh, d), sc.u, 1), tau_psi],
    ])?;
    let tw_psi = base.tw(&t.psi).lift(&ext);
    let tau3_phi = base.tau_twist(&base.tw(&t.phi))?.lift(&ext);
    let psi = GradedMatrix::from_blocks(&[
        vec![tw_psi, lam(&raise(g_sh, 3 * ell), sc.v, 1)],
        vec![lam(&raise(f_sh, d), sc.u, -1), tau3_phi],
    ])?;
    Ok(Tmf::new(&sc.uv, phi, psi))
}

/// Outcome of comparing both sides of the second-cover decomposition.
#[derive(Clone, Debug)]
pub struct DecompositionReport {
    /// Conjugated `C2 C1 (t)` equals `H(t) + T H(t)` exactly.
    pub conjugation: bool,
    /// `Res Res H(t)` equals `^tw(t + T t)` exactly.
    pub restriction: bool,
    pub c2c1_verifies: bool,
    pub h_verifies: bool,
    pub notes: Vec<String>,
}

impl DecompositionReport {
    pub fn pass(&self) -> bool {
        self.conjugation && self.restriction && self.c2c1_verifies && self.h_verifies
    }
}

/// The 4x4 conjugating matrix, tensored with an identity of size `r`.
fn decomposition_matrix(r: usize) -> Dense {
    let i = Scalar::i();
    let one = Scalar::one();
    let z = Scalar::zero();
    let m = [
        [one.clone(), z.clone(), z.clone(), i.clone()],
        [z.clone(), one.neg(), i.neg(), z.clone()],
        [z.clone(), i.neg(), one.neg(), z.clone()],
        [i.clone(), z.clone(), z.clone(), one.clone()],
    ];
    let mut out = vec![vec![Scalar::zero(); 4 * r]; 4 * r];
    for a in 0..4 {
        for b in 0..4 {
            for k in 0..r {
                out[a * r + k][b * r + k] = m[a][b].clone();
            }
        }
    }
    out
}

pub fn check_second_cover_decomposition(sc: &SecondCover, t: &Tmf) -> Result<DecompositionReport, TmfError> {
    let mut notes = Vec::new();
    let c1 = functor_c(&sc.first, t)?;
    let c2 = functor_c(&sc.second, &c1)?;
    let c2c1_verifies = c2.verify().pass;
    let ext = sc.uv.algebra.clone();
    let moved = Tmf::new(&sc.uv, c2.phi.map_entries(&sc.chi, 0), c2.psi.map_entries(&sc.chi, 0));
    let h = functor_h(sc, t)?;
    let h_verifies = h.verify().pass;
    let rhs = h.direct_sum(&h.t_functor()?)?;
    let r = t.rank();
    let mm = decomposition_matrix(r);
    let alpha = GradedMatrix::from_scalars(&ext, moved.phi.source().to_vec(), moved.phi.source().to_vec(), &mm)?;
    let beta = GradedMatrix::from_scalars(&ext, moved.phi.target().to_vec(), moved.phi.target().to_vec(), &mm)?;
    let conj = moved.conjugate(&alpha, &beta)?;
    let conjugation = conj == rhs;
    if !conjugation {
        let diff = conj.phi.sub(&rhs.phi).map(|m| m.is_zero()).unwrap_or(false);
        notes.push(format!("conjugated phi {} H + TH", if diff { "matches" } else { "differs from" }));
        if let Ok(dpsi) = conj.psi.sub(&rhs.psi) {
            notes.push(format!("conjugated psi {} H + TH", if dpsi.is_zero() { "matches" } else { "differs from" }));
        }
    }
    let base_alg = &sc.first.base.algebra;
    let res = Tmf::new(&sc.first.base, h.phi.restrict(base_alg), h.psi.restrict(base_alg));
    let expect = t.direct_sum(&t.t_functor()?)?.tw_twist();
    let restriction = res == expect;
    if !restriction {
        notes.push("Res Res H(t) differs from ^tw(t + T t)".into());
    }
    Ok(DecompositionReport { conjugation, restriction, c2c1_verifies, h_verifies, notes })
}

/// For `t = (phi0, ^tau phi0)`, the two summands of `C(t)` obtained by
/// conjugating with `[[1, i], [i, 1]]`: `(^tau phi0 -+ i z, ^tw phi0 +- i z)`.
pub fn symmetric_split(cc: &CoverContext, t: &Tmf) -> Result<(Tmf, Tmf), TmfError> {
    let base = &cc.base;
    if base.tau_twist(&t.phi)? != t.psi {
        return Err(TmfError::NotSymmetricForm);
    }
    let ell = base.root()?.ell;
    let p = cc.lift(&t.psi);
    let q = cc.lift(&base.tw(&t.phi));
    let f_ell: Vec<i64> = t.f_shifts().iter().map(|s| s + ell).collect();
    let make = |c: &Scalar| -> Result<Tmf, TmfError> {
        let phi = p.sub(&cc.z_block(t.f_shifts(), c))?;
        let psi = q.add(&cc.z_block(&f_ell, c))?;
        Ok(Tmf::new(&cc.cover, phi, psi))
    };
    let i = Scalar::i();
    Ok((make(&i)?, make(&i.neg())?))
}

/// The conjugating matrix `[[1, i], [i, 1]]` tensored with an identity.
pub fn split_matrix(r: usize) -> Dense {
    let mut out = vec![vec![Scalar::zero(); 2 * r]; 2 * r];
    for k in 0..r {
        out[k][k] = Scalar::one();
        out[r + k][r + k] = Scalar::one();
        out[k][r + k] = Scalar::i();
        out[r + k][k] = Scalar::i();
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ncalgebra::Generator;
    use std::collections::BTreeMap;

    /// `yx = t^2 xy`, `f = xy`, `tau = (t^-1, t)`.
    fn quantum() -> (Arc<NormalContext>, Tmf) {
        let q = Scalar::t_pow(2);
        let a = Algebra::new(
            vec![Generator { name: "x".into(), degree: 1 }, Generator { name: "y".into(), degree: 1 }],
            vec![((1, 0), BTreeMap::from([(vec![1, 1], q.clone())]))],
        )
        .unwrap();
        let f = Poly::parse(&a, "x*y").unwrap();
        let sigma = AlgebraMap::diagonal(&a, &[q.inv().unwrap(), q.clone()]).unwrap();
        let tau = AlgebraMap::diagonal(&a, &[Scalar::t_pow(-1), Scalar::t()]).unwrap();
        let ctx = NormalContext::new(f, sigma, Some(tau)).unwrap();
        let phi = GradedMatrix::new(&a, vec![1], vec![0], vec![vec![Poly::parse(&a, "x").unwrap()]]).unwrap();
        let psi = GradedMatrix::new(&a, vec![2], vec![1], vec![vec![Poly::parse(&a, "t^-2*y").unwrap()]]).unwrap();
        let t = Tmf::new(&ctx, phi, psi);
        assert!(t.verify().pass);
        (ctx, t)
    }

    #[test]
    fn cover_functor_and_restriction() {
        let (ctx, t) = quantum();
        let cc = make_cover(&ctx, "z").unwrap();
        let c = functor_c(&cc, &t).unwrap();
        assert!(c.verify().pass, "{:?}", c.verify().messages);
        let res = functor_res(&cc, &c);
        let expect = t.t_functor().unwrap().tau_twist().unwrap().direct_sum(&t.tau_twist().unwrap()).unwrap();
        assert_eq!(res, expect);
    }

    #[test]
    fn equivariant_round_trip() {
        let (ctx, t) = quantum();
        let cc = make_cover(&ctx, "z").unwrap();
        let m = functor_b(&cc, &t).unwrap();
        assert_eq!(functor_a(&cc, &m).unwrap(), t);
        let ds = delta_sigma(&cc, &m).unwrap();
        assert!(ds.verify().pass, "{:?}", ds.verify().messages);
        let dims = crate::gradedmod::module_dims(&ctx.algebra, &m.shifts, 4);
        let coker = ds.coker_hilbert(4).unwrap();
        assert_eq!(coker, dims.iter().map(|&x| x as i64).collect::<Vec<_>>());
    }

    #[test]
    fn second_cover_decomposition() {
        let (ctx, t) = quantum();
        let sc = second_cover(&ctx).unwrap();
        let h = functor_h(&sc, &t).unwrap();
        assert!(h.verify().pass, "{:?}", h.verify().messages);
        let rep = check_second_cover_decomposition(&sc, &t).unwrap();
        assert!(rep.pass(), "{:?}", rep);
    }

    #[test]
    fn symmetric_split_matches_cover() {
        let a = Algebra::new(vec![Generator { name: "x".into(), degree: 1 }], vec![]).unwrap();
        let id = AlgebraMap::identity(&a);
        let ctx = NormalContext::new(Poly::parse(&a, "x^2").unwrap(), id.clone(), Some(id)).unwrap();
        let phi0 = GradedMatrix::new(&a, vec![1], vec![0], vec![vec![Poly::parse(&a, "x").unwrap()]]).unwrap();
        let t = Tmf::new(&ctx, phi0.clone(), ctx.tau_twist(&phi0).unwrap());
        let cc = make_cover(&ctx, "z").unwrap();
        let (s1, s2) = symmetric_split(&cc, &t).unwrap();
        assert!(s1.verify().pass && s2.verify().pass);
        let c = functor_c(&cc, &t).unwrap();
        let n = split_matrix(1);
        let alpha = GradedMatrix::from_scalars(cc.algebra(), c.f_shifts().to_vec(), c.f_shifts().to_vec(), &n).unwrap();
        let beta = GradedMatrix::from_scalars(cc.algebra(), c.g_shifts().to_vec(), c.g_shifts().to_vec(), &n).unwrap();
        assert_eq!(c.conjugate(&alpha, &beta).unwrap(), s1.direct_sum(&s2).unwrap());

        let (qctx, qt) = quantum();
        let qc = make_cover(&qctx, "z").unwrap();
        assert!(matches!(symmetric_split(&qc, &qt), Err(TmfError::NotSymmetricForm)));
    }

    #[test]
    fn wrong_root_is_rejected() {
        let (ctx, _) = quantum();
        let a = &ctx.algebra;
        let bad = AlgebraMap::diagonal(a, &[Scalar::t(), Scalar::t()]).unwrap();
        assert!(matches!(
            NormalContext::new(ctx.f.clone(), ctx.sigma.clone(), Some(bad)),
            Err(TmfError::HypothesisViolation(_))
        ));
    }
}
