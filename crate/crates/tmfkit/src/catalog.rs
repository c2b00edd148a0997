//! Noncommutative Kleinian singularities: presentations, square roots of the
//! normalizing automorphism, and their indecomposable factorizations.

use std::collections::BTreeMap;
use std::fmt;
use std::sync::Arc;

use thiserror::Error;

use crate::cover::{
    check_second_cover_decomposition, delta_sigma, functor_a, functor_b, functor_c, functor_h, functor_res, make_cover, second_cover,
};
use crate::gradedmod::{GradedMatrix, Verdict, DEFAULT_TRIALS};
use crate::ncalgebra::{
    normalizing_automorphism, ore_extension, zhang_transport, Algebra, AlgebraError, AlgebraMap, Generator, Poly,
    SkewDerivation, Terms,
};
use crate::report::Report;
use crate::scalars::Scalar;
use crate::tmf::{reduce, NormalContext, Tmf, TmfError};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Case {
    B,
    C,
    DOdd,
    DEven,
    E,
    G,
    H,
    CommutativeA1,
}

impl Case {
    pub const ALL: [Case; 8] =
        [Case::B, Case::C, Case::DOdd, Case::DEven, Case::E, Case::G, Case::H, Case::CommutativeA1];

    pub fn tag(self) -> &'static str {
        match self {
            Case::B => "b",
            Case::C => "c",
            Case::DOdd => "d-odd",
            Case::DEven => "d-even",
            Case::E => "e",
            Case::G => "g",
            Case::H => "h",
            Case::CommutativeA1 => "commutative-A1",
        }
    }

    /// Accepts the tags above, plus `d` which picks the parity from `n`.
    pub fn parse(tag: &str, n: Option<u32>) -> Result<Case, CatalogError> {
        Ok(match tag.to_ascii_lowercase().as_str() {
            "b" => Case::B,
            "c" => Case::C,
            "d" => match n {
                Some(n) if n % 2 == 0 => Case::DEven,
                _ => Case::DOdd,
            },
            "d-odd" => Case::DOdd,
            "d-even" => Case::DEven,
            "e" => Case::E,
            "g" => Case::G,
            "h" => Case::H,
            "commutative-a1" | "a1" => Case::CommutativeA1,
            _ => return Err(CatalogError::BadParams(format!("unknown case {:?}", tag))),
        })
    }

    pub fn range(self) -> &'static str {
        match self {
            Case::B | Case::G => "n >= 2, families 0 < j < n",
            Case::C | Case::H | Case::CommutativeA1 => "no parameters",
            Case::DOdd => "n odd >= 3, rank-2 family and rank-4 families 1 <= j <= (n-1)/2",
            Case::DEven => "n even >= 2, no listed families",
            Case::E => "n >= 1, no listed families",
        }
    }

    pub fn needs_n(self) -> bool {
        !matches!(self, Case::C | Case::H | Case::CommutativeA1)
    }
}

impl fmt::Display for Case {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.tag())
    }
}

#[derive(Debug, Error)]
pub enum CatalogError {
    #[error("bad parameters: {0}")]
    BadParams(String),
    #[error("verification failed for {what}: {residuals:?}")]
    VerificationFailure { what: String, residuals: Vec<String> },
    #[error("neither orientation of {family} verifies: {residuals:?}")]
    ConventionResolutionFailure { family: String, residuals: Vec<String> },
    #[error(transparent)]
    Tmf(#[from] TmfError),
    #[error(transparent)]
    Algebra(#[from] AlgebraError),
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct CatalogParams {
    pub case: Case,
    pub n: Option<u32>,
}

/// One member of a factorization family, stored in the engine convention.
#[derive(Clone, Debug)]
pub struct Family {
    pub label: String,
    pub j: Option<u32>,
    pub tmf: Tmf,
    /// The listed `phi` and `psi` had to exchange roles to verify.
    pub swapped: bool,
    pub notes: Vec<String>,
}

/// Outcome of trying both signs of the `(-1)^s` entries of a rank-4 family
/// in case (d).
#[derive(Clone, Debug)]
pub struct SignFinding {
    pub n: u32,
    pub j: u32,
    pub printed_sign: i64,
    pub printed_pass: bool,
    /// `(identity, row, col, residual)` with 1-based positions.
    pub printed_residuals: Vec<(u8, usize, usize, String)>,
    pub flipped_pass: bool,
    pub flipped_residuals: Vec<(u8, usize, usize, String)>,
}

impl SignFinding {
    pub fn note(&self) -> String {
        let res: Vec<String> =
            self.printed_residuals.iter().map(|(k, i, j, p)| format!("identity {} entry ({},{}) = {}", k, i, j, p)).collect();
        format!(
            "case d n={} j={}: listed sign (-1)^s = {} {}; opposite sign {}{}",
            self.n,
            self.j,
            self.printed_sign,
            if self.printed_pass { "verifies" } else { "fails" },
            if self.flipped_pass { "verifies" } else { "fails" },
            if res.is_empty() { String::new() } else { format!("; residuals under listed sign: {}", res.join(", ")) }
        )
    }
}

#[derive(Clone, Debug)]
pub struct CatalogEntry {
    pub params: CatalogParams,
    pub ctx: Arc<NormalContext>,
    /// Unit multiples of `f` used in other presentations, with the unit.
    pub f_aliases: Vec<(Poly, Scalar)>,
    pub families: Vec<Family>,
    pub sign_findings: Vec<SignFinding>,
    pub notes: Vec<String>,
}

impl CatalogEntry {
    pub fn algebra(&self) -> &Arc<Algebra> {
        &self.ctx.algebra
    }

    pub fn family(&self, label: &str, j: Option<u32>) -> Option<&Family> {
        self.families.iter().find(|f| f.label == label && f.j == j)
    }
}

fn generators(list: &[(&str, u32)]) -> Vec<Generator> {
    list.iter().map(|(n, d)| Generator { name: n.to_string(), degree: *d }).collect()
}

fn terms(list: &[(&[u32], Scalar)]) -> Terms {
    list.iter().map(|(m, c)| (m.to_vec(), c.clone())).collect()
}

fn lit(alg: &Arc<Algebra>, s: &str) -> Poly {
    Poly::parse(alg, s).unwrap_or_else(|e| panic!("bad built-in literal {:?}: {}", s, e))
}

fn lits(alg: &Arc<Algebra>, rows: &[&[&str]]) -> Vec<Vec<Poly>> {
    rows.iter().map(|r| r.iter().map(|s| lit(alg, s)).collect()).collect()
}

fn map_from(alg: &Arc<Algebra>, images: &[(&str, &str)]) -> Result<AlgebraMap, AlgebraError> {
    let m: BTreeMap<String, String> = images.iter().map(|(a, b)| (a.to_string(), b.to_string())).collect();
    AlgebraMap::from_literals(alg, &m)
}

/// A factorization as listed, before the orientation is resolved.
struct Listed {
    label: String,
    j: Option<u32>,
    phi: Vec<Vec<Poly>>,
    psi: Vec<Vec<Poly>>,
    f: Vec<i64>,
    g: Vec<i64>,
    notes: Vec<String>,
}

fn attempt(ctx: &Arc<NormalContext>, l: &Listed, phi: &[Vec<Poly>], psi: &[Vec<Poly>]) -> Result<Tmf, Vec<String>> {
    let alg = &ctx.algebra;
    let gd: Vec<i64> = l.g.iter().map(|s| s + ctx.d).collect();
    let phi_m = GradedMatrix::new(alg, l.f.clone(), l.g.clone(), phi.to_vec()).map_err(|e| vec![e.to_string()])?;
    let psi_m = GradedMatrix::new(alg, gd, l.f.clone(), psi.to_vec()).map_err(|e| vec![e.to_string()])?;
    let t = Tmf::new(ctx, phi_m, psi_m);
    let rep = t.verify();
    if rep.pass {
        Ok(t)
    } else if rep.shapes_ok && rep.homogeneous {
        Err(rep
            .nonzero_residuals()
            .iter()
            .map(|(k, i, j, p)| format!("identity {} entry ({},{}) = {}", k, i + 1, j + 1, p))
            .collect())
    } else {
        Err(rep.messages)
    }
}

/// Try the listed orientation, then the one with `phi` and `psi` exchanged.
fn orient(ctx: &Arc<NormalContext>, l: Listed) -> Result<Family, CatalogError> {
    let first = match attempt(ctx, &l, &l.phi, &l.psi) {
        Ok(t) => return Ok(Family { label: l.label, j: l.j, tmf: t, swapped: false, notes: l.notes }),
        Err(r) => r,
    };
    match attempt(ctx, &l, &l.psi, &l.phi) {
        Ok(t) => {
            let mut notes = l.notes;
            notes.push("listed phi and psi exchanged to satisfy the engine convention".into());
            Ok(Family { label: l.label, j: l.j, tmf: t, swapped: true, notes })
        }
        Err(_) => {
            let family = match l.j {
                Some(j) => format!("{} j={}", l.label, j),
                None => l.label,
            };
            Err(CatalogError::ConventionResolutionFailure { family, residuals: first })
        }
    }
}

fn require_n(p: &CatalogParams) -> Result<u32, CatalogError> {
    p.n.ok_or_else(|| CatalogError::BadParams(format!("case {} needs n", p.case)))
}

/// The parameter `q`: `t^2` in case (g), `-1` in case (b).
pub fn q_of(case: Case) -> Scalar {
    match case {
        Case::B => Scalar::from_i64(-1),
        _ => Scalar::t_pow(2),
    }
}

/// `p` with `p^2 = q^(-n^2)`.
pub fn p_of(case: Case, n: u32) -> Result<Scalar, CatalogError> {
    let n2 = (n * n) as i64;
    Ok(q_of(case).pow(-n2).map_err(TmfError::from)?.try_sqrt().map_err(|_| TmfError::NoSquareRoot)?)
}

pub fn delta_of(n: u32) -> i64 {
    -((n as i64) * (n as i64 - 1) / 2)
}

pub fn build(case: Case, n: Option<u32>) -> Result<CatalogEntry, CatalogError> {
    let params = CatalogParams { case, n };
    match case {
        Case::B | Case::G => build_g(params),
        Case::C => build_c(params),
        Case::DOdd => build_d_odd(params),
        Case::DEven => build_d_even(params),
        Case::E => build_e(params),
        Case::H => build_h(params),
        Case::CommutativeA1 => build_a1(params),
    }
}

/// Machine checks of the normal-element data shared by all cases.
fn check_context(ctx: &Arc<NormalContext>) -> Result<(), CatalogError> {
    ctx.algebra.check_confluence()?;
    let solved = normalizing_automorphism(&ctx.f)?;
    if solved != ctx.sigma {
        return Err(CatalogError::VerificationFailure {
            what: "normalizing automorphism".into(),
            residuals: vec![format!("solved {:?}", solved.images().iter().map(|p| p.to_string()).collect::<Vec<_>>())],
        });
    }
    Ok(())
}

fn finish(
    params: CatalogParams,
    ctx: Arc<NormalContext>,
    f_aliases: Vec<(Poly, Scalar)>,
    listed: Vec<Listed>,
    notes: Vec<String>,
) -> Result<CatalogEntry, CatalogError> {
    check_context(&ctx)?;
    let families = listed.into_iter().map(|l| orient(&ctx, l)).collect::<Result<Vec<_>, _>>()?;
    Ok(CatalogEntry { params, ctx, f_aliases, families, sign_findings: Vec::new(), notes })
}

fn build_c(params: CatalogParams) -> Result<CatalogEntry, CatalogError> {
    // b stands for a2*a1; a1^2 and a2^2 are central.
    let one = Scalar::one();
    let alg = Algebra::new(
        generators(&[("a1", 1), ("b", 4), ("a2", 3)]),
        vec![
            ((2, 0), terms(&[(&[0, 1, 0], one.clone())])),
            ((1, 0), terms(&[(&[2, 0, 1], one.clone())])),
            ((2, 1), terms(&[(&[1, 0, 2], one.clone())])),
        ],
    )?;
    let f = lit(&alg, "a2^2 - a1^6");
    let id = AlgebraMap::identity(&alg);
    let ctx = NormalContext::new(f.clone(), id.clone(), Some(id))?;
    let listed = vec![Listed {
        label: "rank2".into(),
        j: None,
        phi: lits(&alg, &[&["a2", "-a1^4"], &["-a1^2", "a2"]]),
        psi: lits(&alg, &[&["a2", "a1^4"], &["a1^2", "a2"]]),
        f: vec![4, 3],
        g: vec![1, 0],
        notes: vec![],
    }];
    let aliases = vec![(f.neg(), Scalar::from_i64(-1))];
    finish(params, ctx, aliases, listed, vec!["presented with the auxiliary generator b = a2*a1".into()])
}

fn build_g(params: CatalogParams) -> Result<CatalogEntry, CatalogError> {
    let n = require_n(&params)?;
    if n < 2 {
        return Err(CatalogError::BadParams("case g needs n >= 2".into()));
    }
    let case = params.case;
    let q = q_of(case);
    let qp = |k: i64| q.pow(k).expect("q is a unit");
    let ni = n as i64;
    let alg = Algebra::new(
        generators(&[("a1", n), ("a2", 2), ("a3", n)]),
        vec![
            ((1, 0), terms(&[(&[1, 1, 0], qp(ni))])),
            ((2, 0), terms(&[(&[1, 0, 1], qp(ni * ni))])),
            ((2, 1), terms(&[(&[0, 1, 1], qp(ni))])),
        ],
    )?;
    let g = |i: usize| Poly::generator(&alg, i);
    let delta = delta_of(n);
    let f = g(0).mul(&g(2)).sub(&g(1).pow(n).scale(&qp(delta)));
    let sigma = AlgebraMap::diagonal(&alg, &[qp(-ni * ni), Scalar::one(), qp(ni * ni)])?;
    let p = p_of(case, n)?;
    let tau = AlgebraMap::diagonal(&alg, &[p.clone(), Scalar::one(), p.inv().map_err(TmfError::from)?])?;
    let ctx = NormalContext::new(f.clone(), sigma, Some(tau))?;
    let binom = ni * (ni - 1) / 2;
    let listed = (1..n)
        .map(|j| {
            let ji = j as i64;
            let phi = vec![
                vec![g(1).pow(j).scale(&qp(binom + ji - ni * ji).neg()), g(0)],
                vec![g(2).scale(&qp(-ni * (ni - ji)).neg()), g(1).pow(n - j).scale(&qp((ji - ni) * (ni - 1)))],
            ];
            let psi = vec![
                vec![g(1).pow(n - j).scale(&qp((ji - ni) * (ni - 1))), g(0).scale(&qp(ni * (ni - ji)).neg())],
                vec![g(2).scale(&qp(-ni * ni)), g(1).pow(j).scale(&qp(binom + ji - ni * ji).neg())],
            ];
            Listed {
                label: "rank2".into(),
                j: Some(j),
                phi,
                psi,
                f: vec![ni + ji, 2 * ni - ji],
                g: vec![ni - ji, ji],
                notes: vec![],
            }
        })
        .collect();
    let unit = qp(-delta).neg();
    let aliases = vec![(f.scale(&unit), unit)];
    let mut notes = vec![format!("q = {}, p = {}, delta = {}", q, p, delta)];
    if case == Case::B {
        notes.push("built as case g with q = -1".into());
    }
    finish(params, ctx, aliases, listed, notes)
}

fn build_h(params: CatalogParams) -> Result<CatalogEntry, CatalogError> {
    let alg = Algebra::new(
        generators(&[("a1", 1), ("a2", 1), ("a3", 1)]),
        vec![
            ((1, 0), terms(&[(&[1, 1, 0], Scalar::one()), (&[2, 0, 0], Scalar::from_i64(2))])),
            ((2, 1), terms(&[(&[0, 1, 1], Scalar::one()), (&[0, 2, 0], Scalar::from_i64(2))])),
            (
                (2, 0),
                terms(&[(&[1, 0, 1], Scalar::one()), (&[1, 1, 0], Scalar::from_i64(4)), (&[2, 0, 0], Scalar::from_i64(6))]),
            ),
        ],
    )?;
    let f = lit(&alg, "a2^2 - a1*a2 - a1*a3");
    let sigma = map_from(&alg, &[("a2", "a2 + 2*a1"), ("a3", "a3 + 4*a2 + 6*a1")])?;
    let tau = map_from(&alg, &[("a2", "a1 + a2"), ("a3", "2*a1 + 2*a2 + a3")])?;
    let ctx = NormalContext::new(f, sigma, Some(tau))?;
    let listed = vec![Listed {
        label: "rank2".into(),
        j: None,
        phi: lits(&alg, &[&["-a3", "-a1 - a2"], &["a2", "a1"]]),
        psi: lits(&alg, &[&["a1", "a1 + a2"], &["-2*a1 - a2", "-2*a1 - 2*a2 - a3"]]),
        f: vec![1, 1],
        g: vec![0, 0],
        notes: vec![],
    }];
    finish(params, ctx, vec![], listed, vec![])
}

fn build_a1(params: CatalogParams) -> Result<CatalogEntry, CatalogError> {
    let alg = Algebra::new(generators(&[("x", 1), ("y", 1)]), vec![])?;
    let f = lit(&alg, "x*y");
    let id = AlgebraMap::identity(&alg);
    let ctx = NormalContext::new(f, id.clone(), Some(id))?;
    let listed = vec![
        Listed {
            label: "x-y".into(),
            j: None,
            phi: lits(&alg, &[&["x"]]),
            psi: lits(&alg, &[&["y"]]),
            f: vec![1],
            g: vec![0],
            notes: vec![],
        },
        Listed {
            label: "y-x".into(),
            j: None,
            phi: lits(&alg, &[&["y"]]),
            psi: lits(&alg, &[&["x"]]),
            f: vec![1],
            g: vec![0],
            notes: vec![],
        },
    ];
    finish(params, ctx, vec![], listed, vec![])
}

/// The case (d) algebra for odd `n`: `k[a1, a2][a3; tau, delta]`.
fn d_odd_algebra(n: u32) -> Result<Arc<Algebra>, CatalogError> {
    let base = Algebra::new(generators(&[("a1", n), ("a2", 4)]), vec![])?;
    let tau = AlgebraMap::diagonal(&base, &[Scalar::from_i64(-1), Scalar::one()])?;
    let m = n.div_ceil(2);
    let c = Scalar::from_i64(if m.is_multiple_of(2) { 4 } else { -4 });
    let delta = SkewDerivation::new(&tau, vec![Poly::generator(&base, 1).pow(m).scale(&c), Poly::zero(&base)], n + 2)?;
    Ok(ore_extension(&base, "a3", n + 2, &tau, Some(&delta))?)
}

/// Rank-4 matrix of case (d) with `sign` in place of `(-1)^s`.
fn d_rank4(alg: &Arc<Algebra>, n: u32, j: u32, sign: i64) -> Listed {
    let g = |i: usize| Poly::generator(alg, i);
    let m = n.div_ceil(2);
    let z = Poly::zero(alg);
    let two = Scalar::from_i64(2);
    let s2 = g(1).pow(m - j).scale(&Scalar::from_i64(2 * sign));
    let a12 = g(0).mul(&g(1));
    let phi = vec![
        vec![g(2), s2.clone(), a12.clone(), z.clone()],
        vec![z.clone(), g(2).neg(), g(1).pow(j + 1).scale(&two), a12.neg()],
        vec![g(0), z.clone(), g(2), s2],
        vec![g(1).pow(j).scale(&two), g(0).neg(), z, g(2).neg()],
    ];
    let (ni, ji) = (n as i64, j as i64);
    let f = vec![2 * ni + 4 - 4 * ji, ni + 4, 2 * ni + 2 - 4 * ji, ni + 2];
    let gs: Vec<i64> = f.iter().map(|s| s - (ni + 2)).collect();
    Listed { label: "rank4".into(), j: Some(j), psi: phi.clone(), phi, f, g: gs, notes: vec![] }
}

fn residual_list(ctx: &Arc<NormalContext>, l: &Listed) -> (bool, Vec<(u8, usize, usize, String)>) {
    let alg = &ctx.algebra;
    let gd: Vec<i64> = l.g.iter().map(|s| s + ctx.d).collect();
    let (Ok(phi), Ok(psi)) = (
        GradedMatrix::new(alg, l.f.clone(), l.g.clone(), l.phi.clone()),
        GradedMatrix::new(alg, gd, l.f.clone(), l.psi.clone()),
    ) else {
        return (false, vec![]);
    };
    let rep = Tmf::new(ctx, phi, psi).verify();
    (rep.pass, rep.nonzero_residuals().into_iter().map(|(k, i, j, p)| (k, i + 1, j + 1, p.to_string())).collect())
}

/// Run both signs of the rank-4 family through verification.
pub fn rank4_sign_check(ctx: &Arc<NormalContext>, n: u32, j: u32) -> SignFinding {
    let s = n.div_ceil(2);
    let printed_sign = if s.is_multiple_of(2) { 1 } else { -1 };
    let (printed_pass, printed_residuals) = residual_list(ctx, &d_rank4(&ctx.algebra, n, j, printed_sign));
    let (flipped_pass, flipped_residuals) = residual_list(ctx, &d_rank4(&ctx.algebra, n, j, -printed_sign));
    SignFinding { n, j, printed_sign, printed_pass, printed_residuals, flipped_pass, flipped_residuals }
}

fn build_d_odd(params: CatalogParams) -> Result<CatalogEntry, CatalogError> {
    let n = require_n(&params)?;
    if n < 3 || n % 2 == 0 {
        return Err(CatalogError::BadParams(format!("case d-odd needs odd n >= 3, got {}", n)));
    }
    let alg = d_odd_algebra(n)?;
    let f = lit(&alg, "a3^2 + a2*a1^2");
    let id = AlgebraMap::identity(&alg);
    let ctx = NormalContext::new(f, id.clone(), Some(id))?;
    let ni = n as i64;
    let mut listed = vec![Listed {
        label: "rank2".into(),
        j: None,
        phi: lits(&alg, &[&["a3", "a1^2"], &["-a2", "a3"]]),
        psi: lits(&alg, &[&["a3", "-a1^2"], &["a2", "a3"]]),
        f: vec![2 * ni, ni + 2],
        g: vec![ni - 2, 0],
        notes: vec![],
    }];
    let mut findings = Vec::new();
    let mut notes = vec![];
    for j in 1..=(n - 1) / 2 {
        let finding = rank4_sign_check(&ctx, n, j);
        let sign = match (finding.printed_pass, finding.flipped_pass) {
            (true, _) => finding.printed_sign,
            (false, true) => -finding.printed_sign,
            (false, false) => {
                return Err(CatalogError::VerificationFailure {
                    what: format!("case d n={} rank4 j={} under either sign", n, j),
                    residuals: finding.printed_residuals.iter().map(|r| format!("{:?}", r)).collect(),
                })
            }
        };
        notes.push(finding.note());
        let mut l = d_rank4(&alg, n, j, sign);
        if sign != finding.printed_sign {
            l.notes.push(format!("uses sign {} in place of (-1)^s", sign));
        }
        listed.push(l);
        findings.push(finding);
    }
    let mut entry = finish(params, ctx, vec![], listed, notes)?;
    entry.sign_findings = findings;
    Ok(entry)
}

fn build_d_even(params: CatalogParams) -> Result<CatalogEntry, CatalogError> {
    let n = require_n(&params)?;
    if n < 2 || n % 2 == 1 {
        return Err(CatalogError::BadParams(format!("case d-even needs even n >= 2, got {}", n)));
    }
    let alg = Algebra::new(generators(&[("a1", n), ("a2", 4), ("a3", n + 2)]), vec![])?;
    let e = (n + 2) / 2;
    let c = if e % 2 == 0 { 4 } else { -4 };
    let f = lit(&alg, &format!("a3^2 - a1^2*a2 - ({})*a2^{}", c, e));
    let id = AlgebraMap::identity(&alg);
    let ctx = NormalContext::new(f, id.clone(), Some(id))?;
    finish(params, ctx, vec![], vec![], vec!["commutative; no families listed".into()])
}

fn build_e(params: CatalogParams) -> Result<CatalogEntry, CatalogError> {
    let n = require_n(&params)?;
    if n < 1 {
        return Err(CatalogError::BadParams("case e needs n >= 1".into()));
    }
    let alg = Algebra::new(generators(&[("a1", n), ("a2", 1), ("a3", n)]), vec![])?;
    let sign = if n % 2 == 0 { "" } else { "-" };
    let f = lit(&alg, &format!("a2^{} - ({}1)*a1*a3", 2 * n, sign));
    let id = AlgebraMap::identity(&alg);
    let ctx = NormalContext::new(f, id.clone(), Some(id))?;
    finish(params, ctx, vec![], vec![], vec!["commutative; no families listed".into()])
}

/// Look up one family member of a freshly built entry.
pub fn factorization(entry: &CatalogEntry, family: &str, j: Option<u32>) -> Result<Tmf, CatalogError> {
    entry.family(family, j).map(|f| f.tmf.clone()).ok_or_else(|| {
        CatalogError::BadParams(format!("no family {} with index {:?} in case {}", family, j, entry.params.case))
    })
}

#[derive(Clone, Debug)]
pub struct SuiteOptions {
    pub trials: usize,
    pub seed: u64,
    /// Hilbert-series window; defaults to `2d`.
    pub max_degree: Option<u32>,
    /// Include the cover and second-cover checks.
    pub covers: bool,
}

impl Default for SuiteOptions {
    fn default() -> Self {
        SuiteOptions { trials: DEFAULT_TRIALS, seed: 0, max_degree: None, covers: true }
    }
}

fn fam_name(f: &Family) -> String {
    match f.j {
        Some(j) => format!("{} j={}", f.label, j),
        None => f.label.clone(),
    }
}

fn err_str<E: fmt::Display>(e: E) -> String {
    e.to_string()
}

pub fn run_suite(entry: &CatalogEntry, opts: &SuiteOptions) -> Report {
    let p = &entry.params;
    let title = match p.n {
        Some(n) => format!("case {} n={}", p.case, n),
        None => format!("case {}", p.case),
    };
    let mut rep = Report::new(title, opts.seed);
    let ctx = &entry.ctx;
    rep.notes.extend(entry.notes.iter().cloned());
    rep.run("confluence", || ctx.algebra.check_confluence().map(|_| String::new()).map_err(err_str));
    rep.run("normalizing automorphism", || {
        let s = normalizing_automorphism(&ctx.f).map_err(err_str)?;
        if s == ctx.sigma {
            Ok(String::new())
        } else {
            Err("solved automorphism differs from stored sigma".into())
        }
    });
    rep.run("tau square root", || {
        let r = ctx.root().map_err(err_str)?;
        if r.tau.then(&r.tau) != ctx.sigma {
            return Err("tau^2 != sigma".into());
        }
        if r.tau.apply(&ctx.f) != ctx.f {
            return Err("tau(f) != f".into());
        }
        Ok(format!("ell = {}", r.ell))
    });
    for (a, u) in &entry.f_aliases {
        let a = a.clone();
        let u = u.clone();
        rep.run(format!("alias {}", a), || {
            if ctx.f.scale(&u) == a {
                Ok(format!("unit {}", u))
            } else {
                Err("alias is not the stated unit multiple".into())
            }
        });
    }
    for sf in &entry.sign_findings {
        rep.run(format!("rank4 sign dichotomy j={}", sf.j), || {
            if sf.printed_pass != sf.flipped_pass {
                Ok(sf.note())
            } else {
                Err(sf.note())
            }
        });
    }
    let window = opts.max_degree.unwrap_or((2 * ctx.d) as u32);
    for fam in &entry.families {
        let name = fam_name(fam);
        let t = &fam.tmf;
        rep.notes.extend(fam.notes.iter().map(|n| format!("{}: {}", name, n)));
        rep.run(format!("{}: verify", name), || {
            let v = t.verify();
            if v.pass {
                Ok(if fam.swapped { "orientation swapped".into() } else { String::new() })
            } else {
                Err(v.messages.join("; "))
            }
        });
        rep.run(format!("{}: reduced", name), || {
            let (_, counts) = reduce(t);
            if t.is_reduced() && counts.total() == 0 {
                Ok(String::new())
            } else {
                Err(format!("{} trivial summands", counts.total()))
            }
        });
        rep.run(format!("{}: endomorphisms", name), || {
            let d = t.endomorphism_dimension();
            if d == 1 {
                Ok("dimension 1".into())
            } else {
                Err(format!("dimension {}", d))
            }
        });
        rep.run(format!("{}: cokernel Hilbert series", name), || {
            let lo = t.g_shifts().iter().copied().min().unwrap_or(0).min(0);
            t.coker_hilbert_range(lo, window as i64)
                .map(|h| format!("degrees {}..={}: {:?}", lo, window, h))
                .map_err(err_str)
        });
        rep.run(format!("{}: T^2 = id", name), || {
            let tt = t.t_functor().and_then(|x| x.t_functor()).map_err(err_str)?;
            if &tt == t {
                Ok(String::new())
            } else {
                Err("T(T(t)) differs".into())
            }
        });
        if opts.covers {
            cover_checks(&mut rep, &name, ctx, t);
        }
    }
    for (i, a) in entry.families.iter().enumerate() {
        for b in &entry.families[i + 1..] {
            let (na, nb) = (fam_name(a), fam_name(b));
            rep.run(format!("{} vs {}: non-isomorphic", na, nb), || match a.tmf.probably_isomorphic(
                &b.tmf,
                opts.trials,
                opts.seed,
            ) {
                Verdict::Iso { .. } => Err("isomorphism found".into()),
                Verdict::ProbablyNot { failures } => Ok(format!("{} failed trials", failures)),
            });
        }
    }
    rep
}

fn cover_checks(rep: &mut Report, name: &str, ctx: &Arc<NormalContext>, t: &Tmf) {
    let cc = match make_cover(ctx, "z") {
        Ok(c) => c,
        Err(e) => {
            rep.push(format!("{}: cover", name), false, e.to_string(), 0);
            return;
        }
    };
    rep.run(format!("{}: C verifies", name), || {
        let c = functor_c(&cc, t).map_err(err_str)?;
        let v = c.verify();
        if v.pass {
            Ok(String::new())
        } else {
            Err(v.messages.join("; "))
        }
    });
    rep.run(format!("{}: Res C = ^tau T t + ^tau t", name), || {
        let c = functor_c(&cc, t).map_err(err_str)?;
        let res = functor_res(&cc, &c);
        let expect = t
            .t_functor()
            .and_then(|x| x.tau_twist())
            .and_then(|x| x.direct_sum(&t.tau_twist()?))
            .map_err(err_str)?;
        if res == expect {
            Ok(String::new())
        } else {
            Err("restriction differs".into())
        }
    });
    rep.run(format!("{}: A B = id", name), || {
        let m = functor_b(&cc, t).map_err(err_str)?;
        let back = functor_a(&cc, &m).map_err(err_str)?;
        if &back != t {
            return Err("A(B(t)) differs".into());
        }
        let ds = delta_sigma(&cc, &m).map_err(err_str)?;
        if !ds.verify().pass {
            return Err("(Delta, Sigma) fails to verify".into());
        }
        Ok(String::new())
    });
    rep.run(format!("{}: H and second cover decomposition", name), || {
        let sc = second_cover(ctx).map_err(err_str)?;
        let h = functor_h(&sc, t).map_err(err_str)?;
        if !h.verify().pass {
            return Err("H(t) fails to verify".into());
        }
        let r = check_second_cover_decomposition(&sc, t).map_err(err_str)?;
        if r.pass() {
            Ok(String::new())
        } else {
            Err(format!("{:?}", r))
        }
    });
}

/// Build the case (g) families a second way: classical factorizations of
/// `-q^-delta y^n` over `k[y]`, lifted by `H` into the commutative twist
/// `k[x, y, z]`, then carried back to the quantum algebra.
pub fn zhang_crosscheck(entry: &CatalogEntry, opts: &SuiteOptions) -> Result<Report, CatalogError> {
    let case = entry.params.case;
    if !matches!(case, Case::G | Case::B) {
        return Err(CatalogError::BadParams("zhang cross-check needs case g".into()));
    }
    let n = require_n(&entry.params)?;
    let q = q_of(case);
    let qp = |k: i64| q.pow(k).expect("q is a unit");
    let ni = n as i64;
    let c_alg = entry.algebra();
    let phi = AlgebraMap::diagonal(c_alg, &[Scalar::one(), qp(-1), qp(-ni)])?;
    let twist = zhang_transport(c_alg, &phi, Some(&["x", "y", "z"]))?;
    let tw_alg = twist.twisted().clone();
    let mut rep = Report::new(format!("zhang cross-check case {} n={}", case, n), opts.seed);
    rep.run("twist is commutative", || {
        if tw_alg.is_commutative() {
            Ok(String::new())
        } else {
            Err("twisted algebra has non-commuting pairs".into())
        }
    });

    let ky = Algebra::new(generators(&[("y", 2)]), vec![])?;
    let delta = delta_of(n);
    let y = Poly::generator(&ky, 0);
    let unit = qp(-delta).neg();
    let id = AlgebraMap::identity(&ky);
    let ctx_y = NormalContext::new(y.pow(n).scale(&unit), id.clone(), Some(id))?;
    let sc = second_cover(&ctx_y)?;
    let uv = sc.uv.algebra.clone();
    let to_twist = AlgebraMap::new(
        &uv,
        &tw_alg,
        vec![
            Poly::generator(&tw_alg, 1),
            Poly::generator(&tw_alg, 2).neg(),
            Poly::generator(&tw_alg, 0).neg(),
        ],
    )?;
    for j in 1..n {
        let ji = j as i64;
        let classical = Tmf::new(
            &ctx_y,
            GradedMatrix::new(&ky, vec![ji - ni], vec![-ni - ji], vec![vec![y.pow(j).scale(&unit)]])
                .map_err(TmfError::from)?,
            GradedMatrix::new(&ky, vec![ni - ji], vec![ji - ni], vec![vec![y.pow(n - j)]]).map_err(TmfError::from)?,
        );
        let h = functor_h(&sc, &classical)?;
        let printed = factorization(entry, "rank2", Some(j))?;
        rep.run(format!("j={}: transported factorization", j), || {
            if !classical.verify().pass || !h.verify().pass {
                return Err("classical input or its H image fails to verify".into());
            }
            let carry = |m: &GradedMatrix| {
                m.map_with(c_alg, |_, col, p| twist.transport_entry(&to_twist.apply(p), m.target()[col]))
            };
            let phi_c = carry(&h.phi);
            let psi_raw = carry(&h.psi);
            let prod = psi_raw.compose(&phi_c).map_err(err_str)?;
            let mut scales = Vec::new();
            for i in 0..prod.nrows() {
                let d = prod.entry(i, i);
                let (m0, c0) = entry.ctx.f.terms().iter().next().ok_or("f is zero")?;
                let c = d.coeff(m0).div(c0).map_err(err_str)?;
                if *d != entry.ctx.f.scale(&c) {
                    return Err(format!("row {} of psi*phi is not a multiple of f", i + 1));
                }
                scales.push(c.inv().map_err(err_str)?);
            }
            let psi_c = psi_raw.scale_rows(&scales);
            let t = Tmf::new(&entry.ctx, phi_c, psi_c);
            let v = t.verify();
            if !v.pass {
                return Err(format!("transported pair fails: {}", v.messages.join("; ")));
            }
            match t.probably_isomorphic(&printed, opts.trials, opts.seed) {
                Verdict::Iso { .. } => Ok("isomorphic to the listed family member".into()),
                Verdict::ProbablyNot { .. } => Err("no isomorphism to the listed family member".into()),
            }
        });
    }
    Ok(rep)
}
