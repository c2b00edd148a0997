//! Degree-0 maps between graded free modules, as matrices of algebra
//! elements.
//!
//! A module is a list of generator degrees `[d_1, ..., d_m]`, i.e.
//! `A[-d_1] + ... + A[-d_m]`. Row `i` of a matrix is the image of source
//! generator `i`; the matrix of "first X, then Y" is `X * Y`.

use std::collections::{BTreeMap, HashMap};
use std::sync::Arc;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use crate::linalg::{self, Dense, SparseVec};
use crate::ncalgebra::{Algebra, AlgebraError, AlgebraMap, Mono, Poly};
use crate::scalars::{Gauss, Scalar};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum GradedError {
    #[error("shape mismatch: {0}")]
    ShapeMismatch(String),
    #[error("entry ({row}, {col}) is not homogeneous of degree {expected}")]
    DegreeMismatch { row: usize, col: usize, expected: i64 },
    #[error(transparent)]
    Algebra(#[from] AlgebraError),
}

#[derive(Clone, Debug, PartialEq)]
pub struct GradedMatrix {
    alg: Arc<Algebra>,
    source: Vec<i64>,
    target: Vec<i64>,
    entries: Vec<Vec<Poly>>,
}

fn sorted(v: &[i64]) -> Vec<i64> {
    let mut s = v.to_vec();
    s.sort();
    s
}

impl GradedMatrix {
    pub fn new(
        alg: &Arc<Algebra>,
        source: Vec<i64>,
        target: Vec<i64>,
        entries: Vec<Vec<Poly>>,
    ) -> Result<GradedMatrix, GradedError> {
        if entries.len() != source.len() || entries.iter().any(|r| r.len() != target.len()) {
            return Err(GradedError::ShapeMismatch(format!(
                "expected {}x{} entries",
                source.len(),
                target.len()
            )));
        }
        for (i, row) in entries.iter().enumerate() {
            for (j, e) in row.iter().enumerate() {
                if !e.same_algebra(&Poly::zero(alg)) {
                    return Err(AlgebraError::AlgebraMismatch.into());
                }
                let expected = source[i] - target[j];
                if !e.is_homogeneous_of(expected) {
                    return Err(GradedError::DegreeMismatch { row: i, col: j, expected });
                }
            }
        }
        let entries = entries.into_iter().map(|r| r.into_iter().map(|e| e.rehome(alg)).collect()).collect();
        Ok(GradedMatrix { alg: alg.clone(), source, target, entries })
    }

    fn raw(alg: &Arc<Algebra>, source: Vec<i64>, target: Vec<i64>, entries: Vec<Vec<Poly>>) -> GradedMatrix {
        GradedMatrix { alg: alg.clone(), source, target, entries }
    }

    pub fn zero(alg: &Arc<Algebra>, source: Vec<i64>, target: Vec<i64>) -> GradedMatrix {
        let entries = vec![vec![Poly::zero(alg); target.len()]; source.len()];
        GradedMatrix::raw(alg, source, target, entries)
    }

    pub fn identity(alg: &Arc<Algebra>, shifts: Vec<i64>) -> GradedMatrix {
        GradedMatrix::scalar_diagonal(alg, shifts, &Scalar::one())
    }

    pub fn scalar_diagonal(alg: &Arc<Algebra>, shifts: Vec<i64>, c: &Scalar) -> GradedMatrix {
        let n = shifts.len();
        let entries = (0..n)
            .map(|i| (0..n).map(|j| if i == j { Poly::constant(alg, c.clone()) } else { Poly::zero(alg) }).collect())
            .collect();
        GradedMatrix::raw(alg, shifts.clone(), shifts, entries)
    }

    /// Left multiplication by a homogeneous `p` on the module with the given
    /// shifts: source shifts are raised by `deg p`.
    pub fn lambda(alg: &Arc<Algebra>, shifts: &[i64], p: &Poly) -> GradedMatrix {
        let d = p.degree().unwrap_or(0) as i64;
        let n = shifts.len();
        let entries = (0..n)
            .map(|i| (0..n).map(|j| if i == j { p.clone() } else { Poly::zero(alg) }).collect())
            .collect();
        GradedMatrix::raw(alg, shifts.iter().map(|s| s + d).collect(), shifts.to_vec(), entries)
    }

    /// Build a dense matrix from scalars placed at degree-0 slots.
    pub fn from_scalars(
        alg: &Arc<Algebra>,
        source: Vec<i64>,
        target: Vec<i64>,
        m: &Dense,
    ) -> Result<GradedMatrix, GradedError> {
        let entries = m.iter().map(|r| r.iter().map(|c| Poly::constant(alg, c.clone())).collect()).collect();
        GradedMatrix::new(alg, source, target, entries)
    }

    /// Assemble a block matrix; blocks in a block-row share sources, blocks in
    /// a block-column share targets.
    pub fn from_blocks(blocks: &[Vec<GradedMatrix>]) -> Result<GradedMatrix, GradedError> {
        let alg = blocks[0][0].alg.clone();
        let mut source = Vec::new();
        let mut entries = Vec::new();
        let target: Vec<i64> = blocks[0].iter().flat_map(|b| b.target.clone()).collect();
        for brow in blocks {
            let src = &brow[0].source;
            for (k, b) in brow.iter().enumerate() {
                if &b.source != src || b.target != blocks[0][k].target {
                    return Err(GradedError::ShapeMismatch("inconsistent block shifts".into()));
                }
            }
            for i in 0..src.len() {
                entries.push(brow.iter().flat_map(|b| b.entries[i].clone()).collect());
            }
            source.extend(src.iter().copied());
        }
        Ok(GradedMatrix::raw(&alg, source, target, entries))
    }

    pub fn algebra(&self) -> &Arc<Algebra> {
        &self.alg
    }

    pub fn source(&self) -> &[i64] {
        &self.source
    }

    pub fn target(&self) -> &[i64] {
        &self.target
    }

    pub fn entries(&self) -> &[Vec<Poly>] {
        &self.entries
    }

    pub fn entry(&self, i: usize, j: usize) -> &Poly {
        &self.entries[i][j]
    }

    pub fn nrows(&self) -> usize {
        self.source.len()
    }

    pub fn ncols(&self) -> usize {
        self.target.len()
    }

    pub fn is_zero(&self) -> bool {
        self.entries.iter().flatten().all(Poly::is_zero)
    }

    /// Matrix of "first self, then second".
    pub fn compose(&self, second: &GradedMatrix) -> Result<GradedMatrix, GradedError> {
        if self.target != second.source {
            return Err(GradedError::ShapeMismatch(format!(
                "target {:?} does not match source {:?}",
                self.target, second.source
            )));
        }
        if !Arc::ptr_eq(&self.alg, &second.alg) && *self.alg != *second.alg {
            return Err(AlgebraError::AlgebraMismatch.into());
        }
        let n = self.nrows();
        let m = second.ncols();
        let mut entries = vec![vec![Poly::zero(&self.alg); m]; n];
        for (i, row) in entries.iter_mut().enumerate() {
            for (k, a) in self.entries[i].iter().enumerate() {
                if a.is_zero() {
                    continue;
                }
                for (j, e) in row.iter_mut().enumerate() {
                    let b = &second.entries[k][j];
                    if !b.is_zero() {
                        *e = e.add(&a.mul(&b.rehome(&self.alg)));
                    }
                }
            }
        }
        Ok(GradedMatrix::raw(&self.alg, self.source.clone(), second.target.clone(), entries))
    }

    /// `compose` for shapes known to match.
    pub fn then(&self, second: &GradedMatrix) -> GradedMatrix {
        self.compose(second).unwrap_or_else(|e| panic!("{}", e))
    }

    pub fn add(&self, other: &GradedMatrix) -> Result<GradedMatrix, GradedError> {
        if self.source != other.source || self.target != other.target {
            return Err(GradedError::ShapeMismatch("sum of matrices with different shifts".into()));
        }
        Ok(self.zip_with(other, |a, b| a.add(b)))
    }

    pub fn sub(&self, other: &GradedMatrix) -> Result<GradedMatrix, GradedError> {
        if self.source != other.source || self.target != other.target {
            return Err(GradedError::ShapeMismatch("difference of matrices with different shifts".into()));
        }
        Ok(self.zip_with(other, |a, b| a.sub(b)))
    }

    fn zip_with(&self, other: &GradedMatrix, f: impl Fn(&Poly, &Poly) -> Poly) -> GradedMatrix {
        let entries = self
            .entries
            .iter()
            .zip(&other.entries)
            .map(|(r, s)| r.iter().zip(s).map(|(a, b)| f(a, &b.rehome(&self.alg))).collect())
            .collect();
        GradedMatrix::raw(&self.alg, self.source.clone(), self.target.clone(), entries)
    }

    pub fn neg(&self) -> GradedMatrix {
        self.map_polys(Poly::neg)
    }

    pub fn scale(&self, c: &Scalar) -> GradedMatrix {
        self.map_polys(|p| p.scale(c))
    }

    fn map_polys(&self, f: impl Fn(&Poly) -> Poly) -> GradedMatrix {
        let entries = self.entries.iter().map(|r| r.iter().map(&f).collect()).collect();
        GradedMatrix::raw(&self.alg, self.source.clone(), self.target.clone(), entries)
    }

    /// Scale row `i` by `c[i]`.
    pub fn scale_rows(&self, c: &[Scalar]) -> GradedMatrix {
        let entries = self.entries.iter().zip(c).map(|(r, c)| r.iter().map(|p| p.scale(c)).collect()).collect();
        GradedMatrix::raw(&self.alg, self.source.clone(), self.target.clone(), entries)
    }

    /// Apply an algebra map entrywise and raise both shift lists by `raise`.
    /// With `map = sigma^-1` and `raise = d` this is the twist `^tw`.
    pub fn map_entries(&self, map: &AlgebraMap, raise: i64) -> GradedMatrix {
        let alg = map.target().clone();
        let entries = self.entries.iter().map(|r| r.iter().map(|p| map.apply(p)).collect()).collect();
        GradedMatrix::raw(
            &alg,
            self.source.iter().map(|s| s + raise).collect(),
            self.target.iter().map(|s| s + raise).collect(),
            entries,
        )
    }

    /// The twisted map: entries `sigma^-1(.)`, shifts raised by `d`.
    pub fn twist_matrix(&self, sigma: &AlgebraMap, d: i64) -> Result<GradedMatrix, GradedError> {
        Ok(self.map_entries(&sigma.inverse()?, d))
    }

    /// The map `M[n] -> N[n]`: generator degrees lowered by `n`.
    pub fn shift(&self, n: i64) -> GradedMatrix {
        GradedMatrix::raw(
            &self.alg,
            self.source.iter().map(|s| s - n).collect(),
            self.target.iter().map(|s| s - n).collect(),
            self.entries.clone(),
        )
    }

    pub fn direct_sum(&self, other: &GradedMatrix) -> Result<GradedMatrix, GradedError> {
        if !Arc::ptr_eq(&self.alg, &other.alg) && *self.alg != *other.alg {
            return Err(AlgebraError::AlgebraMismatch.into());
        }
        let mut source = self.source.clone();
        source.extend(&other.source);
        let mut target = self.target.clone();
        target.extend(&other.target);
        let mut entries = Vec::new();
        for r in &self.entries {
            let mut row = r.clone();
            row.extend(vec![Poly::zero(&self.alg); other.ncols()]);
            entries.push(row);
        }
        for r in &other.entries {
            let mut row = vec![Poly::zero(&self.alg); self.ncols()];
            row.extend(r.iter().map(|p| p.rehome(&self.alg)));
            entries.push(row);
        }
        Ok(GradedMatrix::raw(&self.alg, source, target, entries))
    }

    /// Reorder rows and columns: row `k` of the result is row `rows[k]`.
    pub fn permute(&self, rows: &[usize], cols: &[usize]) -> GradedMatrix {
        let entries = rows.iter().map(|&i| cols.iter().map(|&j| self.entries[i][j].clone()).collect()).collect();
        GradedMatrix::raw(
            &self.alg,
            rows.iter().map(|&i| self.source[i]).collect(),
            cols.iter().map(|&j| self.target[j]).collect(),
            entries,
        )
    }

    /// Drop the listed row and column.
    pub fn minor(&self, row: usize, col: usize) -> GradedMatrix {
        let rows: Vec<usize> = (0..self.nrows()).filter(|&i| i != row).collect();
        let cols: Vec<usize> = (0..self.ncols()).filter(|&j| j != col).collect();
        self.permute(&rows, &cols)
    }

    pub fn same_shift_multiset(&self) -> bool {
        sorted(&self.source) == sorted(&self.target)
    }

    /// Degree-0 entries as scalars; positive-degree entries become 0.
    pub fn scalar_part(&self) -> Result<Dense, GradedError> {
        if !self.same_shift_multiset() {
            return Err(GradedError::ShapeMismatch("source and target shifts differ".into()));
        }
        Ok(self.entries.iter().map(|r| r.iter().map(Poly::constant_term).collect()).collect())
    }

    /// The two-sided inverse, if the scalar part is invertible.
    pub fn inverse(&self) -> Result<Option<GradedMatrix>, GradedError> {
        let s = self.scalar_part()?;
        let Some(s_inv) = linalg::dense_inverse(&s) else {
            return Ok(None);
        };
        let s_inv = GradedMatrix::from_scalars(&self.alg, self.target.clone(), self.source.clone(), &s_inv)?;
        let s_mat = GradedMatrix::from_scalars(&self.alg, self.source.clone(), self.target.clone(), &s)?;
        let n = self.sub(&s_mat)?;
        // self = S (I + S^-1 N), and S^-1 N raises degree so it is nilpotent.
        let x = s_inv.then(&n).neg();
        let mut term = GradedMatrix::identity(&self.alg, self.target.clone());
        let mut sum = term.clone();
        for _ in 0..=self.target.len() * 64 {
            term = term.then(&x);
            if term.is_zero() {
                break;
            }
            sum = sum.add(&term)?;
        }
        let inv = sum.then(&s_inv);
        let ok = self.then(&inv) == GradedMatrix::identity(&self.alg, self.source.clone())
            && inv.then(self) == GradedMatrix::identity(&self.alg, self.target.clone());
        Ok(ok.then_some(inv))
    }

    pub fn is_invertible(&self) -> bool {
        matches!(self.inverse(), Ok(Some(_)))
    }

    /// Read entries in a structurally equal algebra.
    pub fn rehome(&self, alg: &Arc<Algebra>) -> GradedMatrix {
        let entries = self.entries.iter().map(|r| r.iter().map(|p| p.rehome(alg)).collect()).collect();
        GradedMatrix::raw(alg, self.source.clone(), self.target.clone(), entries)
    }

    /// Lift entries to an extension algebra.
    pub fn lift(&self, ext: &Arc<Algebra>) -> GradedMatrix {
        let entries = self.entries.iter().map(|r| r.iter().map(|p| p.lift(ext)).collect()).collect();
        GradedMatrix::raw(ext, self.source.clone(), self.target.clone(), entries)
    }

    /// Set extension generators to zero entrywise.
    pub fn restrict(&self, base: &Arc<Algebra>) -> GradedMatrix {
        let entries = self.entries.iter().map(|r| r.iter().map(|p| p.restrict(base)).collect()).collect();
        GradedMatrix::raw(base, self.source.clone(), self.target.clone(), entries)
    }

    /// Apply an arbitrary entry transformation, keeping shifts.
    pub fn map_with(&self, alg: &Arc<Algebra>, f: impl Fn(usize, usize, &Poly) -> Poly) -> GradedMatrix {
        let entries = self
            .entries
            .iter()
            .enumerate()
            .map(|(i, r)| r.iter().enumerate().map(|(j, p)| f(i, j, p)).collect())
            .collect();
        GradedMatrix::raw(alg, self.source.clone(), self.target.clone(), entries)
    }

    /// Entries with nonzero degree-0 part: `(row, col, scalar)`.
    pub fn degree_zero_entries(&self) -> Vec<(usize, usize, Scalar)> {
        let mut out = Vec::new();
        for (i, r) in self.entries.iter().enumerate() {
            for (j, p) in r.iter().enumerate() {
                let c = p.constant_term();
                if !c.is_zero() {
                    out.push((i, j, c));
                }
            }
        }
        out
    }
}

/// Unknown square matrix `X: shifts_a -> shifts_b` expanded over monomials.
struct Unknowns {
    /// (which matrix, row, col, monomial)
    vars: Vec<(usize, usize, usize, Mono)>,
}

impl Unknowns {
    fn new(alg: &Algebra, shapes: &[(&[i64], &[i64])]) -> Unknowns {
        let mut vars = Vec::new();
        for (w, (src, tgt)) in shapes.iter().enumerate() {
            for (i, s) in src.iter().enumerate() {
                for (j, t) in tgt.iter().enumerate() {
                    let e = s - t;
                    if e < 0 {
                        continue;
                    }
                    for m in alg.monomials(e as u32).iter() {
                        vars.push((w, i, j, m.clone()));
                    }
                }
            }
        }
        Unknowns { vars }
    }

    fn assemble(
        &self,
        alg: &Arc<Algebra>,
        shapes: &[(&[i64], &[i64])],
        x: &[Scalar],
    ) -> Vec<GradedMatrix> {
        let mut out: Vec<GradedMatrix> =
            shapes.iter().map(|(s, t)| GradedMatrix::zero(alg, s.to_vec(), t.to_vec())).collect();
        for ((w, i, j, m), c) in self.vars.iter().zip(x) {
            if c.is_zero() {
                continue;
            }
            let e = &mut out[*w].entries[*i][*j];
            *e = e.add(&Poly::monomial(alg, m.clone(), c.clone()));
        }
        out
    }
}

/// Sparse coordinates of a list of residual matrices.
struct Coords {
    index: HashMap<(usize, usize, usize, Mono), usize>,
}

impl Coords {
    fn add(&mut self, v: &mut SparseVec, eq: usize, i: usize, j: usize, p: &Poly, sign: &Scalar) {
        for (m, c) in p.terms() {
            let next = self.index.len();
            let k = *self.index.entry((eq, i, j, m.clone())).or_insert(next);
            let cur = v.remove(&k).unwrap_or_default();
            let s = cur.add(&c.mul(sign));
            if !s.is_zero() {
                v.insert(k, s);
            }
        }
    }
}

/// Basis of pairs `(alpha, beta)` with `alpha * phi2 = phi1 * beta`, where
/// `alpha: source(phi1) -> source(phi2)` and `beta: target(phi1) ->
/// target(phi2)`. When `psi` is given as `(psi1, psi2, sigma_inv)` the pair
/// must also satisfy `psi1 * alpha = sigma_inv(beta) * psi2`.
pub fn solve_intertwiners_with(
    phi1: &GradedMatrix,
    phi2: &GradedMatrix,
    psi: Option<(&GradedMatrix, &GradedMatrix, &AlgebraMap)>,
) -> Vec<(GradedMatrix, GradedMatrix)> {
    let alg = phi1.alg.clone();
    let phi2 = phi2.rehome(&alg);
    let shapes: [(&[i64], &[i64]); 2] = [(&phi1.source, &phi2.source), (&phi1.target, &phi2.target)];
    let unknowns = Unknowns::new(&alg, &shapes);
    let mut coords = Coords { index: HashMap::new() };
    let one = Scalar::one();
    let minus = one.neg();
    let mut cols = Vec::new();
    for (w, i, j, m) in &unknowns.vars {
        let mono = Poly::monomial(&alg, m.clone(), Scalar::one());
        let mut v = SparseVec::new();
        if *w == 0 {
            // alpha: E_ij m contributes m * phi2[j][k] to (i, k) of eq 0.
            for k in 0..phi2.ncols() {
                let p = mono.mul(&phi2.entries[*j][k]);
                coords.add(&mut v, 0, *i, k, &p, &one);
            }
            if let Some((psi1, _, _)) = psi {
                for r in 0..psi1.nrows() {
                    let p = psi1.entries[r][*i].rehome(&alg).mul(&mono);
                    coords.add(&mut v, 1, r, *j, &p, &one);
                }
            }
        } else {
            // beta: contributes -phi1[r][i] m to (r, j) of eq 0.
            for r in 0..phi1.nrows() {
                let p = phi1.entries[r][*i].mul(&mono);
                coords.add(&mut v, 0, r, *j, &p, &minus);
            }
            if let Some((_, psi2, sinv)) = psi {
                let sm = sinv.apply(&mono);
                for k in 0..psi2.ncols() {
                    let p = sm.mul(&psi2.entries[*j][k].rehome(&alg));
                    coords.add(&mut v, 1, *i, k, &p, &minus);
                }
            }
        }
        cols.push(v);
    }
    linalg::nullspace(&cols)
        .into_iter()
        .map(|x| {
            let mut ms = unknowns.assemble(&alg, &shapes, &x);
            let b = ms.pop().unwrap();
            let a = ms.pop().unwrap();
            (a, b)
        })
        .collect()
}

pub fn solve_intertwiners(phi1: &GradedMatrix, phi2: &GradedMatrix) -> Vec<(GradedMatrix, GradedMatrix)> {
    solve_intertwiners_with(phi1, phi2, None)
}

#[derive(Clone, Debug)]
pub enum Verdict {
    Iso { alpha: GradedMatrix, beta: GradedMatrix },
    ProbablyNot { failures: usize },
}

impl Verdict {
    pub fn is_iso(&self) -> bool {
        matches!(self, Verdict::Iso { .. })
    }
}

pub const DEFAULT_TRIALS: usize = 32;
const SAMPLE_RANGE: i64 = 1_000_000;

fn eval_dense(m: &Dense, t0: &Gauss) -> Option<Vec<Vec<Gauss>>> {
    m.iter().map(|r| r.iter().map(|c| c.evaluate(t0).ok()).collect()).collect()
}

/// Randomized isomorphism test over a precomputed intertwiner basis. Iso
/// verdicts carry an exactly checked witness.
pub fn probably_isomorphic_from_basis(
    phi1: &GradedMatrix,
    phi2: &GradedMatrix,
    basis: &[(GradedMatrix, GradedMatrix)],
    trials: usize,
    seed: u64,
) -> Verdict {
    if phi1.nrows() != phi2.nrows()
        || phi1.ncols() != phi2.ncols()
        || sorted(&phi1.source) != sorted(&phi2.source)
        || sorted(&phi1.target) != sorted(&phi2.target)
    {
        return Verdict::ProbablyNot { failures: 0 };
    }
    if phi1.nrows() == 0 && phi1.ncols() == 0 {
        return Verdict::Iso {
            alpha: GradedMatrix::zero(&phi1.alg, vec![], vec![]),
            beta: GradedMatrix::zero(&phi1.alg, vec![], vec![]),
        };
    }
    if basis.is_empty() {
        return Verdict::ProbablyNot { failures: trials };
    }
    let alg = phi1.alg.clone();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut failures = 0;
    let combine = |coeffs: &[Scalar], which: usize| -> GradedMatrix {
        let mut acc: Option<GradedMatrix> = None;
        for (c, pair) in coeffs.iter().zip(basis) {
            let m = if which == 0 { &pair.0 } else { &pair.1 };
            let term = m.scale(c);
            acc = Some(match acc {
                None => term,
                Some(a) => a.add(&term).unwrap(),
            });
        }
        acc.unwrap()
    };
    for _ in 0..trials {
        let coeffs: Vec<Scalar> =
            basis.iter().map(|_| Scalar::from_i64(rng.gen_range(-SAMPLE_RANGE..=SAMPLE_RANGE))).collect();
        let t0 = Gauss::from_i64(rng.gen_range(2..=SAMPLE_RANGE));
        let alpha = combine(&coeffs, 0);
        let beta = combine(&coeffs, 1);
        let (Ok(sa), Ok(sb)) = (alpha.scalar_part(), beta.scalar_part()) else {
            failures += 1;
            continue;
        };
        let nonsingular = |s: &Dense| {
            eval_dense(s, &t0).map(|g| !linalg::gauss_det(&g).is_zero()).unwrap_or(false)
        };
        if !nonsingular(&sa) || !nonsingular(&sb) {
            failures += 1;
            continue;
        }
        if alpha.is_invertible()
            && beta.is_invertible()
            && alpha.then(&phi2.rehome(&alg)) == phi1.then(&beta)
        {
            return Verdict::Iso { alpha, beta };
        }
        failures += 1;
    }
    Verdict::ProbablyNot { failures }
}

pub fn probably_isomorphic(phi1: &GradedMatrix, phi2: &GradedMatrix, trials: usize, seed: u64) -> Verdict {
    if phi1.nrows() != phi2.nrows()
        || phi1.ncols() != phi2.ncols()
        || sorted(&phi1.source) != sorted(&phi2.source)
        || sorted(&phi1.target) != sorted(&phi2.target)
    {
        return Verdict::ProbablyNot { failures: 0 };
    }
    let basis = solve_intertwiners(phi1, phi2);
    probably_isomorphic_from_basis(phi1, phi2, &basis, trials, seed)
}

/// Dimensions of a free module in degrees `0..=max_degree`.
pub fn module_dims(alg: &Algebra, shifts: &[i64], max_degree: u32) -> Vec<u64> {
    module_dims_range(alg, shifts, 0, max_degree as i64)
}

/// Dimensions of a free module in degrees `lo..=hi`.
pub fn module_dims_range(alg: &Algebra, shifts: &[i64], lo: i64, hi: i64) -> Vec<u64> {
    let top = shifts.iter().map(|s| hi - s).max().unwrap_or(0).max(0);
    let hs = alg.hilbert_series(top as u32);
    (lo..=hi)
        .map(|e| shifts.iter().filter(|&&s| e >= s).map(|s| hs[(e - s) as usize]).sum())
        .collect()
}

/// Basis of the degree-`e` slice of a free module: (generator, monomial).
pub fn module_basis(alg: &Algebra, shifts: &[i64], e: i64) -> Vec<(usize, Mono)> {
    let mut out = Vec::new();
    for (i, s) in shifts.iter().enumerate() {
        let k = e - s;
        if k >= 0 {
            for m in alg.monomials(k as u32).iter() {
                out.push((i, m.clone()));
            }
        }
    }
    out
}

/// Rank of the image of `phi` in degree `e`, by brute-force linear algebra
/// over the monomial basis of the source slice.
pub fn image_rank(phi: &GradedMatrix, e: i64) -> usize {
    let alg = phi.algebra().clone();
    let mut index: BTreeMap<(usize, Mono), usize> = BTreeMap::new();
    let mut rows = Vec::new();
    for (i, m) in module_basis(&alg, phi.source(), e) {
        let mono = Poly::monomial(&alg, m, Scalar::one());
        let mut v = SparseVec::new();
        for j in 0..phi.ncols() {
            for (mm, c) in mono.mul(phi.entry(i, j)).terms() {
                let next = index.len();
                let k = *index.entry((j, mm.clone())).or_insert(next);
                v.insert(k, c.clone());
            }
        }
        rows.push(v);
    }
    linalg::rank_of(&rows)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ncalgebra::Generator;

    fn poly_ring() -> Arc<Algebra> {
        Algebra::new(
            vec![Generator { name: "x".into(), degree: 1 }, Generator { name: "y".into(), degree: 1 }],
            vec![],
        )
        .unwrap()
    }

    fn p(a: &Arc<Algebra>, s: &str) -> Poly {
        Poly::parse(a, s).unwrap()
    }

    #[test]
    fn degree_checks() {
        let a = poly_ring();
        assert!(GradedMatrix::new(&a, vec![1], vec![0], vec![vec![p(&a, "x")]]).is_ok());
        assert!(matches!(
            GradedMatrix::new(&a, vec![2], vec![0], vec![vec![p(&a, "x")]]),
            Err(GradedError::DegreeMismatch { .. })
        ));
    }

    #[test]
    fn compose_and_identity() {
        let a = poly_ring();
        let m = GradedMatrix::new(&a, vec![1, 1], vec![0, 0], vec![vec![p(&a, "x"), p(&a, "y")], vec![p(&a, "0"), p(&a, "x")]])
            .unwrap();
        let id = GradedMatrix::identity(&a, vec![1, 1]);
        assert_eq!(id.then(&m), m);
        assert!(m.compose(&m).is_err());
    }

    #[test]
    fn unipotent_inverse() {
        let a = poly_ring();
        let m = GradedMatrix::new(
            &a,
            vec![1, 0],
            vec![1, 0],
            vec![vec![p(&a, "2"), p(&a, "x+y")], vec![p(&a, "0"), p(&a, "-1")]],
        )
        .unwrap();
        let inv = m.inverse().unwrap().unwrap();
        assert_eq!(m.then(&inv), GradedMatrix::identity(&a, vec![1, 0]));
        let sing = GradedMatrix::new(&a, vec![1, 0], vec![1, 0], vec![vec![p(&a, "0"), p(&a, "x")], vec![p(&a, "0"), p(&a, "1")]])
            .unwrap();
        assert!(!sing.is_invertible());
    }

    #[test]
    fn intertwiners_of_rank_one() {
        let a = poly_ring();
        let phi = GradedMatrix::new(&a, vec![1], vec![0], vec![vec![p(&a, "x")]]).unwrap();
        let basis = solve_intertwiners(&phi, &phi);
        assert_eq!(basis.len(), 1);
        assert!(probably_isomorphic(&phi, &phi, 4, 1).is_iso());
        let other = GradedMatrix::new(&a, vec![1], vec![0], vec![vec![p(&a, "y")]]).unwrap();
        assert!(!probably_isomorphic(&phi, &other, 4, 1).is_iso());
    }

    #[test]
    fn image_rank_counts() {
        let a = poly_ring();
        let phi = GradedMatrix::new(&a, vec![1], vec![0], vec![vec![p(&a, "x")]]).unwrap();
        assert_eq!(image_rank(&phi, 2), 2);
        assert_eq!(module_dims(&a, &[0], 2), vec![1, 2, 3]);
    }
}
