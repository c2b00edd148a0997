//! Sparse and dense linear algebra over k.

use std::collections::BTreeMap;

use crate::scalars::{Gauss, Scalar};

pub type SparseVec = BTreeMap<usize, Scalar>;

/// Row-reduced echelon form of a list of sparse rows. Keeps pivot rows
/// normalized (pivot = 1) and fully reduced against each other.
#[derive(Default, Clone, Debug)]
pub struct Echelon {
    rows: Vec<(usize, SparseVec)>,
}

fn axpy(target: &mut SparseVec, c: &Scalar, src: &SparseVec) {
    for (k, v) in src {
        let d = c.mul(v);
        match target.get_mut(k) {
            Some(t) => {
                let s = t.add(&d);
                if s.is_zero() {
                    target.remove(k);
                } else {
                    *t = s;
                }
            }
            None => {
                target.insert(*k, d);
            }
        }
    }
}

impl Echelon {
    pub fn new() -> Self {
        Echelon::default()
    }

    pub fn rank(&self) -> usize {
        self.rows.len()
    }

    /// Reduce `v` against the current pivots.
    pub fn reduce(&self, v: &SparseVec) -> SparseVec {
        let mut v = v.clone();
        for (p, row) in &self.rows {
            if let Some(c) = v.get(p).cloned() {
                axpy(&mut v, &c.neg(), row);
            }
        }
        v
    }

    /// Insert a row; returns true if it increased the rank.
    pub fn insert(&mut self, v: &SparseVec) -> bool {
        let r = self.reduce(v);
        let Some((&p, c)) = r.iter().next() else {
            return false;
        };
        let inv = c.inv().expect("nonzero pivot");
        let mut r: SparseVec = r.iter().map(|(k, v)| (*k, v.mul(&inv))).collect();
        r.insert(p, Scalar::one());
        for (_, row) in self.rows.iter_mut() {
            if let Some(c) = row.get(&p).cloned() {
                axpy(row, &c.neg(), &r);
            }
        }
        self.rows.push((p, r));
        true
    }
}

/// Basis of the null space of the linear map sending unknown `j` to column
/// `cols[j]`; i.e. all `x` with `sum_j x_j cols[j] = 0`.
pub fn nullspace(cols: &[SparseVec]) -> Vec<Vec<Scalar>> {
    let n = cols.len();
    // Transpose: equations indexed by coordinate.
    let mut eqs: BTreeMap<usize, SparseVec> = BTreeMap::new();
    for (j, c) in cols.iter().enumerate() {
        for (k, v) in c {
            eqs.entry(*k).or_default().insert(j, v.clone());
        }
    }
    let mut ech = Echelon::new();
    for (_, e) in eqs {
        ech.insert(&e);
    }
    let pivots: BTreeMap<usize, &SparseVec> = ech.rows.iter().map(|(p, r)| (*p, r)).collect();
    let mut basis = Vec::new();
    for free in 0..n {
        if pivots.contains_key(&free) {
            continue;
        }
        let mut x = vec![Scalar::zero(); n];
        x[free] = Scalar::one();
        for (p, row) in &pivots {
            if let Some(c) = row.get(&free) {
                x[*p] = c.neg();
            }
        }
        basis.push(x);
    }
    basis
}

/// Solve `sum_j x_j cols[j] = target`. Returns one solution and whether it
/// is unique (i.e. the columns are independent).
pub fn solve(cols: &[SparseVec], target: &SparseVec) -> Option<(Vec<Scalar>, bool)> {
    let n = cols.len();
    let mut aug: Vec<SparseVec> = cols.to_vec();
    aug.push(target.iter().map(|(k, v)| (*k, v.neg())).collect());
    let null = nullspace(&aug);
    let unique = nullspace(cols).is_empty();
    for v in null {
        if !v[n].is_zero() {
            let inv = v[n].inv().unwrap();
            let x = v[..n].iter().map(|a| a.mul(&inv)).collect();
            return Some((x, unique));
        }
    }
    None
}

pub fn rank_of(rows: &[SparseVec]) -> usize {
    let mut e = Echelon::new();
    for r in rows {
        e.insert(r);
    }
    e.rank()
}

/// Dense square matrix over k.
pub type Dense = Vec<Vec<Scalar>>;

pub fn identity(n: usize) -> Dense {
    (0..n)
        .map(|i| (0..n).map(|j| if i == j { Scalar::one() } else { Scalar::zero() }).collect())
        .collect()
}

pub fn dense_mul(a: &Dense, b: &Dense) -> Dense {
    let n = a.len();
    let m = if b.is_empty() { 0 } else { b[0].len() };
    let mut out = vec![vec![Scalar::zero(); m]; n];
    for i in 0..n {
        for (k, aik) in a[i].iter().enumerate() {
            if aik.is_zero() {
                continue;
            }
            for j in 0..m {
                if !b[k][j].is_zero() {
                    out[i][j] = out[i][j].add(&aik.mul(&b[k][j]));
                }
            }
        }
    }
    out
}

/// Inverse of a square matrix over k, by Gauss-Jordan elimination.
pub fn dense_inverse(a: &Dense) -> Option<Dense> {
    let n = a.len();
    let mut m: Vec<Vec<Scalar>> = a
        .iter()
        .enumerate()
        .map(|(i, row)| {
            let mut r = row.clone();
            r.extend((0..n).map(|j| if i == j { Scalar::one() } else { Scalar::zero() }));
            r
        })
        .collect();
    for col in 0..n {
        let piv = (col..n).find(|&r| !m[r][col].is_zero())?;
        m.swap(col, piv);
        let inv = m[col][col].inv().ok()?;
        for x in m[col].iter_mut() {
            *x = x.mul(&inv);
        }
        for r in 0..n {
            if r != col && !m[r][col].is_zero() {
                let c = m[r][col].clone();
                let pivot_row = m[col].clone();
                for (x, p) in m[r].iter_mut().zip(pivot_row.iter()) {
                    if !p.is_zero() {
                        *x = x.sub(&c.mul(p));
                    }
                }
            }
        }
    }
    Some(m.into_iter().map(|r| r[n..].to_vec()).collect())
}

/// Determinant over the Gaussian rationals.
pub fn gauss_det(a: &[Vec<Gauss>]) -> Gauss {
    let n = a.len();
    let mut m = a.to_vec();
    let mut det = Gauss::one();
    for col in 0..n {
        let Some(piv) = (col..n).find(|&r| !m[r][col].is_zero()) else {
            return Gauss::zero();
        };
        if piv != col {
            m.swap(col, piv);
            det = det.neg();
        }
        det = det.mul(&m[col][col]);
        let inv = m[col][col].inv().unwrap();
        for r in (col + 1)..n {
            if !m[r][col].is_zero() {
                let c = m[r][col].mul(&inv);
                let pivot_row = m[col].clone();
                for (x, p) in m[r].iter_mut().zip(pivot_row.iter()) {
                    *x = x.sub(&c.mul(p));
                }
            }
        }
    }
    det
}
