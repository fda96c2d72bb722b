//! Exact matrices over the coefficient ring: sparse cofactor determinants,
//! adjugate inverses for unimodular matrices, and hermitian signature by
//! congruence reduction over the Gaussian rationals.

use std::collections::HashMap;

use num::{Signed, Zero};
use thiserror::Error;

use crate::algebra::{CoeffElem, GaussianRational};

#[derive(Error, Debug, Clone, PartialEq)]
pub enum LinalgError {
    #[error("singular matrix: determinant is zero")]
    Singular,
    #[error("matrix is not unimodular over the coefficient ring: det = {det}")]
    NotUnimodular { det: String },
    #[error("matrix is not hermitian")]
    NotHermitian,
    #[error("mixed exponential grades prevent signature evaluation")]
    MixedGrades,
}

/// A square matrix with exact polynomial entries.
#[derive(Clone, PartialEq, Debug)]
pub struct CMatrix {
    pub n: usize,
    arity: usize,
    entries: Vec<CoeffElem>,
}

impl CMatrix {
    pub fn from_fn(n: usize, arity: usize, mut f: impl FnMut(usize, usize) -> CoeffElem) -> Self {
        let mut entries = Vec::with_capacity(n * n);
        for i in 0..n {
            for j in 0..n {
                let e = f(i, j);
                assert_eq!(e.arity(), arity, "matrix entry arity mismatch");
                entries.push(e);
            }
        }
        CMatrix { n, arity, entries }
    }

    pub fn zero(n: usize, arity: usize) -> Self {
        Self::from_fn(n, arity, |_, _| CoeffElem::zero(arity))
    }

    pub fn identity(n: usize, arity: usize) -> Self {
        Self::from_fn(n, arity, |i, j| {
            if i == j {
                CoeffElem::one(arity)
            } else {
                CoeffElem::zero(arity)
            }
        })
    }

    pub fn entry(&self, i: usize, j: usize) -> &CoeffElem {
        &self.entries[i * self.n + j]
    }

    pub fn set(&mut self, i: usize, j: usize, v: CoeffElem) {
        self.entries[i * self.n + j] = v;
    }

    pub fn arity(&self) -> usize {
        self.arity
    }

    pub fn mul(&self, other: &CMatrix) -> CMatrix {
        assert_eq!(self.n, other.n);
        CMatrix::from_fn(self.n, self.arity, |i, j| {
            let mut acc = CoeffElem::zero(self.arity);
            for k in 0..self.n {
                let a = self.entry(i, k);
                if a.is_zero() {
                    continue;
                }
                acc = &acc + &(a * other.entry(k, j));
            }
            acc
        })
    }

    pub fn is_identity(&self) -> bool {
        (0..self.n).all(|i| {
            (0..self.n).all(|j| {
                if i == j {
                    self.entry(i, j).is_const_int(1)
                } else {
                    self.entry(i, j).is_zero()
                }
            })
        })
    }

    pub fn is_hermitian(&self) -> bool {
        (0..self.n).all(|i| (i..self.n).all(|j| self.entry(j, i).conj() == *self.entry(i, j)))
    }

    /// Exact determinant by expansion along rows, sparse rows first.
    pub fn det(&self) -> CoeffElem {
        let n = self.n;
        if n == 0 {
            return CoeffElem::one(self.arity);
        }
        // order rows by nonzero count so the expansion tree stays small
        let mut order: Vec<usize> = (0..n).collect();
        let nnz: Vec<usize> = (0..n)
            .map(|i| (0..n).filter(|&j| !self.entry(i, j).is_zero()).count())
            .collect();
        order.sort_by_key(|&i| nnz[i]);
        let perm_sign = permutation_sign(&order);
        let full: u32 = if n == 32 { u32::MAX } else { (1u32 << n) - 1 };
        let mut memo: HashMap<u32, CoeffElem> = HashMap::new();
        let d = self.det_rec(&order, 0, full, &mut memo);
        if perm_sign < 0 {
            d.scale_int(-1)
        } else {
            d
        }
    }

    fn det_rec(
        &self,
        order: &[usize],
        depth: usize,
        colmask: u32,
        memo: &mut HashMap<u32, CoeffElem>,
    ) -> CoeffElem {
        if depth == order.len() {
            return CoeffElem::one(self.arity);
        }
        if let Some(v) = memo.get(&colmask) {
            return v.clone();
        }
        let row = order[depth];
        let mut acc = CoeffElem::zero(self.arity);
        let mut pos = 0usize;
        for j in 0..self.n {
            if colmask & (1 << j) == 0 {
                continue;
            }
            let e = self.entry(row, j);
            if !e.is_zero() {
                let sub = self.det_rec(order, depth + 1, colmask & !(1 << j), memo);
                let mut term = e * &sub;
                if pos % 2 == 1 {
                    term = term.scale_int(-1);
                }
                acc = &acc + &term;
            }
            pos += 1;
        }
        memo.insert(colmask, acc.clone());
        acc
    }

    fn minor(&self, del_row: usize, del_col: usize) -> CMatrix {
        let m = self.n - 1;
        CMatrix::from_fn(m, self.arity, |i, j| {
            let si = if i >= del_row { i + 1 } else { i };
            let sj = if j >= del_col { j + 1 } else { j };
            self.entry(si, sj).clone()
        })
    }

    /// Inverse over the coefficient ring; requires the determinant to be a
    /// unit (a single invertible monomial in the scale units).
    pub fn inverse(&self) -> Result<CMatrix, LinalgError> {
        let det = self.det();
        if det.is_zero() {
            return Err(LinalgError::Singular);
        }
        let det_inv = invert_unit(&det).ok_or_else(|| LinalgError::NotUnimodular {
            det: format!("{}", det),
        })?;
        let n = self.n;
        let mut inv = CMatrix::zero(n, self.arity);
        for i in 0..n {
            for j in 0..n {
                let mut c = self.minor(j, i).det();
                if (i + j) % 2 == 1 {
                    c = c.scale_int(-1);
                }
                inv.set(i, j, &c * &det_inv);
            }
        }
        Ok(inv)
    }

    /// Signature at the origin by exact hermitian congruence reduction.
    /// A uniform exponential grade is factored out first; the formal units
    /// `s`, `a` are read as 1 (they are positive scales).
    pub fn signature_at_origin(&self) -> Result<(usize, usize), LinalgError> {
        if !self.is_hermitian() {
            return Err(LinalgError::NotHermitian);
        }
        let mut grade: Option<i64> = None;
        for e in &self.entries {
            if e.is_zero() {
                continue;
            }
            match (grade, e.uniform_e_grade()) {
                (_, None) => return Err(LinalgError::MixedGrades),
                (None, Some(g)) => grade = Some(g),
                (Some(g0), Some(g)) if g0 != g => return Err(LinalgError::MixedGrades),
                _ => {}
            }
        }
        let g: Vec<Vec<GaussianRational>> = (0..self.n)
            .map(|i| (0..self.n).map(|j| self.entry(i, j).eval_origin()).collect())
            .collect();
        Ok(hermitian_signature(g))
    }
}

fn permutation_sign(perm: &[usize]) -> i64 {
    let mut sign = 1i64;
    let n = perm.len();
    for i in 0..n {
        for j in (i + 1)..n {
            if perm[i] > perm[j] {
                sign = -sign;
            }
        }
    }
    sign
}

/// Inverse of a single-term element whose positional exponents vanish.
fn invert_unit(x: &CoeffElem) -> Option<CoeffElem> {
    if x.num_terms() != 1 {
        return None;
    }
    let (m, c) = x.terms().next().unwrap();
    if !m.is_positional_unit() {
        return None;
    }
    let cinv = c.inv().ok()?;
    let (ms, ma, me) = (m.s, m.a, m.e);
    let mut out = CoeffElem::constant(x.arity(), cinv);
    out = &out * &CoeffElem::scale_pow(x.arity(), crate::algebra::ScaleGen::S, -ms);
    out = &out * &CoeffElem::scale_pow(x.arity(), crate::algebra::ScaleGen::A, -ma);
    out = &out * &CoeffElem::scale_pow(x.arity(), crate::algebra::ScaleGen::E, -me);
    Some(out)
}

/// Signature (p, q) of an exact hermitian matrix by congruence reduction.
/// Null directions contribute to neither count.
pub fn hermitian_signature(mut g: Vec<Vec<GaussianRational>>) -> (usize, usize) {
    let n = g.len();
    let mut alive: Vec<usize> = (0..n).collect();
    let (mut p, mut q) = (0usize, 0usize);
    while !alive.is_empty() {
        // prefer a nonzero diagonal pivot
        if let Some(&k) = alive.iter().find(|&&k| !g[k][k].is_zero()) {
            let pivot = g[k][k].clone();
            if pivot.re.is_positive() {
                p += 1;
            } else {
                q += 1;
            }
            alive.retain(|&i| i != k);
            for &i in &alive {
                let fi = g[i][k].div(&pivot).expect("nonzero pivot");
                if fi.is_zero() {
                    continue;
                }
                for &j in &alive {
                    let delta = &fi * &g[k][j];
                    g[i][j] = &g[i][j] - &delta;
                }
            }
            continue;
        }
        // all diagonals vanish: look for an off-diagonal coupling
        let mut pair = None;
        'outer: for (ai, &i) in alive.iter().enumerate() {
            for &j in &alive[ai + 1..] {
                if !g[i][j].is_zero() {
                    pair = Some((i, j));
                    break 'outer;
                }
            }
        }
        let Some((k, l)) = pair else {
            break; // remaining block is zero: degenerate directions
        };
        // congruence e_k -> e_k + lambda e_l creates a nonzero diagonal
        let lambda = if !g[k][l].re.is_zero() {
            GaussianRational::one()
        } else {
            GaussianRational::i()
        };
        let lb = lambda.conj();
        let row: Vec<(usize, GaussianRational)> = alive
            .iter()
            .map(|&j| (j, &g[k][j] + &(&lambda * &g[l][j])))
            .collect();
        for (j, v) in row {
            g[k][j] = v;
        }
        let col: Vec<(usize, GaussianRational)> = alive
            .iter()
            .map(|&i| (i, &g[i][k] + &(&lb * &g[i][l])))
            .collect();
        for (i, v) in col {
            g[i][k] = v;
        }
    }
    (p, q)
}
