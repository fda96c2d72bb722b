//! Sparse exact coefficients on R x C^n: Gaussian-rational combinations of
//! monomials in `t`, `z_j`, `zb_j`, with Laurent exponents in the formal scale
//! units `s`, `a` and the formal exponential grade `E`.
//!
//! `zb_j` is an independent generator tied to `z_j` only through the
//! conjugation involution; this keeps every computation polynomial.

use num::{BigInt, BigRational};
use std::collections::BTreeMap;
use std::fmt;
use std::ops::{Add, Mul, Neg, Sub};

use super::gaussian::GaussianRational;
use super::{AlgebraError, ExpContext};

/// A positional generator: `t`, `z_j`, or `zb_j` (0-based index).
#[derive(Clone, Copy, PartialEq, Eq, Debug)]
pub enum Gen {
    T,
    Z(usize),
    Zb(usize),
}

impl Gen {
    pub fn conj(self) -> Gen {
        match self {
            Gen::T => Gen::T,
            Gen::Z(j) => Gen::Zb(j),
            Gen::Zb(j) => Gen::Z(j),
        }
    }
}

/// Formal scale units with Laurent exponents.
#[derive(Clone, Copy, PartialEq, Eq, Debug)]
pub enum ScaleGen {
    S,
    A,
    E,
}

/// Exponent vector of a single monomial. Positional exponents are
/// non-negative; `s`, `a`, `e` range over all integers.
#[derive(Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Debug)]
pub struct Monomial {
    pub(crate) t: u32,
    pub(crate) z: Vec<u32>,
    pub(crate) zb: Vec<u32>,
    pub(crate) s: i64,
    pub(crate) a: i64,
    pub(crate) e: i64,
}

impl Monomial {
    pub(crate) fn unit(arity: usize) -> Self {
        Monomial {
            t: 0,
            z: vec![0; arity],
            zb: vec![0; arity],
            s: 0,
            a: 0,
            e: 0,
        }
    }

    pub(crate) fn is_unit(&self) -> bool {
        self.t == 0
            && self.z.iter().all(|&k| k == 0)
            && self.zb.iter().all(|&k| k == 0)
            && self.s == 0
            && self.a == 0
            && self.e == 0
    }

    /// All positional exponents vanish (s/a/e may not).
    pub(crate) fn is_positional_unit(&self) -> bool {
        self.t == 0 && self.z.iter().all(|&k| k == 0) && self.zb.iter().all(|&k| k == 0)
    }

    fn mul(&self, other: &Monomial) -> Monomial {
        Monomial {
            t: self.t + other.t,
            z: self
                .z
                .iter()
                .zip(&other.z)
                .map(|(x, y)| x + y)
                .collect(),
            zb: self
                .zb
                .iter()
                .zip(&other.zb)
                .map(|(x, y)| x + y)
                .collect(),
            s: self.s + other.s,
            a: self.a + other.a,
            e: self.e + other.e,
        }
    }

    fn conj(&self) -> Monomial {
        Monomial {
            t: self.t,
            z: self.zb.clone(),
            zb: self.z.clone(),
            s: self.s,
            a: self.a,
            e: self.e,
        }
    }

    pub(crate) fn exp(&self, g: Gen) -> u32 {
        match g {
            Gen::T => self.t,
            Gen::Z(j) => self.z[j],
            Gen::Zb(j) => self.zb[j],
        }
    }

    fn with_exp(&self, g: Gen, k: u32) -> Monomial {
        let mut m = self.clone();
        match g {
            Gen::T => m.t = k,
            Gen::Z(j) => m.z[j] = k,
            Gen::Zb(j) => m.zb[j] = k,
        }
        m
    }
}

/// A canonical sparse element of the coefficient ring.
///
/// Terms are kept in a `BTreeMap` sorted by the exponent vector, with no zero
/// coefficients; equality is structural on this canonical form.
#[derive(Clone, PartialEq, Eq, Debug)]
pub struct CoeffElem {
    arity: usize,
    terms: BTreeMap<Monomial, GaussianRational>,
}

impl CoeffElem {
    pub fn zero(arity: usize) -> Self {
        CoeffElem {
            arity,
            terms: BTreeMap::new(),
        }
    }

    pub fn one(arity: usize) -> Self {
        Self::constant(arity, GaussianRational::one())
    }

    pub fn constant(arity: usize, c: GaussianRational) -> Self {
        let mut e = Self::zero(arity);
        e.add_term(Monomial::unit(arity), c);
        e
    }

    pub fn from_int(arity: usize, n: i64) -> Self {
        Self::constant(arity, GaussianRational::from_int(n))
    }

    pub fn from_ratio(arity: usize, p: i64, q: i64) -> Self {
        Self::constant(arity, GaussianRational::from_ratio(p, q))
    }

    pub fn i_unit(arity: usize) -> Self {
        Self::constant(arity, GaussianRational::i())
    }

    pub fn var(arity: usize, g: Gen) -> Self {
        Self::var_pow(arity, g, 1)
    }

    pub fn var_pow(arity: usize, g: Gen, k: u32) -> Self {
        if let Gen::Z(j) | Gen::Zb(j) = g {
            assert!(j < arity, "generator index {} out of range for arity {}", j, arity);
        }
        let mut e = Self::zero(arity);
        e.add_term(Monomial::unit(arity).with_exp(g, k), GaussianRational::one());
        e
    }

    /// A pure power of a formal scale unit: `s^k`, `a^k` or `E^k`.
    pub fn scale_pow(arity: usize, which: ScaleGen, k: i64) -> Self {
        let mut m = Monomial::unit(arity);
        match which {
            ScaleGen::S => m.s = k,
            ScaleGen::A => m.a = k,
            ScaleGen::E => m.e = k,
        }
        let mut e = Self::zero(arity);
        e.add_term(m, GaussianRational::one());
        e
    }

    pub fn arity(&self) -> usize {
        self.arity
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn is_real(&self) -> bool {
        self.conj() == *self
    }

    pub fn num_terms(&self) -> usize {
        self.terms.len()
    }

    /// The constant value if this element is a single s/a/e-free constant
    /// term (or zero).
    pub fn as_constant(&self) -> Option<GaussianRational> {
        if self.terms.is_empty() {
            return Some(GaussianRational::zero());
        }
        if self.terms.len() == 1 {
            let (m, c) = self.terms.iter().next().unwrap();
            if m.is_unit() {
                return Some(c.clone());
            }
        }
        None
    }

    /// True when the element is the stated exact rational constant.
    pub fn is_const_int(&self, n: i64) -> bool {
        self.as_constant()
            .map(|c| c == GaussianRational::from_int(n))
            .unwrap_or(false)
    }

    pub fn terms(&self) -> impl Iterator<Item = (&Monomial, &GaussianRational)> {
        self.terms.iter()
    }

    pub(crate) fn add_term(&mut self, m: Monomial, c: GaussianRational) {
        if c.is_zero() {
            return;
        }
        match self.terms.entry(m) {
            std::collections::btree_map::Entry::Vacant(v) => {
                v.insert(c);
            }
            std::collections::btree_map::Entry::Occupied(mut o) => {
                let sum = o.get() + &c;
                if sum.is_zero() {
                    o.remove();
                } else {
                    *o.get_mut() = sum;
                }
            }
        }
    }

    fn check_arity(&self, other: &Self) -> Result<(), AlgebraError> {
        if self.arity != other.arity {
            return Err(AlgebraError::ArityMismatch {
                left: self.arity,
                right: other.arity,
            });
        }
        Ok(())
    }

    pub fn try_add(&self, other: &Self) -> Result<Self, AlgebraError> {
        self.check_arity(other)?;
        let mut out = self.clone();
        for (m, c) in &other.terms {
            out.add_term(m.clone(), c.clone());
        }
        Ok(out)
    }

    pub fn try_sub(&self, other: &Self) -> Result<Self, AlgebraError> {
        self.check_arity(other)?;
        let mut out = self.clone();
        for (m, c) in &other.terms {
            out.add_term(m.clone(), -c);
        }
        Ok(out)
    }

    pub fn try_mul(&self, other: &Self) -> Result<Self, AlgebraError> {
        self.check_arity(other)?;
        let mut out = Self::zero(self.arity);
        for (m1, c1) in &self.terms {
            for (m2, c2) in &other.terms {
                out.add_term(m1.mul(m2), c1 * c2);
            }
        }
        Ok(out)
    }

    pub fn scale(&self, c: &GaussianRational) -> Self {
        if c.is_zero() {
            return Self::zero(self.arity);
        }
        let mut out = Self::zero(self.arity);
        for (m, v) in &self.terms {
            out.add_term(m.clone(), v * c);
        }
        out
    }

    pub fn scale_int(&self, n: i64) -> Self {
        self.scale(&GaussianRational::from_int(n))
    }

    pub fn pow(&self, k: u32) -> Self {
        let mut out = Self::one(self.arity);
        for _ in 0..k {
            out = &out * self;
        }
        out
    }

    /// Conjugation: swaps `z_j <-> zb_j`, conjugates coefficients, fixes
    /// `t`, `s`, `a` and the exponential grade.
    pub fn conj(&self) -> Self {
        let mut out = Self::zero(self.arity);
        for (m, c) in &self.terms {
            out.add_term(m.conj(), c.conj());
        }
        out
    }

    /// Positional partial derivative; `s`, `a`, `E` are formal constants here.
    pub fn deriv(&self, g: Gen) -> Self {
        let mut out = Self::zero(self.arity);
        for (m, c) in &self.terms {
            let k = m.exp(g);
            if k == 0 {
                continue;
            }
            out.add_term(m.with_exp(g, k - 1), c.scale_int(k as i64));
        }
        out
    }

    /// Partial derivative respecting the exponential grading of an active
    /// context: `d(E^e f) = E^e (df + e f dUps)` componentwise.
    pub fn deriv_ctx(&self, g: Gen, ctx: &ExpContext) -> Self {
        let mut out = self.deriv(g);
        let graded: Vec<(&Monomial, &GaussianRational)> =
            self.terms.iter().filter(|(m, _)| m.e != 0).collect();
        if graded.is_empty() {
            return out;
        }
        let ups = ctx
            .exponent()
            .expect("exponentially graded coefficient used without an active context");
        let dups = ups.deriv(g);
        if dups.is_zero() {
            return out;
        }
        for (m, c) in graded {
            let mut part = Self::zero(self.arity);
            part.add_term(m.clone(), c.scale_int(m.e));
            out = &out + &(&part * &dups);
        }
        out
    }

    /// Substitute `g -> s^k a^l g` for every positional generator, per the
    /// supplied weight table (`zb_j` carries the same real weight as `z_j`).
    pub fn scale_weights(&self, t_w: (i64, i64), z_w: &[(i64, i64)]) -> Self {
        assert_eq!(z_w.len(), self.arity, "weight table arity mismatch");
        let mut out = Self::zero(self.arity);
        for (m, c) in &self.terms {
            let mut ds = m.t as i64 * t_w.0;
            let mut da = m.t as i64 * t_w.1;
            for j in 0..self.arity {
                let tot = m.z[j] as i64 + m.zb[j] as i64;
                ds += tot * z_w[j].0;
                da += tot * z_w[j].1;
            }
            let mut m2 = m.clone();
            m2.s += ds;
            m2.a += da;
            out.add_term(m2, c.clone());
        }
        out
    }

    /// Multiply by `E^k`.
    pub fn shift_e(&self, k: i64) -> Self {
        let mut out = Self::zero(self.arity);
        for (m, c) in &self.terms {
            let mut m2 = m.clone();
            m2.e += k;
            out.add_term(m2, c.clone());
        }
        out
    }

    /// The common exponential grade of all terms, if one exists.
    pub fn uniform_e_grade(&self) -> Option<i64> {
        let mut grade = None;
        for (m, _) in &self.terms {
            match grade {
                None => grade = Some(m.e),
                Some(g) if g != m.e => return None,
                _ => {}
            }
        }
        Some(grade.unwrap_or(0))
    }

    /// Whether any term carries a nonzero exponential grade.
    pub fn has_e_grade(&self) -> bool {
        self.terms.iter().any(|(m, _)| m.e != 0)
    }

    /// Value at `t = z = zb = 0` with the formal units `s`, `a` read as 1.
    pub fn eval_origin(&self) -> GaussianRational {
        let mut out = GaussianRational::zero();
        for (m, c) in &self.terms {
            if m.is_positional_unit() {
                out = &out + c;
            }
        }
        out
    }

    /// If `self == lambda * other` for an exact scalar lambda, return it.
    pub fn constant_ratio_to(&self, other: &Self) -> Option<GaussianRational> {
        if other.is_zero() {
            return if self.is_zero() {
                Some(GaussianRational::zero())
            } else {
                None
            };
        }
        let (m, c) = other.terms.iter().next().unwrap();
        let lead = self.terms.get(m)?;
        let lambda = lead.div(c).ok()?;
        if &other.scale(&lambda) == self {
            Some(lambda)
        } else {
            None
        }
    }

    /// Total degree in the positional generators.
    pub fn positional_degree(&self) -> u32 {
        self.terms
            .keys()
            .map(|m| m.t + m.z.iter().sum::<u32>() + m.zb.iter().sum::<u32>())
            .max()
            .unwrap_or(0)
    }
}

impl Add for &CoeffElem {
    type Output = CoeffElem;
    fn add(self, rhs: &CoeffElem) -> CoeffElem {
        self.try_add(rhs).expect("coefficient arity mismatch")
    }
}

impl Sub for &CoeffElem {
    type Output = CoeffElem;
    fn sub(self, rhs: &CoeffElem) -> CoeffElem {
        self.try_sub(rhs).expect("coefficient arity mismatch")
    }
}

impl Mul for &CoeffElem {
    type Output = CoeffElem;
    fn mul(self, rhs: &CoeffElem) -> CoeffElem {
        self.try_mul(rhs).expect("coefficient arity mismatch")
    }
}

impl Neg for &CoeffElem {
    type Output = CoeffElem;
    fn neg(self) -> CoeffElem {
        self.scale_int(-1)
    }
}

impl fmt::Display for CoeffElem {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", super::parse::print_expr(self))
    }
}

/// Convenience: `c * t^kt * prod z^kz * prod zb^kzb * s^ks * a^ka * E^ke`.
pub fn monomial(
    arity: usize,
    c: GaussianRational,
    t: u32,
    z: &[(usize, u32)],
    zb: &[(usize, u32)],
    s: i64,
    a: i64,
    e: i64,
) -> CoeffElem {
    let mut m = Monomial::unit(arity);
    m.t = t;
    for &(j, k) in z {
        m.z[j] += k;
    }
    for &(j, k) in zb {
        m.zb[j] += k;
    }
    m.s = s;
    m.a = a;
    m.e = e;
    let mut out = CoeffElem::zero(arity);
    out.add_term(m, c);
    out
}

pub fn big_ratio(p: i64, q: i64) -> BigRational {
    BigRational::new(BigInt::from(p), BigInt::from(q))
}

pub fn big_int(n: i64) -> BigRational {
    BigRational::from_integer(BigInt::from(n))
}
