//! Exterior calculus on R x C^n with exact coefficients: differential forms,
//! vector fields, d, wedge, contraction, Lie bracket/derivative, and pullback
//! along weighted diagonal maps.
//!
//! The covector basis is ordered `dt, dz1..dzn, dzb1..dzbn`; antisymmetry is
//! enforced by storing only strictly increasing multi-indices.

use std::collections::BTreeMap;
use std::fmt;

use serde_json::{json, Value};
use thiserror::Error;

use crate::algebra::{print_expr, CoeffElem, ExpContext, Gen, ScaleGen};

#[derive(Error, Debug, Clone, PartialEq)]
pub enum ExteriorError {
    #[error("ambient arity mismatch: {left} vs {right}")]
    ArityMismatch { left: usize, right: usize },
    #[error("evaluating a degree-{degree} form on {supplied} fields")]
    WrongEvaluationArity { degree: usize, supplied: usize },
}

/// Basis covector / derivation index: `0 = t`, `1..=n = z_j`, `n+1..=2n = zb_j`.
pub(crate) fn gen_of_index(idx: u8, arity: usize) -> Gen {
    let i = idx as usize;
    if i == 0 {
        Gen::T
    } else if i <= arity {
        Gen::Z(i - 1)
    } else {
        Gen::Zb(i - 1 - arity)
    }
}

pub(crate) fn index_of_gen(g: Gen, arity: usize) -> u8 {
    match g {
        Gen::T => 0,
        Gen::Z(j) => (j + 1) as u8,
        Gen::Zb(j) => (j + 1 + arity) as u8,
    }
}

pub fn covector_name(idx: u8, arity: usize) -> String {
    match gen_of_index(idx, arity) {
        Gen::T => "dt".into(),
        Gen::Z(j) => format!("dz{}", j + 1),
        Gen::Zb(j) => format!("dzb{}", j + 1),
    }
}

/// Merge two strictly increasing index lists, returning the merged list and
/// the sign of the permutation, or `None` when an index repeats.
fn merge_indices(a: &[u8], b: &[u8]) -> Option<(Vec<u8>, i64)> {
    let mut out = Vec::with_capacity(a.len() + b.len());
    let (mut i, mut j) = (0, 0);
    let mut sign = 1i64;
    while i < a.len() && j < b.len() {
        if a[i] == b[j] {
            return None;
        }
        if a[i] < b[j] {
            out.push(a[i]);
            i += 1;
        } else {
            // b[j] jumps over the remaining entries of a
            if (a.len() - i) % 2 == 1 {
                sign = -sign;
            }
            out.push(b[j]);
            j += 1;
        }
    }
    out.extend_from_slice(&a[i..]);
    out.extend_from_slice(&b[j..]);
    Some((out, sign))
}

/// A differential form with exact coefficients.
#[derive(Clone, PartialEq, Debug)]
pub struct DifferentialForm {
    arity: usize,
    degree: usize,
    terms: BTreeMap<Vec<u8>, CoeffElem>,
}

impl DifferentialForm {
    pub fn zero(arity: usize, degree: usize) -> Self {
        DifferentialForm {
            arity,
            degree,
            terms: BTreeMap::new(),
        }
    }

    pub fn scalar(f: CoeffElem) -> Self {
        let mut form = Self::zero(f.arity(), 0);
        form.add_term(vec![], f);
        form
    }

    pub fn basis(arity: usize, g: Gen) -> Self {
        let mut form = Self::zero(arity, 1);
        form.add_term(vec![index_of_gen(g, arity)], CoeffElem::one(arity));
        form
    }

    pub fn dt(arity: usize) -> Self {
        Self::basis(arity, Gen::T)
    }

    pub fn dz(arity: usize, j: usize) -> Self {
        Self::basis(arity, Gen::Z(j))
    }

    pub fn dzb(arity: usize, j: usize) -> Self {
        Self::basis(arity, Gen::Zb(j))
    }

    pub fn arity(&self) -> usize {
        self.arity
    }

    pub fn degree(&self) -> usize {
        self.degree
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn terms(&self) -> impl Iterator<Item = (&Vec<u8>, &CoeffElem)> {
        self.terms.iter()
    }

    /// Coefficient of a single basis covector (degree-1 forms).
    pub fn component(&self, g: Gen) -> CoeffElem {
        assert_eq!(self.degree, 1, "component lookup requires a 1-form");
        self.terms
            .get(&vec![index_of_gen(g, self.arity)])
            .cloned()
            .unwrap_or_else(|| CoeffElem::zero(self.arity))
    }

    fn add_term(&mut self, idx: Vec<u8>, c: CoeffElem) {
        if c.is_zero() {
            return;
        }
        debug_assert_eq!(idx.len(), self.degree);
        match self.terms.entry(idx) {
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

    fn check_arity(&self, other: usize) -> Result<(), ExteriorError> {
        if self.arity != other {
            return Err(ExteriorError::ArityMismatch {
                left: self.arity,
                right: other,
            });
        }
        Ok(())
    }

    pub fn add(&self, other: &Self) -> Self {
        self.check_arity(other.arity).expect("arity mismatch");
        if self.is_zero() {
            return other.clone();
        }
        if other.is_zero() {
            return self.clone();
        }
        assert_eq!(self.degree, other.degree, "degree mismatch in form sum");
        let mut out = self.clone();
        for (i, c) in &other.terms {
            out.add_term(i.clone(), c.clone());
        }
        out
    }

    pub fn sub(&self, other: &Self) -> Self {
        self.add(&other.neg())
    }

    pub fn neg(&self) -> Self {
        self.mul_scalar_int(-1)
    }

    pub fn mul_scalar_int(&self, k: i64) -> Self {
        let mut out = Self::zero(self.arity, self.degree);
        for (i, c) in &self.terms {
            out.add_term(i.clone(), c.scale_int(k));
        }
        out
    }

    /// Left multiplication by a function.
    pub fn mul_coeff(&self, f: &CoeffElem) -> Self {
        let mut out = Self::zero(self.arity, self.degree);
        for (i, c) in &self.terms {
            out.add_term(i.clone(), f * c);
        }
        out
    }

    pub fn try_wedge(&self, other: &Self) -> Result<Self, ExteriorError> {
        self.check_arity(other.arity)?;
        let mut out = Self::zero(self.arity, self.degree + other.degree);
        if out.degree > 2 * self.arity + 1 {
            return Ok(out);
        }
        for (i1, c1) in &self.terms {
            for (i2, c2) in &other.terms {
                if let Some((idx, sign)) = merge_indices(i1, i2) {
                    let mut c = c1 * c2;
                    if sign < 0 {
                        c = c.scale_int(-1);
                    }
                    out.add_term(idx, c);
                }
            }
        }
        Ok(out)
    }

    pub fn wedge(&self, other: &Self) -> Self {
        self.try_wedge(other).expect("arity mismatch in wedge")
    }

    /// Exterior derivative. Respects `d(E^e f) = E^e (df + e f dUps)` under
    /// an active exponential context.
    pub fn d(&self, ctx: &ExpContext) -> Self {
        let mut out = Self::zero(self.arity, self.degree + 1);
        for (idx, f) in &self.terms {
            for gi in 0..(2 * self.arity + 1) as u8 {
                let df = f.deriv_ctx(gen_of_index(gi, self.arity), ctx);
                if df.is_zero() {
                    continue;
                }
                if let Some((midx, sign)) = merge_indices(&[gi], idx) {
                    let c = if sign < 0 { df.scale_int(-1) } else { df };
                    out.add_term(midx, c);
                }
            }
        }
        out
    }

    /// Interior product with a vector field.
    pub fn try_contract(&self, x: &VectorField) -> Result<Self, ExteriorError> {
        self.check_arity(x.arity)?;
        assert!(self.degree >= 1, "contraction requires degree >= 1");
        let mut out = Self::zero(self.arity, self.degree - 1);
        for (idx, f) in &self.terms {
            for (k, gi) in idx.iter().enumerate() {
                if let Some(comp) = x.comps.get(gi) {
                    let mut rest = idx.clone();
                    rest.remove(k);
                    let mut c = f * comp;
                    if k % 2 == 1 {
                        c = c.scale_int(-1);
                    }
                    out.add_term(rest, c);
                }
            }
        }
        Ok(out)
    }

    pub fn contract(&self, x: &VectorField) -> Self {
        self.try_contract(x).expect("arity mismatch in contraction")
    }

    /// Full alternating evaluation of a k-form on k vector fields.
    pub fn try_evaluate(&self, fields: &[&VectorField]) -> Result<CoeffElem, ExteriorError> {
        if fields.len() != self.degree {
            return Err(ExteriorError::WrongEvaluationArity {
                degree: self.degree,
                supplied: fields.len(),
            });
        }
        let mut cur = self.clone();
        for x in fields {
            cur = cur.try_contract(x)?;
        }
        Ok(cur.as_scalar())
    }

    pub fn evaluate(&self, fields: &[&VectorField]) -> CoeffElem {
        self.try_evaluate(fields).expect("form evaluation arity")
    }

    pub fn as_scalar(&self) -> CoeffElem {
        assert_eq!(self.degree, 0);
        self.terms
            .get(&Vec::new())
            .cloned()
            .unwrap_or_else(|| CoeffElem::zero(self.arity))
    }

    /// Complex conjugation: swaps `dz_j <-> dzb_j` and conjugates coefficients.
    pub fn conj(&self) -> Self {
        let n = self.arity;
        let mut out = Self::zero(n, self.degree);
        for (idx, c) in &self.terms {
            let mapped: Vec<u8> = idx
                .iter()
                .map(|&i| index_of_gen(gen_of_index(i, n).conj(), n))
                .collect();
            let (sorted, sign) = sort_with_sign(mapped);
            let mut cc = c.conj();
            if sign < 0 {
                cc = cc.scale_int(-1);
            }
            out.add_term(sorted, cc);
        }
        out
    }

    /// Lie derivative via the Cartan formula `L_X = i_X d + d i_X`.
    pub fn lie_derive(&self, x: &VectorField, ctx: &ExpContext) -> Self {
        let a = self.d(ctx).contract(x);
        if self.degree == 0 {
            return a;
        }
        a.add(&self.contract(x).d(ctx))
    }

    /// Pullback along a weighted diagonal map: substitutes scaled generators
    /// in the coefficients and rescales each basis covector by its weight.
    pub fn pullback(&self, action: &DiagonalAction) -> Self {
        assert_eq!(self.arity, action.arity, "arity mismatch in pullback");
        let mut out = Self::zero(self.arity, self.degree);
        for (idx, c) in &self.terms {
            let mut sub = c.scale_weights(action.t_w, &action.z_w);
            let (mut ds, mut da) = (0i64, 0i64);
            for &i in idx {
                let (ws, wa) = action.weight_of_index(i);
                ds += ws;
                da += wa;
            }
            if ds != 0 {
                sub = &sub * &CoeffElem::scale_pow(self.arity, ScaleGen::S, ds);
            }
            if da != 0 {
                sub = &sub * &CoeffElem::scale_pow(self.arity, ScaleGen::A, da);
            }
            out.add_term(idx.clone(), sub);
        }
        out
    }

    pub fn to_json(&self) -> Value {
        let terms: Vec<Value> = self
            .terms
            .iter()
            .map(|(idx, c)| {
                json!({
                    "index": idx.iter().map(|&i| covector_name(i, self.arity)).collect::<Vec<_>>(),
                    "coeff": print_expr(c),
                })
            })
            .collect();
        json!({ "degree": self.degree, "terms": terms })
    }
}

fn sort_with_sign(mut v: Vec<u8>) -> (Vec<u8>, i64) {
    let mut sign = 1i64;
    for i in 1..v.len() {
        let mut j = i;
        while j > 0 && v[j - 1] > v[j] {
            v.swap(j - 1, j);
            sign = -sign;
            j -= 1;
        }
    }
    (v, sign)
}

impl fmt::Display for DifferentialForm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.is_zero() {
            return write!(f, "0");
        }
        let parts: Vec<String> = self
            .terms
            .iter()
            .map(|(idx, c)| {
                let basis: Vec<String> = idx
                    .iter()
                    .map(|&i| covector_name(i, self.arity))
                    .collect();
                if basis.is_empty() {
                    format!("({})", print_expr(c))
                } else {
                    format!("({}) {}", print_expr(c), basis.join("^"))
                }
            })
            .collect();
        write!(f, "{}", parts.join(" + "))
    }
}

/// A derivation with exact coefficients over the basis `d/dt, d/dz_j, d/dzb_j`.
#[derive(Clone, PartialEq, Debug)]
pub struct VectorField {
    arity: usize,
    comps: BTreeMap<u8, CoeffElem>,
}

impl VectorField {
    pub fn zero(arity: usize) -> Self {
        VectorField {
            arity,
            comps: BTreeMap::new(),
        }
    }

    pub fn basis(arity: usize, g: Gen) -> Self {
        let mut v = Self::zero(arity);
        v.set(g, CoeffElem::one(arity));
        v
    }

    pub fn arity(&self) -> usize {
        self.arity
    }

    pub fn is_zero(&self) -> bool {
        self.comps.is_empty()
    }

    pub fn component(&self, g: Gen) -> CoeffElem {
        self.comps
            .get(&index_of_gen(g, self.arity))
            .cloned()
            .unwrap_or_else(|| CoeffElem::zero(self.arity))
    }

    pub fn set(&mut self, g: Gen, c: CoeffElem) {
        let idx = index_of_gen(g, self.arity);
        if c.is_zero() {
            self.comps.remove(&idx);
        } else {
            self.comps.insert(idx, c);
        }
    }

    pub fn components(&self) -> impl Iterator<Item = (Gen, &CoeffElem)> {
        self.comps
            .iter()
            .map(|(&i, c)| (gen_of_index(i, self.arity), c))
    }

    pub fn add(&self, other: &Self) -> Self {
        assert_eq!(self.arity, other.arity, "arity mismatch in field sum");
        let mut out = self.clone();
        for (&i, c) in &other.comps {
            let cur = out
                .comps
                .get(&i)
                .cloned()
                .unwrap_or_else(|| CoeffElem::zero(self.arity));
            let sum = &cur + c;
            if sum.is_zero() {
                out.comps.remove(&i);
            } else {
                out.comps.insert(i, sum);
            }
        }
        out
    }

    pub fn sub(&self, other: &Self) -> Self {
        self.add(&other.mul_coeff(&CoeffElem::from_int(self.arity, -1)))
    }

    pub fn mul_coeff(&self, f: &CoeffElem) -> Self {
        let mut out = Self::zero(self.arity);
        for (&i, c) in &self.comps {
            let prod = f * c;
            if !prod.is_zero() {
                out.comps.insert(i, prod);
            }
        }
        out
    }

    /// Apply the derivation to a function.
    pub fn apply(&self, f: &CoeffElem, ctx: &ExpContext) -> CoeffElem {
        let mut out = CoeffElem::zero(self.arity);
        for (&i, comp) in &self.comps {
            let df = f.deriv_ctx(gen_of_index(i, self.arity), ctx);
            if !df.is_zero() {
                out = &out + &(comp * &df);
            }
        }
        out
    }

    pub fn conj(&self) -> Self {
        let mut out = Self::zero(self.arity);
        for (&i, c) in &self.comps {
            let g = gen_of_index(i, self.arity).conj();
            out.set(g, c.conj());
        }
        out
    }

    /// Type (1,0) test: every `d/dzb_j` component vanishes.
    pub fn is_type_10(&self) -> bool {
        self.components()
            .all(|(g, _)| !matches!(g, Gen::Zb(_)))
    }

    pub fn try_bracket(&self, other: &Self, ctx: &ExpContext) -> Result<Self, ExteriorError> {
        if self.arity != other.arity {
            return Err(ExteriorError::ArityMismatch {
                left: self.arity,
                right: other.arity,
            });
        }
        let mut out = Self::zero(self.arity);
        for gi in 0..(2 * self.arity + 1) as u8 {
            let g = gen_of_index(gi, self.arity);
            let yg = other.component(g);
            let xg = self.component(g);
            let c = &self.apply(&yg, ctx) - &other.apply(&xg, ctx);
            out.set(g, c);
        }
        Ok(out)
    }

    pub fn bracket(&self, other: &Self, ctx: &ExpContext) -> Self {
        self.try_bracket(other, ctx).expect("arity mismatch in bracket")
    }

    pub fn to_json(&self) -> Value {
        let comps: Vec<Value> = self
            .comps
            .iter()
            .map(|(&i, c)| {
                let name = match gen_of_index(i, self.arity) {
                    Gen::T => "d/dt".to_string(),
                    Gen::Z(j) => format!("d/dz{}", j + 1),
                    Gen::Zb(j) => format!("d/dzb{}", j + 1),
                };
                json!({ "basis": name, "coeff": print_expr(c) })
            })
            .collect();
        json!({ "components": comps })
    }
}

/// A weighted diagonal scaling of `R x C^n`: each coordinate is multiplied by
/// a Laurent monomial in the formal units `(s, a)`. Conjugate coordinates
/// carry the same (real) weight.
#[derive(Clone, PartialEq, Debug)]
pub struct DiagonalAction {
    arity: usize,
    pub t_w: (i64, i64),
    pub z_w: Vec<(i64, i64)>,
}

impl DiagonalAction {
    pub fn new(t_w: (i64, i64), z_w: Vec<(i64, i64)>) -> Self {
        DiagonalAction {
            arity: z_w.len(),
            t_w,
            z_w,
        }
    }

    pub fn identity(arity: usize) -> Self {
        DiagonalAction {
            arity,
            t_w: (0, 0),
            z_w: vec![(0, 0); arity],
        }
    }

    pub fn arity(&self) -> usize {
        self.arity
    }

    fn weight_of_index(&self, idx: u8) -> (i64, i64) {
        match gen_of_index(idx, self.arity) {
            Gen::T => self.t_w,
            Gen::Z(j) | Gen::Zb(j) => self.z_w[j],
        }
    }

    /// Composition adds weight exponents.
    pub fn compose(&self, other: &Self) -> Self {
        assert_eq!(self.arity, other.arity);
        DiagonalAction {
            arity: self.arity,
            t_w: (self.t_w.0 + other.t_w.0, self.t_w.1 + other.t_w.1),
            z_w: self
                .z_w
                .iter()
                .zip(&other.z_w)
                .map(|(x, y)| (x.0 + y.0, x.1 + y.1))
                .collect(),
        }
    }

    /// Substitute the scaled coordinates into a function.
    pub fn apply_coeff(&self, f: &CoeffElem) -> CoeffElem {
        f.scale_weights(self.t_w, &self.z_w)
    }

    /// Infinitesimal generator of `tau -> (s = e^{-tau}, a = 1)`: the
    /// essential-field candidate `X = sum -k_g x_g d/dx_g` over the s-weights.
    pub fn flow_generator(&self) -> VectorField {
        let n = self.arity;
        let mut x = VectorField::zero(n);
        if self.t_w.0 != 0 {
            x.set(Gen::T, CoeffElem::var(n, Gen::T).scale_int(-self.t_w.0));
        }
        for (j, &(k, _)) in self.z_w.iter().enumerate() {
            if k != 0 {
                x.set(Gen::Z(j), CoeffElem::var(n, Gen::Z(j)).scale_int(-k));
                x.set(Gen::Zb(j), CoeffElem::var(n, Gen::Zb(j)).scale_int(-k));
            }
        }
        x
    }

    /// Numeric per-coordinate factors for parameters `s = e^beta`, `a = e^alpha`.
    pub fn numeric_factors(&self, beta: f64, alpha: f64) -> (f64, Vec<f64>) {
        let t = (beta * self.t_w.0 as f64 + alpha * self.t_w.1 as f64).exp();
        let z = self
            .z_w
            .iter()
            .map(|&(k, l)| (beta * k as f64 + alpha * l as f64).exp())
            .collect();
        (t, z)
    }

    pub fn to_json(&self) -> Value {
        json!({
            "t": { "s": self.t_w.0, "a": self.t_w.1 },
            "z": self.z_w.iter().map(|&(k, l)| json!({ "s": k, "a": l })).collect::<Vec<_>>(),
        })
    }
}
