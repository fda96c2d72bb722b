//! Builders for the hypersurface family under study: the signature-(p,q)
//! models on `R x C^{p+q}`, the noncompact Lorentzian reduction, their
//! weighted diagonal symmetries and essential fields, and the quartic
//! trace-free check.

use num::{BigInt, BigRational};
use serde_json::{json, Value};
use thiserror::Error;

use crate::algebra::{big_ratio, parse_expr, print_expr, CoeffElem, Gen};
use crate::exterior::DiagonalAction;
use crate::linalg::CMatrix;
use crate::pseudohermitian::{
    complete_structure, contact_from_defining, curvature, solve_connection, Connection,
    CurvatureData, PHStructure, PhError,
};

#[derive(Error, Debug, Clone, PartialEq)]
pub enum ModelError {
    #[error("signature precondition violated: need 2 <= p <= q, got ({p},{q})")]
    BadSignature { p: usize, q: usize },
    #[error("desk-scale cap exceeded: {0}")]
    CapExceeded(String),
    #[error("lorentzian precondition violated: need 2 <= n <= 5, got {0}")]
    BadLorentzianArity(usize),
    #[error("quotient parameters must satisfy 4*beta < alpha < 0")]
    BadQuotientParams,
    #[error("self-check failed: {0}")]
    SelfCheck(String),
    #[error("quartic must depend only on z, zb")]
    BadQuartic,
    #[error(transparent)]
    Ph(#[from] PhError),
}

#[derive(Clone, Copy, PartialEq, Eq, Debug)]
pub enum ExampleKind {
    /// Compact-quotient family of signature (p, q), p, q >= 2.
    Pq(usize, usize),
    /// Noncompact model of signature (1, n-1).
    Lorentzian(usize),
}

/// A fully built model: defining data, structure, connection, curvature,
/// the diagonal symmetry and its essential-field generator, and quotient
/// parameters.
#[derive(Clone, Debug)]
pub struct ExampleSpec {
    pub kind: ExampleKind,
    pub arity: usize,
    /// Defining function `r = Imw - rho`, with `Imw` on the `t` slot.
    pub defining: CoeffElem,
    /// `rho = h(z, zb) + |z1|^4`: the graph function of the hypersurface.
    pub rho: CoeffElem,
    pub structure: PHStructure,
    pub connection: Connection,
    pub curvature: CurvatureData,
    pub action: DiagonalAction,
    pub flow_generator: crate::exterior::VectorField,
    pub alpha: BigRational,
    pub beta: BigRational,
}

impl ExampleSpec {
    pub fn signature(&self) -> (usize, usize) {
        self.structure.signature
    }

    pub fn to_json(&self) -> Value {
        let kind = match self.kind {
            ExampleKind::Pq(p, q) => format!("pq:{},{}", p, q),
            ExampleKind::Lorentzian(n) => format!("lorentzian:{}", n),
        };
        json!({
            "kind": kind,
            "arity": self.arity,
            "defining": print_expr(&self.defining),
            "signature": [self.signature().0, self.signature().1],
            "weights": self.action.to_json(),
            "alpha": format!("{}", self.alpha),
            "beta": format!("{}", self.beta),
        })
    }
}

fn hermitian_pair(n: usize, a: usize, b: usize) -> CoeffElem {
    // z_a zb_b + z_b zb_a
    let za = CoeffElem::var(n, Gen::Z(a));
    let zb = CoeffElem::var(n, Gen::Z(b));
    let zab = CoeffElem::var(n, Gen::Zb(a));
    let zbb = CoeffElem::var(n, Gen::Zb(b));
    &(&za * &zbb) + &(&zb * &zab)
}

fn norm_sq(n: usize, j: usize) -> CoeffElem {
    &CoeffElem::var(n, Gen::Z(j)) * &CoeffElem::var(n, Gen::Zb(j))
}

fn default_params() -> (BigRational, BigRational) {
    (big_ratio(-1, 1), big_ratio(-5, 4))
}

fn check_params(alpha: &BigRational, beta: &BigRational) -> Result<(), ModelError> {
    let zero = BigRational::from_integer(BigInt::from(0));
    let four = BigRational::from_integer(BigInt::from(4));
    if !(&(&four * beta) < alpha && alpha < &zero) {
        return Err(ModelError::BadQuotientParams);
    }
    Ok(())
}

fn finish_build(
    kind: ExampleKind,
    n: usize,
    rho: CoeffElem,
    action: DiagonalAction,
    expect_sig: (usize, usize),
    alpha: BigRational,
    beta: BigRational,
) -> Result<ExampleSpec, ModelError> {
    let defining = &CoeffElem::var(n, Gen::T) - &rho;
    let theta = contact_from_defining(&defining, n)?;
    let coframe: Vec<_> = (0..n).map(|j| crate::exterior::DifferentialForm::dz(n, j)).collect();
    let structure = complete_structure(&theta, &coframe)?;
    if structure.signature != expect_sig {
        return Err(ModelError::SelfCheck(format!(
            "signature {:?} differs from expected {:?}",
            structure.signature, expect_sig
        )));
    }
    let connection = solve_connection(&structure)?;
    let curv = curvature(&structure, &connection)?;
    if !curv.ricci_is_zero() {
        return Err(ModelError::SelfCheck("Ricci tensor does not vanish".into()));
    }
    if curv.chern_is_zero() {
        return Err(ModelError::SelfCheck(
            "trace-free curvature vanishes: model is flat".into(),
        ));
    }
    let flow_generator = action.flow_generator();
    Ok(ExampleSpec {
        kind,
        arity: n,
        defining,
        rho,
        structure,
        connection,
        curvature: curv,
        action,
        flow_generator,
        alpha,
        beta,
    })
}

/// Build the signature-(p,q) model, `2 <= p <= q`, `p + q <= 6`.
///
/// The hermitian form pairs `(z1, z2)` and `(z3, z4)` hyperbolically and
/// appends `+|z_j|^2` for `5 <= j <= p+2`, `-|z_k|^2` for `p+3 <= k <= p+q`;
/// the quartic `|z1|^4` makes the model non-flat. The diagonal action scales
/// `(t; z1, z2, z3, z4; z_{>=5})` by `(s^4; s, s^3, s^4/a, a; s^2)`.
pub fn build_example(p: usize, q: usize) -> Result<ExampleSpec, ModelError> {
    build_example_with_params(p, q, None)
}

pub fn build_example_with_params(
    p: usize,
    q: usize,
    params: Option<(BigRational, BigRational)>,
) -> Result<ExampleSpec, ModelError> {
    if !(2 <= p && p <= q) {
        return Err(ModelError::BadSignature { p, q });
    }
    if p + q > 6 {
        return Err(ModelError::CapExceeded(format!("p + q = {} > 6", p + q)));
    }
    let n = p + q;
    let mut h = &hermitian_pair(n, 0, 1) + &hermitian_pair(n, 2, 3);
    for j in 5..=(p + 2) {
        h = &h + &norm_sq(n, j - 1);
    }
    for k in (p + 3)..=(p + q) {
        h = &h - &norm_sq(n, k - 1);
    }
    let rho = &h + &norm_sq(n, 0).pow(2);
    let mut z_w = vec![(1, 0), (3, 0), (4, -1), (0, 1)];
    z_w.extend(std::iter::repeat((2, 0)).take(n - 4));
    let action = DiagonalAction::new((4, 0), z_w);
    let (alpha, beta) = params.unwrap_or_else(default_params);
    check_params(&alpha, &beta)?;
    finish_build(ExampleKind::Pq(p, q), n, rho, action, (p, q), alpha, beta)
}

/// Build the noncompact Lorentzian model of signature (1, n-1), `2 <= n <= 5`:
/// the hyperbolic `(z1, z2)` pair plus the quartic, extended for `n > 2` by
/// negative squares `-|z_j|^2` with weight `s^2`. The one-parameter diagonal
/// scaling fixes the origin, so its generator is an essential candidate.
pub fn build_lorentzian(n: usize) -> Result<ExampleSpec, ModelError> {
    if !(2..=5).contains(&n) {
        return Err(ModelError::BadLorentzianArity(n));
    }
    let mut h = hermitian_pair(n, 0, 1);
    for j in 3..=n {
        h = &h - &norm_sq(n, j - 1);
    }
    let rho = &h + &norm_sq(n, 0).pow(2);
    let mut z_w = vec![(1, 0), (3, 0)];
    z_w.extend(std::iter::repeat((2, 0)).take(n - 2));
    let action = DiagonalAction::new((4, 0), z_w);
    let (alpha, beta) = default_params();
    finish_build(
        ExampleKind::Lorentzian(n),
        n,
        rho,
        action,
        (1, n - 1),
        alpha,
        beta,
    )
}

/// The flat two-pair model (no quartic): hyperbolic Levi form `[[0,1],[1,0]]`
/// of signature (1,1), vanishing connection and curvature. Used as the zero
/// reference in tests and checks.
pub fn flat_model() -> (PHStructure, Connection, CurvatureData) {
    let n = 2;
    let rho = hermitian_pair(n, 0, 1);
    let defining = &CoeffElem::var(n, Gen::T) - &rho;
    let theta = contact_from_defining(&defining, n).expect("flat model contact form");
    let coframe: Vec<_> = (0..n).map(|j| crate::exterior::DifferentialForm::dz(n, j)).collect();
    let structure = complete_structure(&theta, &coframe).expect("flat model structure");
    let connection = solve_connection(&structure).expect("flat model connection");
    let curv = curvature(&structure, &connection).expect("flat model curvature");
    (structure, connection, curv)
}

/// Exact trace `h^{ab} d_{z_a} d_{zb_b} (quartic)`: zero certifies that the
/// quartic perturbation is trace-free for the given hermitian form.
pub fn normal_form_tracefree_check(
    quartic: &CoeffElem,
    h: &CMatrix,
) -> Result<CoeffElem, ModelError> {
    let n = h.n;
    for (m, _) in quartic.terms() {
        if m.exp(Gen::T) != 0 {
            return Err(ModelError::BadQuartic);
        }
    }
    let hinv = h.inverse().map_err(PhError::from)?;
    let mut acc = CoeffElem::zero(quartic.arity());
    for a in 0..n {
        for b in 0..n {
            let up = hinv.entry(b, a); // h^{ab}
            if up.is_zero() {
                continue;
            }
            let dd = quartic.deriv(Gen::Z(a)).deriv(Gen::Zb(b));
            if dd.is_zero() {
                continue;
            }
            acc = &acc + &(up * &dd);
        }
    }
    Ok(acc)
}

/// The hermitian form of the (p,q) model as a matrix (constant part of the
/// Levi form at the origin).
pub fn model_hermitian_matrix(p: usize, q: usize) -> CMatrix {
    let n = p + q;
    CMatrix::from_fn(n, n, |i, j| {
        let v: i64 = match (i, j) {
            (0, 1) | (1, 0) | (2, 3) | (3, 2) => 1,
            _ if i == j && i >= 4 => {
                if i + 1 <= p + 2 {
                    1
                } else {
                    -1
                }
            }
            _ => 0,
        };
        CoeffElem::from_int(n, v)
    })
}

/// Parse a coefficient over the model's arity (spec strings in tests/CLI).
pub fn parse_on(n: usize, text: &str) -> CoeffElem {
    parse_expr(text, n).expect("fixed expression parses")
}
