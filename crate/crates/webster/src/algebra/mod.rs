//! Exact arithmetic layer: Gaussian rationals, sparse polynomial-like
//! coefficients with conjugation and formal scale/exponential units, and the
//! expression grammar.

mod coeff;
mod gaussian;
pub mod parse;

pub use coeff::{big_int, big_ratio, monomial, CoeffElem, Gen, Monomial, ScaleGen};
pub use gaussian::GaussianRational;
pub use parse::{parse_expr, print_expr};

use thiserror::Error;

#[derive(Error, Debug, Clone, PartialEq)]
pub enum AlgebraError {
    #[error("division by zero")]
    DivisionByZero,
    #[error("arity mismatch: {left} vs {right}")]
    ArityMismatch { left: usize, right: usize },
    #[error("syntax error at offset {offset}: {message}")]
    Parse { offset: usize, message: String },
    #[error("exponent function must be real: conj(Ups) != Ups")]
    NonRealExponent,
    #[error("exponent function must carry exponential grade 0")]
    GradedExponent,
}

/// Carrier for the formal exponential unit `E = e^Ups`.
///
/// While inactive, coefficients must carry exponential grade 0. When active,
/// every derivation applies `d(E^e) = e E^e dUps` uniformly.
#[derive(Clone, Debug, PartialEq)]
pub struct ExpContext {
    arity: usize,
    upsilon: Option<CoeffElem>,
}

impl ExpContext {
    pub fn inactive(arity: usize) -> Self {
        ExpContext {
            arity,
            upsilon: None,
        }
    }

    pub fn activate(upsilon: CoeffElem) -> Result<Self, AlgebraError> {
        if !upsilon.is_real() {
            return Err(AlgebraError::NonRealExponent);
        }
        if upsilon.has_e_grade() {
            return Err(AlgebraError::GradedExponent);
        }
        Ok(ExpContext {
            arity: upsilon.arity(),
            upsilon: Some(upsilon),
        })
    }

    pub fn arity(&self) -> usize {
        self.arity
    }

    pub fn is_active(&self) -> bool {
        self.upsilon.is_some()
    }

    pub fn exponent(&self) -> Option<&CoeffElem> {
        self.upsilon.as_ref()
    }
}
