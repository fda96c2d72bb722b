//! Exact symbolic and numeric toolkit for pseudohermitian geometry on real
//! hypersurfaces of the form `R x C^n`.
//!
//! The symbolic layer works over Gaussian rationals with formal scale units,
//! so structural identities (connection, curvature, trace conditions,
//! homothety laws) are verified exactly. The numeric layer drives flows,
//! null geodesics and projective parameterizations at double precision.

pub mod algebra;
pub mod dynamics;
pub mod exterior;
pub mod geodesics;
pub mod linalg;
pub mod models;
pub mod numeric;
pub mod pseudohermitian;
pub mod report;
