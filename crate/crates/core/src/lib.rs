//! Finite-section numerics for norms and operators on sequence spaces.
//!
//! Vectors are sparse coefficient maps over the index set `0, 1, 2, ...`.
//! Operators are symbolic and are materialised as finite sections when a
//! numerical answer is needed. Truncation order `N` always means the span
//! of `e_0, ..., e_N`.

// `!(x > 0.0)` style guards are deliberate: they also reject NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod convex;
pub mod operators;
pub mod opnorm;
pub mod pseudospectrum;
pub mod spaces;
pub mod verify;

mod error;

pub use error::{Error, Result};
pub use num_complex::Complex64;
pub use operators::{CatalogEntry, DiagonalRule, OperatorSpec};
pub use spaces::{Coeffs, QSeq, SpaceSpec};

pub(crate) const C_ZERO: Complex64 = Complex64::new(0.0, 0.0);
