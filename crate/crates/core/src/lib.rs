//! Computations for positive-definite quaternary quadratic forms:
//! representation numbers, the Eisenstein/cusp split of the theta series,
//! Siegel local densities, explicit norm bounds, and verification of an
//! almost-universal family of forms of prime discriminant.

pub mod error;
pub mod exactmath;
pub(crate) mod enumerate;
pub mod qform;
pub mod theta;
pub mod localdens;
pub mod bounds;
pub mod family;
pub mod expr;
pub mod cli;
pub mod report;

pub use error::{Error, Result};
pub use exactmath::{Rational, WideInt};
pub use qform::{JacobiDecomp, QuadForm};
