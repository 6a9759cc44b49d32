//! Numerical verification of Lie derivative identities for pullbacks and
//! push-forwards of sections of natural bundles along curves of
//! diffeomorphisms.
//!
//! Every quantity is computed as a truncated multivariate Taylor series in the
//! space variables and time; derivatives are read off the coefficients.

pub mod bundles;
pub mod calculus;
pub mod cli;
pub mod error;
pub mod expr;
pub mod flows;
pub mod jet;
pub mod linalg;
pub mod maps;
pub mod report;
pub mod scenario;
pub mod scalar;
pub mod sections;

pub use error::{Error, Result};
