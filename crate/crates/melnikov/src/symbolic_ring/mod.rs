//! Exact sparse multivariate polynomial arithmetic over arbitrary-precision
//! rationals: the coefficient ring for everything symbolic.
//!
//! Variables are [`ParamName`]s: perturbation coefficients `a_{ikl}`/`b_{ikl}`,
//! family parameters (`alpha`, ...), auxiliary parameters `A_k`, and the
//! formal transcendental `pi`. Polynomials are kept in a canonical sparse
//! form with a deterministic term order, so printed output is reproducible
//! bit for bit.

mod name;
mod parse;
mod poly;

pub use name::{FamilyName, ParamName, Slot};
pub use parse::parse_poly;
pub(crate) use parse::classify_param;
pub use poly::{CollectedLinear, Monomial, ParamPoly};

use thiserror::Error;

/// Errors from ring construction, parsing, and structural operations.
#[derive(Debug, Clone, Error, PartialEq, Eq)]
pub enum RingError {
    #[error("invalid family parameter name `{0}`: {1}")]
    InvalidFamilyName(String, &'static str),
    #[error("invalid perturbation index: order {order} (must be 1 or 2), exponents ({kx},{ky}) (must satisfy 1 <= kx+ky, each <= 9)")]
    InvalidPerturbationIndex { order: u8, kx: u8, ky: u8 },
    #[error("parse error at byte {pos}: {msg}")]
    Parse { pos: usize, msg: String },
    #[error("cyclic substitution bindings involving `{0}`")]
    CyclicBindings(ParamName),
    #[error("polynomial is nonlinear in the unknowns: term `{0}`")]
    NonlinearInUnknowns(String),
    #[error("exact division failed: `{0}` is not divisible by `{1}`")]
    NotDivisible(String, String),
    #[error("division by zero polynomial")]
    DivisionByZero,
}
