//! Closed-form calculus on quasi-trigonometric polynomials in θ and
//! truncated power series in r.
//!
//! [`FourierPoly`] is a trigonometric polynomial in the canonical basis
//! {1, cos kθ, sin kθ}; products re-expand immediately via product-to-sum
//! identities. [`QuasiTrigPoly`] adds θ-power layers (θ^p · Fourier), which
//! integration of constant modes produces; it is closed under
//! θ-differentiation and θ-antidifferentiation with exact evaluation at
//! θ = 0 and θ = 2π (π stays symbolic). [`RSeries`] is a power series in r
//! truncated at an explicit order with quasi-trigonometric coefficients.

mod fourier;
mod quasi;
mod series;

pub use fourier::{FourierPoly, Kind};
pub use quasi::QuasiTrigPoly;
pub use series::RSeries;

use thiserror::Error;

/// Errors from series manipulation.
#[derive(Debug, Clone, Error, PartialEq, Eq)]
pub enum TrigError {
    #[error("series composition requires the inner series to vanish at r = 0")]
    ComposeConstantTerm,
}
