//! Planar systems with a center at the origin and their polar reduction.
//!
//! A system is stored as a pair of planar polynomials `Z = (P, Q)` whose
//! linear part is the rotation `(-y, x)`, optionally together with
//! perturbation pairs `Z1`, `Z2`, a first integral `H`, and an integrating
//! factor `R`.  The catalog in this module provides the concrete families
//! the rest of the crate studies; [`to_polar`] rewrites any such system as
//! a truncated series dr/dθ = F0 + ε F1 + ε² F2 with quasi-trigonometric
//! coefficients, which is the input format of the averaging engine.

mod expr;
mod planar;
mod polar;
mod system;

pub use expr::Expr;
pub use planar::PlanarPoly;
pub use polar::{to_polar, PolarForm};
pub use system::{catalog, generic_perturbation, parse_system_definition, PerturbedSystem, CATALOG_NAMES};

use crate::symbolic_ring::RingError;

/// Errors from building, parsing, or reducing planar systems.
#[derive(Debug, thiserror::Error)]
pub enum ModelError {
    /// The linear part of the unperturbed system is not the rotation (-y, x).
    #[error("linear part of the unperturbed system must be exactly (-y, x)")]
    DegenerateLinearPart,
    /// A perturbation polynomial carries a constant term.
    #[error("perturbation polynomials must vanish at the origin")]
    ConstantTermInPerturbation,
    /// A perturbation slot other than 1 or 2 was requested.
    #[error("perturbation slot must be 1 or 2, got {0}")]
    BadPerturbationSlot(u8),
    /// Requested a catalog entry that does not exist.
    #[error("unknown catalog system `{0}`")]
    UnknownSystem(String),
    /// The requested series order is outside the supported range.
    #[error("series order must be between 2 and {max}, got {j}")]
    OrderOutOfRange { j: u32, max: u32 },
    /// A binding names a parameter the system does not declare.
    #[error("system has no parameter `{0}`")]
    UnknownParameter(String),
    /// A system definition references a parameter missing from `params`.
    #[error("parameter `{0}` is used but not declared in `params`")]
    UndeclaredParameter(String),
    /// An expression is not polynomial where a polynomial is required.
    #[error("expected a polynomial expression: {0}")]
    NotPolynomial(String),
    /// A malformed system definition.
    #[error("definition line {line}: {msg}")]
    Definition { line: usize, msg: String },
    /// Numeric evaluation hit a pole or produced a non-finite value.
    #[error("evaluation failed: {0}")]
    Evaluation(String),
    /// An underlying ring operation failed.
    #[error(transparent)]
    Ring(#[from] RingError),
}
