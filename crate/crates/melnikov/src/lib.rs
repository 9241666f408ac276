//! Exact Taylor jets of first- and second-order averaging (Melnikov)
//! functions for polynomially perturbed planar centers.
//!
//! The pipeline: a planar polynomial center with polynomial perturbations
//! ([`polar_model::PerturbedSystem`]) is reduced to the scalar equation
//! dr/dθ = F₀ + εF₁ + ε²F₂ ([`polar_model::to_polar`]), the flow is expanded
//! as a Taylor jet in the initial radius ([`averaging_engine`]), and the
//! return-map coefficients m_{i,k} are extracted as exact polynomials in the
//! perturbation parameters ([`averaging_engine::Jet`]). Parameter conditions
//! annihilating coefficients are solved exactly ([`condition_solver`]), and
//! every symbolic prediction can be cross-checked in floating point against
//! displacement maps and line integrals ([`numeric_verify`]).
//!
//! All symbolic computation is exact: coefficients are arbitrary-precision
//! rationals and π is a formal transcendental, never a float.

pub mod averaging_engine;
pub mod condition_solver;
pub mod numeric_verify;
pub mod polar_model;
pub mod symbolic_ring;
pub mod trig_calculus;
