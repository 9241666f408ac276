//! Reduction of a perturbed center to polar coordinates.
//!
//! On x = r cos θ, y = r sin θ the system ẋ = P + εP₁ + ε²P₂,
//! ẏ = Q + εQ₁ + ε²Q₂ becomes
//!
//!   dr/dθ = (A₀ + εA₁ + ε²A₂) / (B₀ + εB₁ + ε²B₂)
//!
//! with A_i = cos θ·P_i + sin θ·Q_i and B_i = (cos θ·Q_i − sin θ·P_i)/r.
//! The rotation linear part forces B₀ = 1 + O(r), so E = 1/B₀ expands as a
//! geometric series and collecting powers of ε gives
//!
//!   dr/dθ = F₀ + εF₁ + ε²F₂ + O(ε³),
//!
//! F₀ = A₀E, F₁ = A₁E − A₀B₁E², F₂ = A₂E − (A₁B₁ + A₀B₂)E² + A₀B₁²E³,
//! truncated at a requested power of r.

use crate::trig_calculus::{FourierPoly, QuasiTrigPoly, RSeries};

use super::planar::check_rotation_linear_part;
use super::{ModelError, PerturbedSystem, PlanarPoly};

/// Largest supported truncation order for the polar reduction.
pub const MAX_POLAR_ORDER: u32 = 64;

/// The polar form dr/dθ = F₀ + εF₁ + ε²F₂ + O(ε³) of a perturbed center.
#[derive(Clone, Debug)]
pub struct PolarForm {
    /// Truncation order in r.
    pub order: u32,
    /// The series F₀, F₁, F₂, each truncated at [`PolarForm::order`].
    pub f: [RSeries; 3],
    /// Denominator exponents of F₁ and F₂ as rational functions of B₀.
    pub eta: (u32, u32),
    /// f₀ in the normal form F₀ = r²f₀/B₀, truncated at order − 2.
    pub f0_data: RSeries,
    /// g₀ in B₀ = 1 + r g₀, truncated at order − 1.
    pub g0_data: RSeries,
}

/// Converts one planar pair into its polar numerator A and denominator
/// contribution B, both truncated at order `j`.
fn polar_pair(pair: &(PlanarPoly, PlanarPoly), j: u32) -> (RSeries, RSeries) {
    let cos = QuasiTrigPoly::from_fourier(FourierPoly::cos(1));
    let sin = QuasiTrigPoly::from_fourier(FourierPoly::sin(1));
    let p = pair.0.polar_series(j + 1);
    let q = pair.1.polar_series(j + 1);
    let a = p.mul_quasi(&cos).add(&q.mul_quasi(&sin)).truncate(j);
    let b_num = q.mul_quasi(&cos).sub(&p.mul_quasi(&sin));
    let b = b_num
        .shift_down()
        .expect("B numerator vanishes at r = 0 because the field has no constant term");
    (a, b)
}

fn one_series(j: u32) -> RSeries {
    let mut s = RSeries::zero(j);
    s.set_coeff(0, QuasiTrigPoly::one());
    s
}

/// Rewrites the system in polar coordinates, truncating every series at
/// order `j` in r.  Requires 2 ≤ j ≤ [`MAX_POLAR_ORDER`] and the exact
/// linear part (-y, x).
pub fn to_polar(system: &PerturbedSystem, j: u32) -> Result<PolarForm, ModelError> {
    if !(2..=MAX_POLAR_ORDER).contains(&j) {
        return Err(ModelError::OrderOutOfRange { j, max: MAX_POLAR_ORDER });
    }
    check_rotation_linear_part(&system.z.0, &system.z.1)?;
    for pair in [&system.z1, &system.z2].into_iter().flatten() {
        if !pair.0.vanishes_at_origin() || !pair.1.vanishes_at_origin() {
            return Err(ModelError::ConstantTermInPerturbation);
        }
    }

    let (a0, b0) = polar_pair(&system.z, j);
    let one = one_series(j);
    let beta = b0.sub(&one);
    assert!(
        beta.coeff(0).is_zero(),
        "rotation linear part forces B₀(0) = 1"
    );

    // Geometric series E = 1/(1 + β): the fixed point of E ↦ 1 − βE,
    // correct to one more power of r per iteration since β = O(r).
    let mut e = one.clone();
    for _ in 0..j {
        e = one.sub(&beta.mul(&e));
    }

    let zero_pair = (PlanarPoly::zero(), PlanarPoly::zero());
    let (a1, b1) = polar_pair(system.z1.as_ref().unwrap_or(&zero_pair), j);
    let (a2, b2) = polar_pair(system.z2.as_ref().unwrap_or(&zero_pair), j);

    let f0 = a0.mul(&e);
    let a0b1e = a0.mul(&b1).mul(&e);
    let f1 = a1.sub(&a0b1e).mul(&e);
    let cross = a1.mul(&b1).add(&a0.mul(&b2));
    let f2 = a2
        .sub(&cross.mul(&e))
        .add(&a0.mul(&b1).mul(&b1).mul(&e).mul(&e))
        .mul(&e);

    assert!(
        f0.coeff(0).is_zero() && f0.coeff(1).is_zero(),
        "F₀ starts at r² for a center with rotation linear part"
    );

    let f0_data = a0
        .shift_down()
        .and_then(|s| s.shift_down())
        .expect("A₀ starts at r² for a center with rotation linear part");
    let g0_data = beta
        .shift_down()
        .expect("β = B₀ − 1 vanishes at r = 0");

    Ok(PolarForm {
        order: j,
        f: [f0, f1, f2],
        eta: (2, 3),
        f0_data,
        g0_data,
    })
}
