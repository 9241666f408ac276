//! Power series in r, truncated at an explicit order, with
//! quasi-trigonometric coefficients.

use std::collections::BTreeMap;
use std::fmt;

use num_bigint::BigInt;
use num_rational::BigRational;

use crate::symbolic_ring::{ParamName, ParamPoly};

use super::{QuasiTrigPoly, TrigError};

/// A truncated series Σ_{k=0..order} c_k(θ)·r^k. The order is explicit
/// state; mixing two orders takes the minimum.
#[derive(Clone, PartialEq, Eq)]
pub struct RSeries {
    order: u32,
    coeffs: Vec<QuasiTrigPoly>,
}

impl RSeries {
    /// The zero series at the given truncation order.
    pub fn zero(order: u32) -> Self {
        RSeries {
            order,
            coeffs: vec![QuasiTrigPoly::zero(); order as usize + 1],
        }
    }

    /// The identity series r.
    pub fn identity(order: u32) -> Self {
        let mut s = RSeries::zero(order);
        if order >= 1 {
            s.coeffs[1] = QuasiTrigPoly::one();
        }
        s
    }

    /// Truncation order (series is exact modulo r^(order+1)).
    pub fn order(&self) -> u32 {
        self.order
    }

    /// Coefficient of r^k (zero when k exceeds the stored order).
    pub fn coeff(&self, k: u32) -> &QuasiTrigPoly {
        static ZERO: once_cell::sync::Lazy<QuasiTrigPoly> =
            once_cell::sync::Lazy::new(QuasiTrigPoly::zero);
        self.coeffs.get(k as usize).unwrap_or(&ZERO)
    }

    /// Sets the coefficient of r^k; k must be within the order.
    pub fn set_coeff(&mut self, k: u32, c: QuasiTrigPoly) {
        assert!(k <= self.order, "coefficient index exceeds order");
        self.coeffs[k as usize] = c;
    }

    /// Adds to the coefficient of r^k (ignored beyond the order).
    pub fn add_to_coeff(&mut self, k: u32, c: &QuasiTrigPoly) {
        if k <= self.order {
            self.coeffs[k as usize].add_assign_ref(c);
        }
    }

    /// True when every stored coefficient is zero.
    pub fn is_zero(&self) -> bool {
        self.coeffs.iter().all(QuasiTrigPoly::is_zero)
    }

    /// Copy truncated to a lower (or equal) order.
    pub fn truncate(&self, order: u32) -> RSeries {
        let order = order.min(self.order);
        RSeries {
            order,
            coeffs: self.coeffs[..=order as usize].to_vec(),
        }
    }

    /// Divides by r, shifting every coefficient down one slot; `None` when
    /// the constant coefficient is nonzero.  The order drops by one.
    pub fn shift_down(&self) -> Option<RSeries> {
        if !self.coeff(0).is_zero() || self.order == 0 {
            return None;
        }
        Some(RSeries {
            order: self.order - 1,
            coeffs: self.coeffs[1..].to_vec(),
        })
    }

    /// Sum; the result order is the minimum of the operands'.
    pub fn add(&self, other: &RSeries) -> RSeries {
        let order = self.order.min(other.order);
        let mut out = self.truncate(order);
        for k in 0..=order {
            out.coeffs[k as usize].add_assign_ref(other.coeff(k));
        }
        out
    }

    /// Difference; the result order is the minimum of the operands'.
    pub fn sub(&self, other: &RSeries) -> RSeries {
        let order = self.order.min(other.order);
        let mut out = self.truncate(order);
        for k in 0..=order {
            out.coeffs[k as usize].sub_assign_ref(other.coeff(k));
        }
        out
    }

    /// Negation.
    pub fn neg(&self) -> RSeries {
        RSeries {
            order: self.order,
            coeffs: self.coeffs.iter().map(QuasiTrigPoly::neg).collect(),
        }
    }

    /// Truncated product; the result order is the minimum of the operands'.
    pub fn mul(&self, other: &RSeries) -> RSeries {
        let order = self.order.min(other.order);
        let mut out = RSeries::zero(order);
        for (i, a) in self.coeffs.iter().enumerate().take(order as usize + 1) {
            if a.is_zero() {
                continue;
            }
            for (j, b) in other.coeffs.iter().enumerate() {
                if i + j > order as usize {
                    break;
                }
                if b.is_zero() {
                    continue;
                }
                out.coeffs[i + j].add_assign_ref(&a.mul(b));
            }
        }
        out
    }

    /// Product at an explicit target order, treating both operands as
    /// exact polynomials (zero beyond their stored coefficients). Use this
    /// instead of `mul` when an operand's order understates its precision,
    /// e.g. a derivative of a series whose top coefficients are exact.
    pub fn mul_to_order(&self, other: &RSeries, order: u32) -> RSeries {
        let mut out = RSeries::zero(order);
        for (i, a) in self.coeffs.iter().enumerate() {
            if i > order as usize {
                break;
            }
            if a.is_zero() {
                continue;
            }
            for (j, b) in other.coeffs.iter().enumerate() {
                if i + j > order as usize {
                    break;
                }
                if b.is_zero() {
                    continue;
                }
                out.coeffs[i + j].add_assign_ref(&a.mul(b));
            }
        }
        out
    }

    /// Multiplies every coefficient by a quasi-trigonometric factor.
    pub fn mul_quasi(&self, q: &QuasiTrigPoly) -> RSeries {
        RSeries {
            order: self.order,
            coeffs: self.coeffs.iter().map(|c| c.mul(q)).collect(),
        }
    }

    /// Multiplies every coefficient by a ring element.
    pub fn mul_param(&self, p: &ParamPoly) -> RSeries {
        RSeries {
            order: self.order,
            coeffs: self.coeffs.iter().map(|c| c.mul_param(p)).collect(),
        }
    }

    /// Scales by a rational constant.
    pub fn scale(&self, c: &BigRational) -> RSeries {
        RSeries {
            order: self.order,
            coeffs: self.coeffs.iter().map(|q| q.scale(c)).collect(),
        }
    }

    /// Formal derivative in r; the order drops by one (a constant series
    /// keeps order 0).
    pub fn d_dr(&self) -> RSeries {
        let order = self.order.saturating_sub(1);
        let mut out = RSeries::zero(order);
        for k in 1..=self.order {
            if k - 1 > order {
                break;
            }
            out.coeffs[(k - 1) as usize] = self
                .coeff(k)
                .scale(&BigRational::from_integer(BigInt::from(k)));
        }
        out
    }

    /// Successive powers L^1..L^max of a series with zero constant term,
    /// for reuse across several compositions.
    pub fn powers(&self, max: u32) -> Result<Vec<RSeries>, TrigError> {
        if !self.coeff(0).is_zero() {
            return Err(TrigError::ComposeConstantTerm);
        }
        let mut pows = Vec::with_capacity(max as usize);
        if max == 0 {
            return Ok(pows);
        }
        pows.push(self.clone());
        for _ in 2..=max {
            let next = pows.last().unwrap().mul(self);
            pows.push(next);
        }
        Ok(pows)
    }

    /// Composition F(θ, L(θ, r)) truncated at the common order. L must
    /// vanish at r = 0.
    pub fn compose(&self, inner: &RSeries) -> Result<RSeries, TrigError> {
        let order = self.order.min(inner.order);
        let pows = inner.truncate(order).powers(order)?;
        Ok(self.compose_with_powers(&pows, order))
    }

    /// Composition given precomputed inner powers (pows[m−1] = L^m).
    pub fn compose_with_powers(&self, pows: &[RSeries], order: u32) -> RSeries {
        let mut out = RSeries::zero(order);
        if !self.coeff(0).is_zero() {
            out.coeffs[0] = self.coeff(0).clone();
        }
        for m in 1..=order.min(self.order) {
            let c_m = self.coeff(m);
            if c_m.is_zero() {
                continue;
            }
            let term = pows[(m - 1) as usize].mul_quasi(c_m);
            for k in 0..=order {
                out.coeffs[k as usize].add_assign_ref(term.coeff(k));
            }
        }
        out
    }

    /// Floating-point value at (θ, r) with the given parameter bindings.
    pub fn eval_f64(
        &self,
        theta: f64,
        r: f64,
        bindings: &BTreeMap<ParamName, f64>,
    ) -> Result<f64, String> {
        let mut total = 0.0;
        let mut rk = 1.0;
        for c in &self.coeffs {
            total += c.eval_f64(theta, bindings)? * rk;
            rk *= r;
        }
        Ok(total)
    }
}

impl fmt::Display for RSeries {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "O(r^{})", self.order + 1)?;
        for (k, c) in self.coeffs.iter().enumerate() {
            if !c.is_zero() {
                write!(f, " + r^{k}*({c})")?;
            }
        }
        Ok(())
    }
}

impl fmt::Debug for RSeries {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "RSeries({self})")
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::trig_calculus::FourierPoly;

    fn cos1() -> QuasiTrigPoly {
        QuasiTrigPoly::from_fourier(FourierPoly::cos(1))
    }

    fn sin1() -> QuasiTrigPoly {
        QuasiTrigPoly::from_fourier(FourierPoly::sin(1))
    }

    #[test]
    fn identity_composition() {
        let mut f = RSeries::zero(4);
        f.set_coeff(2, cos1());
        f.set_coeff(3, sin1());
        let id = RSeries::identity(4);
        assert_eq!(f.compose(&id).unwrap(), f);
        let mut shifted = RSeries::identity(4);
        shifted.set_coeff(0, QuasiTrigPoly::one());
        assert_eq!(f.compose(&shifted).unwrap_err(), TrigError::ComposeConstantTerm);
    }

    #[test]
    fn binomial_composition() {
        // F = r², L = r + l₂r²  ⇒  F∘L = r² + 2l₂r³ at order 3.
        let mut f = RSeries::zero(3);
        f.set_coeff(2, QuasiTrigPoly::one());
        let mut l = RSeries::identity(3);
        l.set_coeff(2, cos1());
        let got = f.compose(&l).unwrap();
        let mut want = RSeries::zero(3);
        want.set_coeff(2, QuasiTrigPoly::one());
        want.set_coeff(3, cos1().scale(&BigRational::from_integer(BigInt::from(2))));
        assert_eq!(got, want);
    }

    /// Order-3 composition against an independently expanded formula:
    /// F∘L = c₁L + c₂L² + c₃L³ with L = r + l₂r² + l₃r³ gives coefficients
    /// c₁; c₁l₂ + c₂; c₁l₃ + 2c₂l₂ + c₃.
    #[test]
    fn order_three_composition_matches_hand_expansion() {
        let c1 = cos1();
        let c2 = sin1().mul(&cos1());
        let c3 = QuasiTrigPoly::theta_pow(1).mul(&sin1());
        let l2 = sin1();
        let l3 = cos1().mul(&cos1());

        let mut f = RSeries::zero(3);
        f.set_coeff(1, c1.clone());
        f.set_coeff(2, c2.clone());
        f.set_coeff(3, c3.clone());
        let mut l = RSeries::identity(3);
        l.set_coeff(2, l2.clone());
        l.set_coeff(3, l3.clone());

        let got = f.compose(&l).unwrap();

        let two = BigRational::from_integer(BigInt::from(2));
        let mut want = RSeries::zero(3);
        want.set_coeff(1, c1.clone());
        let mut k2 = c1.mul(&l2);
        k2.add_assign_ref(&c2);
        want.set_coeff(2, k2);
        let mut k3 = c1.mul(&l3);
        k3.add_assign_ref(&c2.mul(&l2).scale(&two));
        k3.add_assign_ref(&c3);
        want.set_coeff(3, k3);

        assert_eq!(got, want);
    }

    #[test]
    fn derivative_in_r() {
        let mut f = RSeries::zero(4);
        f.set_coeff(2, cos1());
        let d = f.d_dr();
        assert_eq!(d.order(), 3);
        assert_eq!(
            d.coeff(1),
            &cos1().scale(&BigRational::from_integer(BigInt::from(2)))
        );
        let c = RSeries::zero(4);
        assert!(c.d_dr().is_zero());
    }

    #[test]
    fn product_truncates_to_min_order() {
        let mut a = RSeries::zero(5);
        a.set_coeff(1, QuasiTrigPoly::one());
        let mut b = RSeries::zero(3);
        b.set_coeff(2, cos1());
        let prod = a.mul(&b);
        assert_eq!(prod.order(), 3);
        assert_eq!(prod.coeff(3), &cos1());
    }

    #[test]
    fn product_at_explicit_order_zero_extends() {
        // (r + r³)·(r²) at order 5 keeps the r⁵ term that `mul` would drop
        // after truncating to the smaller operand order 3.
        let mut a = RSeries::zero(3);
        a.set_coeff(1, QuasiTrigPoly::one());
        a.set_coeff(3, QuasiTrigPoly::one());
        let mut b = RSeries::zero(2);
        b.set_coeff(2, cos1());
        let prod = a.mul_to_order(&b, 5);
        assert_eq!(prod.order(), 5);
        assert_eq!(prod.coeff(3), &cos1());
        assert!(prod.coeff(4).is_zero());
        assert_eq!(prod.coeff(5), &cos1());
    }

    /// Composed series values agree numerically with composing the values.
    #[test]
    fn composition_agrees_numerically() {
        let mut f = RSeries::zero(6);
        f.set_coeff(1, cos1());
        f.set_coeff(2, sin1().mul(&sin1()));
        f.set_coeff(4, QuasiTrigPoly::theta_pow(1));
        let mut l = RSeries::identity(6);
        l.set_coeff(2, sin1().scale(&BigRational::new(BigInt::from(1), BigInt::from(3))));
        l.set_coeff(3, cos1().scale(&BigRational::new(BigInt::from(-1), BigInt::from(5))));
        let comp = f.compose(&l).unwrap();
        let bind = BTreeMap::new();
        for i in 0..8 {
            let theta = 0.3 + 0.5 * i as f64;
            for r in [0.01, 0.02, 0.05] {
                let inner = l.eval_f64(theta, r, &bind).unwrap();
                let direct = f.eval_f64(theta, inner, &bind).unwrap();
                let series = comp.eval_f64(theta, r, &bind).unwrap();
                // Truncation error is O(r^7); at r ≤ 0.05 that is ≤ ~1e-9.
                assert!(
                    (direct - series).abs() < 1e-7,
                    "θ={theta} r={r}: {direct} vs {series}"
                );
            }
        }
    }
}
