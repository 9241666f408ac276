//! Polynomials in the plane variables x, y with coefficients in the
//! parameter ring.

use std::collections::BTreeMap;
use std::fmt;

use num_rational::BigRational;
use num_traits::One;

use crate::symbolic_ring::{ParamName, ParamPoly};
use crate::trig_calculus::{FourierPoly, QuasiTrigPoly, RSeries};

use super::ModelError;

/// A polynomial Σ c_{kx,ky} x^kx y^ky with coefficients in the parameter
/// ring, keyed by the exponent pair.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct PlanarPoly {
    coeffs: BTreeMap<(u8, u8), ParamPoly>,
}

impl PlanarPoly {
    /// The zero polynomial.
    pub fn zero() -> Self {
        Self::default()
    }

    /// The constant polynomial `c`.
    pub fn constant(c: BigRational) -> Self {
        let mut p = Self::zero();
        p.add_term((0, 0), ParamPoly::constant(c));
        p
    }

    /// The monomial x^kx y^ky.
    pub fn monomial(kx: u8, ky: u8) -> Self {
        let mut p = Self::zero();
        p.add_term((kx, ky), ParamPoly::one());
        p
    }

    /// Adds `c · x^kx y^ky`, pruning the entry if the total cancels.
    pub fn add_term(&mut self, key: (u8, u8), c: ParamPoly) {
        if c.is_zero() {
            return;
        }
        let entry = self.coeffs.entry(key).or_insert_with(ParamPoly::zero);
        entry.add_assign_ref(&c);
        if entry.is_zero() {
            self.coeffs.remove(&key);
        }
    }

    /// True when no terms remain.
    pub fn is_zero(&self) -> bool {
        self.coeffs.is_empty()
    }

    /// The coefficient of x^kx y^ky (zero if absent).
    pub fn coefficient(&self, kx: u8, ky: u8) -> ParamPoly {
        self.coeffs.get(&(kx, ky)).cloned().unwrap_or_else(ParamPoly::zero)
    }

    /// Iterates over (exponents, coefficient) pairs.
    pub fn terms(&self) -> impl Iterator<Item = (&(u8, u8), &ParamPoly)> {
        self.coeffs.iter()
    }

    /// Total degree in x, y; zero for the zero polynomial.
    pub fn degree(&self) -> u8 {
        self.coeffs
            .keys()
            .map(|&(kx, ky)| kx + ky)
            .max()
            .unwrap_or(0)
    }

    /// True when the constant term vanishes.
    pub fn vanishes_at_origin(&self) -> bool {
        !self.coeffs.contains_key(&(0, 0))
    }

    /// All ring parameters appearing in any coefficient.
    pub fn params(&self) -> Vec<ParamName> {
        let mut out: Vec<ParamName> = Vec::new();
        for c in self.coeffs.values() {
            for p in c.params() {
                if !out.contains(&p) {
                    out.push(p);
                }
            }
        }
        out.sort();
        out
    }

    /// Sum of two polynomials.
    pub fn add(&self, other: &Self) -> Self {
        let mut out = self.clone();
        for (&key, c) in &other.coeffs {
            out.add_term(key, c.clone());
        }
        out
    }

    /// Negation.
    pub fn neg(&self) -> Self {
        let mut out = Self::zero();
        for (&key, c) in &self.coeffs {
            out.add_term(key, -c);
        }
        out
    }

    /// Product of two polynomials.
    pub fn mul(&self, other: &Self) -> Self {
        let mut out = Self::zero();
        for (&(ax, ay), ac) in &self.coeffs {
            for (&(bx, by), bc) in &other.coeffs {
                let kx = ax.checked_add(bx).expect("x exponent overflow");
                let ky = ay.checked_add(by).expect("y exponent overflow");
                out.add_term((kx, ky), ac * bc);
            }
        }
        out
    }

    /// Scales every coefficient by a ring element.
    pub fn mul_param(&self, c: &ParamPoly) -> Self {
        let mut out = Self::zero();
        for (&key, v) in &self.coeffs {
            out.add_term(key, v * c);
        }
        out
    }

    /// Non-negative integer power by repeated multiplication.
    pub fn pow(&self, n: u32) -> Self {
        let mut out = Self::constant(BigRational::one());
        for _ in 0..n {
            out = out.mul(self);
        }
        out
    }

    /// Substitutes ring bindings into every coefficient.
    pub fn substitute(
        &self,
        bindings: &BTreeMap<ParamName, ParamPoly>,
    ) -> Result<Self, ModelError> {
        let mut out = Self::zero();
        for (&key, c) in &self.coeffs {
            out.add_term(key, c.substitute(bindings)?);
        }
        Ok(out)
    }

    /// Evaluates at a concrete point with numeric parameter values.
    pub fn eval_f64(
        &self,
        x: f64,
        y: f64,
        values: &BTreeMap<ParamName, f64>,
    ) -> Result<f64, String> {
        let mut acc = 0.0;
        for (&(kx, ky), c) in &self.coeffs {
            acc += c.eval_f64(values)? * x.powi(kx as i32) * y.powi(ky as i32);
        }
        Ok(acc)
    }

    /// Rewrites the polynomial on x = r cos θ, y = r sin θ as a series in r
    /// truncated at `order`, with Fourier-polynomial coefficients.
    pub fn polar_series(&self, order: u32) -> RSeries {
        let mut out = RSeries::zero(order);
        for (&(kx, ky), c) in &self.coeffs {
            let k = u32::from(kx) + u32::from(ky);
            if k > order {
                continue;
            }
            let f = cos_sin_power(u32::from(kx), u32::from(ky)).mul_param(c);
            out.add_to_coeff(k, &QuasiTrigPoly::from_fourier(f));
        }
        out
    }
}

/// Expands cos^a θ · sin^b θ into a Fourier polynomial.
fn cos_sin_power(a: u32, b: u32) -> FourierPoly {
    let mut out = FourierPoly::constant(ParamPoly::one());
    let c = FourierPoly::cos(1);
    let s = FourierPoly::sin(1);
    for _ in 0..a {
        out = out.mul(&c);
    }
    for _ in 0..b {
        out = out.mul(&s);
    }
    out
}

impl fmt::Display for PlanarPoly {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.coeffs.is_empty() {
            return write!(f, "0");
        }
        let mut first = true;
        for (&(kx, ky), c) in &self.coeffs {
            if !first {
                write!(f, " + ")?;
            }
            first = false;
            let mut head = String::new();
            if c.len() == 1 && c.as_constant() == Some(BigRational::one()) && kx + ky > 0 {
                // Coefficient one is left implicit before a variable power.
            } else if c.len() > 1 {
                head.push_str(&format!("({c})"));
            } else {
                head.push_str(&format!("{c}"));
            }
            let mut parts: Vec<String> = Vec::new();
            if !head.is_empty() {
                parts.push(head);
            }
            for (v, e) in [("x", kx), ("y", ky)] {
                match e {
                    0 => {}
                    1 => parts.push(v.to_string()),
                    _ => parts.push(format!("{v}^{e}")),
                }
            }
            write!(f, "{}", parts.join("*"))?;
        }
        Ok(())
    }
}

/// Checks that a planar pair has the exact linear part (-y, x) at the origin.
pub(super) fn check_rotation_linear_part(p: &PlanarPoly, q: &PlanarPoly) -> Result<(), ModelError> {
    let minus_one = ParamPoly::from_int(-1);
    let one = ParamPoly::one();
    let ok = p.coefficient(0, 1) == minus_one
        && p.coefficient(1, 0).is_zero()
        && p.vanishes_at_origin()
        && q.coefficient(1, 0) == one
        && q.coefficient(0, 1).is_zero()
        && q.vanishes_at_origin();
    if ok {
        Ok(())
    } else {
        Err(ModelError::DegenerateLinearPart)
    }
}
