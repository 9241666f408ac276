//! Quasi-trigonometric polynomials: θ-power layers over Fourier polynomials.

use std::collections::BTreeMap;
use std::fmt;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::One;

use crate::symbolic_ring::{Monomial, ParamName, ParamPoly};

use super::FourierPoly;

/// A finite sum Σ_p θ^p · f_p(θ) with Fourier-polynomial layers f_p.
///
/// The class is closed under products, θ-differentiation, and
/// θ-antidifferentiation; evaluation at θ = 0 and θ = 2π is exact in the
/// coefficient ring (θ^p contributes (2π)^p with π symbolic).
#[derive(Clone, PartialEq, Eq, Default)]
pub struct QuasiTrigPoly {
    layers: BTreeMap<u32, FourierPoly>,
}

impl QuasiTrigPoly {
    /// The zero polynomial.
    pub fn zero() -> Self {
        QuasiTrigPoly { layers: BTreeMap::new() }
    }

    /// A constant of the coefficient ring.
    pub fn constant(c: ParamPoly) -> Self {
        QuasiTrigPoly::from_fourier(FourierPoly::constant(c))
    }

    /// The constant 1.
    pub fn one() -> Self {
        QuasiTrigPoly::constant(ParamPoly::one())
    }

    /// A pure Fourier polynomial (θ-power 0).
    pub fn from_fourier(f: FourierPoly) -> Self {
        let mut q = QuasiTrigPoly::zero();
        q.add_layer(0, f);
        q
    }

    /// The monomial θ^p.
    pub fn theta_pow(p: u32) -> Self {
        let mut q = QuasiTrigPoly::zero();
        q.add_layer(p, FourierPoly::constant(ParamPoly::one()));
        q
    }

    /// True when no layers are stored.
    pub fn is_zero(&self) -> bool {
        self.layers.is_empty()
    }

    /// Iterates over (θ-power, Fourier layer).
    pub fn layers(&self) -> impl Iterator<Item = (u32, &FourierPoly)> {
        self.layers.iter().map(|(p, f)| (*p, f))
    }

    /// Largest θ-power (0 when absent).
    pub fn max_theta_power(&self) -> u32 {
        self.layers.keys().max().copied().unwrap_or(0)
    }

    /// Adds `θ^p · f`, dropping empty layers.
    pub fn add_layer(&mut self, p: u32, f: FourierPoly) {
        if f.is_zero() {
            return;
        }
        use std::collections::btree_map::Entry;
        match self.layers.entry(p) {
            Entry::Vacant(e) => {
                e.insert(f);
            }
            Entry::Occupied(mut e) => {
                e.get_mut().add_assign_ref(&f);
                if e.get().is_zero() {
                    e.remove();
                }
            }
        }
    }

    /// `self += other`.
    pub fn add_assign_ref(&mut self, other: &QuasiTrigPoly) {
        for (p, f) in other.layers() {
            self.add_layer(p, f.clone());
        }
    }

    /// `self -= other`.
    pub fn sub_assign_ref(&mut self, other: &QuasiTrigPoly) {
        for (p, f) in other.layers() {
            self.add_layer(p, f.neg());
        }
    }

    /// All ring parameters appearing in any layer, sorted.
    pub fn params(&self) -> Vec<crate::symbolic_ring::ParamName> {
        let mut out: Vec<_> = self
            .layers
            .values()
            .flat_map(FourierPoly::params)
            .collect();
        out.sort();
        out.dedup();
        out
    }

    /// Sum of two polynomials.
    pub fn add(&self, other: &QuasiTrigPoly) -> QuasiTrigPoly {
        let mut out = self.clone();
        out.add_assign_ref(other);
        out
    }

    /// Difference of two polynomials.
    pub fn sub(&self, other: &QuasiTrigPoly) -> QuasiTrigPoly {
        let mut out = self.clone();
        out.sub_assign_ref(other);
        out
    }

    /// Negation.
    pub fn neg(&self) -> QuasiTrigPoly {
        QuasiTrigPoly {
            layers: self.layers.iter().map(|(p, f)| (*p, f.neg())).collect(),
        }
    }

    /// Multiplies every coefficient by a ring element.
    pub fn mul_param(&self, c: &ParamPoly) -> QuasiTrigPoly {
        if c.is_zero() {
            return QuasiTrigPoly::zero();
        }
        QuasiTrigPoly {
            layers: self.layers.iter().map(|(p, f)| (*p, f.mul_param(c))).collect(),
        }
    }

    /// Scales by a rational constant.
    pub fn scale(&self, c: &BigRational) -> QuasiTrigPoly {
        QuasiTrigPoly {
            layers: self.layers.iter().map(|(p, f)| (*p, f.scale(c))).collect(),
        }
    }

    /// Product, re-expanded into the canonical basis.
    pub fn mul(&self, other: &QuasiTrigPoly) -> QuasiTrigPoly {
        let mut out = QuasiTrigPoly::zero();
        for (p1, f1) in self.layers() {
            for (p2, f2) in other.layers() {
                out.add_layer(p1 + p2, f1.mul(f2));
            }
        }
        out
    }

    /// θ-derivative (product rule across layers).
    pub fn derivative(&self) -> QuasiTrigPoly {
        let mut out = QuasiTrigPoly::zero();
        for (p, f) in self.layers() {
            out.add_layer(p, f.derivative());
            if p > 0 {
                out.add_layer(
                    p - 1,
                    f.scale(&BigRational::from_integer(BigInt::from(p))),
                );
            }
        }
        out
    }

    /// The antiderivative V with V′ = self and V(0) = 0, exactly.
    pub fn antiderivative(&self) -> QuasiTrigPoly {
        let mut out = QuasiTrigPoly::zero();
        for (p, f) in self.layers() {
            antiderivative_layer(p, f, &mut out);
        }
        // Fix the integration constant so that V(0) = 0.
        let at_zero = out.eval_at_zero();
        if !at_zero.is_zero() {
            out.add_layer(0, FourierPoly::constant(-&at_zero));
        }
        out
    }

    /// Exact value at θ = 0.
    pub fn eval_at_zero(&self) -> ParamPoly {
        self.layers
            .get(&0)
            .map(FourierPoly::eval_at_zero)
            .unwrap_or_else(ParamPoly::zero)
    }

    /// Exact value at θ = 2π: θ^p ↦ 2^p·π^p (π symbolic), cos k·2π = 1,
    /// sin k·2π = 0.
    pub fn eval_2pi(&self) -> ParamPoly {
        let mut out = ParamPoly::zero();
        for (p, f) in self.layers() {
            let mode_sum = f.eval_at_zero();
            if mode_sum.is_zero() {
                continue;
            }
            let two_pi_p = ParamPoly::term(
                BigRational::from_integer(BigInt::from(2).pow(p)),
                Monomial::var_pow(ParamName::Pi, p.try_into().expect("θ-power fits in u8")),
            );
            out.add_assign_ref(&(&mode_sum * &two_pi_p));
        }
        out
    }

    /// Floating-point value at θ with the given parameter bindings.
    pub fn eval_f64(
        &self,
        theta: f64,
        bindings: &BTreeMap<ParamName, f64>,
    ) -> Result<f64, String> {
        let mut total = 0.0;
        for (p, f) in self.layers() {
            total += theta.powi(p as i32) * f.eval_f64(theta, bindings)?;
        }
        Ok(total)
    }
}

/// Accumulates ∫θ^p·f dθ (up to an additive constant fixed by the caller):
/// the constant mode raises the θ-power; oscillatory modes integrate by
/// parts, recursing on a strictly smaller power.
fn antiderivative_layer(p: u32, f: &FourierPoly, out: &mut QuasiTrigPoly) {
    let c = f.constant_mode();
    if !c.is_zero() {
        let scaled = c.scale(&BigRational::new(BigInt::one(), BigInt::from(p + 1)));
        out.add_layer(p + 1, FourierPoly::constant(scaled));
    }
    let mut osc = f.clone();
    osc.sub_assign_ref(&FourierPoly::constant(c));
    if osc.is_zero() {
        return;
    }
    let g = osc.antiderivative_oscillatory();
    out.add_layer(p, g.clone());
    if p > 0 {
        // ∫θ^p·osc = θ^p·g − p·∫θ^{p−1}·g
        let mut correction = QuasiTrigPoly::zero();
        antiderivative_layer(p - 1, &g, &mut correction);
        out.sub_assign_ref(&correction.scale(&BigRational::from_integer(BigInt::from(p))));
    }
}

impl fmt::Display for QuasiTrigPoly {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.layers.is_empty() {
            return f.write_str("0");
        }
        for (idx, (p, layer)) in self.layers().enumerate() {
            if idx > 0 {
                f.write_str(" + ")?;
            }
            if p == 0 {
                write!(f, "[{layer}]")?;
            } else if p == 1 {
                write!(f, "t*[{layer}]")?;
            } else {
                write!(f, "t^{p}*[{layer}]")?;
            }
        }
        Ok(())
    }
}

impl fmt::Debug for QuasiTrigPoly {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "QuasiTrigPoly({self})")
    }
}
