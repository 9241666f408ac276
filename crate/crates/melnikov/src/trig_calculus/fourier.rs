//! Trigonometric polynomials in the canonical Fourier basis.

use std::collections::BTreeMap;
use std::fmt;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::One;

use crate::symbolic_ring::ParamPoly;

/// Basis-function kind; the harmonic 0 admits only [`Kind::Cos`] (the
/// constant mode).
#[derive(Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Debug)]
pub enum Kind {
    Cos,
    Sin,
}

/// A trigonometric polynomial Σ p_k·cos kθ + q_k·sin kθ with [`ParamPoly`]
/// coefficients, stored sparsely with no zero modes.
#[derive(Clone, PartialEq, Eq, Default)]
pub struct FourierPoly {
    entries: BTreeMap<(u32, Kind), ParamPoly>,
}

impl FourierPoly {
    /// The zero polynomial.
    pub fn zero() -> Self {
        FourierPoly { entries: BTreeMap::new() }
    }

    /// A constant (harmonic-0) polynomial.
    pub fn constant(c: ParamPoly) -> Self {
        let mut f = FourierPoly::zero();
        f.add_mode(0, Kind::Cos, c);
        f
    }

    /// The basis function cos kθ (k = 0 gives the constant 1).
    pub fn cos(k: u32) -> Self {
        let mut f = FourierPoly::zero();
        f.add_mode(k, Kind::Cos, ParamPoly::one());
        f
    }

    /// The basis function sin kθ (k = 0 gives 0).
    pub fn sin(k: u32) -> Self {
        let mut f = FourierPoly::zero();
        f.add_mode(k, Kind::Sin, ParamPoly::one());
        f
    }

    /// True when no modes are stored.
    pub fn is_zero(&self) -> bool {
        self.entries.is_empty()
    }

    /// Largest stored harmonic (0 for constants and zero).
    pub fn max_harmonic(&self) -> u32 {
        self.entries.keys().map(|(k, _)| *k).max().unwrap_or(0)
    }

    /// Iterates over (harmonic, kind, coefficient).
    pub fn modes(&self) -> impl Iterator<Item = (u32, Kind, &ParamPoly)> {
        self.entries.iter().map(|((k, kind), p)| (*k, *kind, p))
    }

    /// Adds `p·basis(k, kind)`, normalizing away sin 0θ and zero results.
    pub fn add_mode(&mut self, k: u32, kind: Kind, p: ParamPoly) {
        if p.is_zero() || (k == 0 && kind == Kind::Sin) {
            return;
        }
        use std::collections::btree_map::Entry;
        match self.entries.entry((k, kind)) {
            Entry::Vacant(e) => {
                e.insert(p);
            }
            Entry::Occupied(mut e) => {
                e.get_mut().add_assign_ref(&p);
                if e.get().is_zero() {
                    e.remove();
                }
            }
        }
    }

    /// Adds a mode with a signed harmonic, folding cos(−kθ) = cos kθ and
    /// sin(−kθ) = −sin kθ.
    fn add_mode_signed(&mut self, k: i64, kind: Kind, p: ParamPoly) {
        if k >= 0 {
            self.add_mode(k as u32, kind, p);
        } else {
            match kind {
                Kind::Cos => self.add_mode((-k) as u32, Kind::Cos, p),
                Kind::Sin => self.add_mode((-k) as u32, Kind::Sin, -&p),
            }
        }
    }

    /// The coefficient of the constant mode.
    pub fn constant_mode(&self) -> ParamPoly {
        self.entries
            .get(&(0, Kind::Cos))
            .cloned()
            .unwrap_or_else(ParamPoly::zero)
    }

    /// All ring parameters appearing in any mode coefficient, sorted.
    pub fn params(&self) -> Vec<crate::symbolic_ring::ParamName> {
        let mut out: Vec<_> = self.entries.values().flat_map(ParamPoly::params).collect();
        out.sort();
        out.dedup();
        out
    }

    /// `self += other`.
    pub fn add_assign_ref(&mut self, other: &FourierPoly) {
        for (k, kind, p) in other.modes() {
            self.add_mode(k, kind, p.clone());
        }
    }

    /// `self -= other`.
    pub fn sub_assign_ref(&mut self, other: &FourierPoly) {
        for (k, kind, p) in other.modes() {
            self.add_mode(k, kind, -p);
        }
    }

    /// Negation.
    pub fn neg(&self) -> FourierPoly {
        FourierPoly {
            entries: self.entries.iter().map(|(key, p)| (*key, -p)).collect(),
        }
    }

    /// Multiplies every coefficient by a ring element.
    pub fn mul_param(&self, p: &ParamPoly) -> FourierPoly {
        if p.is_zero() {
            return FourierPoly::zero();
        }
        let mut out = FourierPoly::zero();
        for (k, kind, c) in self.modes() {
            out.add_mode(k, kind, c * p);
        }
        out
    }

    /// Scales by a rational constant.
    pub fn scale(&self, c: &BigRational) -> FourierPoly {
        let mut out = FourierPoly::zero();
        for (k, kind, p) in self.modes() {
            out.add_mode(k, kind, p.scale(c));
        }
        out
    }

    /// Product, re-expanded into the canonical basis via product-to-sum
    /// identities.
    pub fn mul(&self, other: &FourierPoly) -> FourierPoly {
        let half = BigRational::new(BigInt::one(), BigInt::from(2));
        let mut out = FourierPoly::zero();
        for (k1, kind1, p1) in self.modes() {
            for (k2, kind2, p2) in other.modes() {
                let c = (p1 * p2).scale(&half);
                let (sum, diff) = (k1 as i64 + k2 as i64, k1 as i64 - k2 as i64);
                match (kind1, kind2) {
                    (Kind::Cos, Kind::Cos) => {
                        // cos a·cos b = ½cos(a−b) + ½cos(a+b)
                        out.add_mode_signed(diff, Kind::Cos, c.clone());
                        out.add_mode_signed(sum, Kind::Cos, c);
                    }
                    (Kind::Sin, Kind::Sin) => {
                        // sin a·sin b = ½cos(a−b) − ½cos(a+b)
                        out.add_mode_signed(diff, Kind::Cos, c.clone());
                        out.add_mode_signed(sum, Kind::Cos, -&c);
                    }
                    (Kind::Sin, Kind::Cos) => {
                        // sin a·cos b = ½sin(a+b) + ½sin(a−b)
                        out.add_mode_signed(sum, Kind::Sin, c.clone());
                        out.add_mode_signed(diff, Kind::Sin, c);
                    }
                    (Kind::Cos, Kind::Sin) => {
                        // cos a·sin b = ½sin(a+b) − ½sin(a−b)
                        out.add_mode_signed(sum, Kind::Sin, c.clone());
                        out.add_mode_signed(diff, Kind::Sin, -&c);
                    }
                }
            }
        }
        out
    }

    /// θ-derivative.
    pub fn derivative(&self) -> FourierPoly {
        let mut out = FourierPoly::zero();
        for (k, kind, p) in self.modes() {
            if k == 0 {
                continue;
            }
            let kq = BigRational::from_integer(BigInt::from(k));
            match kind {
                Kind::Cos => out.add_mode(k, Kind::Sin, -&p.scale(&kq)),
                Kind::Sin => out.add_mode(k, Kind::Cos, p.scale(&kq)),
            }
        }
        out
    }

    /// Antiderivative of the oscillatory part only; the constant mode must
    /// be handled by the caller (it leaves the Fourier class).
    pub(crate) fn antiderivative_oscillatory(&self) -> FourierPoly {
        let mut out = FourierPoly::zero();
        for (k, kind, p) in self.modes() {
            if k == 0 {
                continue;
            }
            let inv_k = BigRational::new(BigInt::one(), BigInt::from(k));
            match kind {
                Kind::Cos => out.add_mode(k, Kind::Sin, p.scale(&inv_k)),
                Kind::Sin => out.add_mode(k, Kind::Cos, -&p.scale(&inv_k)),
            }
        }
        out
    }

    /// Exact value at θ = 0 (and at θ = 2π, where every cos k·2π = 1 and
    /// sin k·2π = 0).
    pub fn eval_at_zero(&self) -> ParamPoly {
        let mut out = ParamPoly::zero();
        for (_, kind, p) in self.modes() {
            if kind == Kind::Cos {
                out.add_assign_ref(p);
            }
        }
        out
    }

    /// Floating-point value at θ with the given parameter bindings.
    pub fn eval_f64(
        &self,
        theta: f64,
        bindings: &BTreeMap<crate::symbolic_ring::ParamName, f64>,
    ) -> Result<f64, String> {
        let mut total = 0.0;
        for (k, kind, p) in self.modes() {
            let c = p.eval_f64(bindings)?;
            let basis = match kind {
                Kind::Cos => (k as f64 * theta).cos(),
                Kind::Sin => (k as f64 * theta).sin(),
            };
            total += c * basis;
        }
        Ok(total)
    }
}

impl fmt::Display for FourierPoly {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.entries.is_empty() {
            return f.write_str("0");
        }
        for (idx, (k, kind, p)) in self.modes().enumerate() {
            if idx > 0 {
                f.write_str(" + ")?;
            }
            match (k, kind) {
                (0, _) => write!(f, "({p})")?,
                (_, Kind::Cos) => write!(f, "({p})*cos({k}t)")?,
                (_, Kind::Sin) => write!(f, "({p})*sin({k}t)")?,
            }
        }
        Ok(())
    }
}

impl fmt::Debug for FourierPoly {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "FourierPoly({self})")
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn half() -> BigRational {
        BigRational::new(BigInt::one(), BigInt::from(2))
    }

    #[test]
    fn product_to_sum_cos_cos() {
        let got = FourierPoly::cos(1).mul(&FourierPoly::cos(1));
        let mut want = FourierPoly::constant(ParamPoly::rational(1, 2));
        want.add_mode(2, Kind::Cos, ParamPoly::rational(1, 2));
        assert_eq!(got, want);
    }

    #[test]
    fn product_to_sum_cos_sin() {
        let got = FourierPoly::cos(1).mul(&FourierPoly::sin(1));
        let mut want = FourierPoly::zero();
        want.add_mode(2, Kind::Sin, ParamPoly::rational(1, 2));
        assert_eq!(got, want);
    }

    #[test]
    fn product_to_sum_mixed_harmonics() {
        // sin 2θ·cos 3θ = ½ sin 5θ + ½ sin(−θ) = ½ sin 5θ − ½ sin θ
        let got = FourierPoly::sin(2).mul(&FourierPoly::cos(3));
        let mut want = FourierPoly::zero();
        want.add_mode(5, Kind::Sin, ParamPoly::constant(half()));
        want.add_mode(1, Kind::Sin, -&ParamPoly::constant(half()));
        assert_eq!(got, want);
    }

    #[test]
    fn derivative_and_antiderivative_invert() {
        let mut u = FourierPoly::cos(3).mul_param(&ParamPoly::var(crate::symbolic_ring::ParamName::Pi));
        u.add_mode(5, Kind::Sin, ParamPoly::from_int(2));
        assert_eq!(u.antiderivative_oscillatory().derivative(), u);
    }

    #[test]
    fn numeric_agreement_of_products() {
        let u = {
            let mut f = FourierPoly::cos(2);
            f.add_mode(3, Kind::Sin, ParamPoly::rational(5, 7));
            f
        };
        let v = {
            let mut f = FourierPoly::sin(1);
            f.add_mode(0, Kind::Cos, ParamPoly::rational(-2, 3));
            f
        };
        let prod = u.mul(&v);
        let bind = BTreeMap::new();
        for i in 0..16 {
            let theta = 0.37 + i as f64 * 0.41;
            let lhs = prod.eval_f64(theta, &bind).unwrap();
            let rhs = u.eval_f64(theta, &bind).unwrap() * v.eval_f64(theta, &bind).unwrap();
            assert!((lhs - rhs).abs() < 1e-12, "θ={theta}: {lhs} vs {rhs}");
        }
    }
}
