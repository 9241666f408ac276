//! Sparse multivariate polynomials over arbitrary-precision rationals.

use std::cmp::Ordering;
use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::ops::{Add, Mul, Neg, Sub};

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};
use smallvec::SmallVec;

use super::{ParamName, RingError};

/// A product of parameter powers. Factors are sorted by [`ParamName`] and
/// exponents are nonzero; the empty product is the monomial 1.
///
/// The derived `Ord` is the deterministic canonical order used for term
/// storage and printing. It is not a multiplicative monomial order; exact
/// division uses [`Monomial::grlex_cmp`] instead.
#[derive(Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Debug, Default)]
pub struct Monomial(SmallVec<[(ParamName, u8); 4]>);

impl Monomial {
    /// The monomial 1.
    pub fn one() -> Self {
        Monomial(SmallVec::new())
    }

    /// True for the monomial 1.
    pub fn is_one(&self) -> bool {
        self.0.is_empty()
    }

    /// A single variable.
    pub fn var(name: ParamName) -> Self {
        Monomial(SmallVec::from_slice(&[(name, 1)]))
    }

    /// A single variable raised to a power; `exp = 0` gives 1.
    pub fn var_pow(name: ParamName, exp: u8) -> Self {
        if exp == 0 {
            Monomial::one()
        } else {
            Monomial(SmallVec::from_slice(&[(name, exp)]))
        }
    }

    /// Builds from (name, exponent) pairs; sorts and merges duplicates.
    pub fn from_pairs(pairs: &[(ParamName, u8)]) -> Self {
        let mut v: SmallVec<[(ParamName, u8); 4]> =
            pairs.iter().copied().filter(|(_, e)| *e > 0).collect();
        v.sort_by_key(|(n, _)| *n);
        let mut merged: SmallVec<[(ParamName, u8); 4]> = SmallVec::new();
        for (n, e) in v {
            match merged.last_mut() {
                Some((last, le)) if *last == n => {
                    *le = le.checked_add(e).expect("monomial exponent overflow")
                }
                _ => merged.push((n, e)),
            }
        }
        Monomial(merged)
    }

    /// Product of two monomials (exponents add).
    pub fn mul(&self, other: &Monomial) -> Monomial {
        let (a, b) = (&self.0, &other.0);
        let mut out: SmallVec<[(ParamName, u8); 4]> = SmallVec::with_capacity(a.len() + b.len());
        let (mut i, mut j) = (0, 0);
        while i < a.len() && j < b.len() {
            match a[i].0.cmp(&b[j].0) {
                Ordering::Less => {
                    out.push(a[i]);
                    i += 1;
                }
                Ordering::Greater => {
                    out.push(b[j]);
                    j += 1;
                }
                Ordering::Equal => {
                    let e = a[i].1.checked_add(b[j].1).expect("monomial exponent overflow");
                    out.push((a[i].0, e));
                    i += 1;
                    j += 1;
                }
            }
        }
        out.extend_from_slice(&a[i..]);
        out.extend_from_slice(&b[j..]);
        Monomial(out)
    }

    /// `self / other` when `other` divides `self`, else `None`.
    pub fn try_divide(&self, other: &Monomial) -> Option<Monomial> {
        let mut out: SmallVec<[(ParamName, u8); 4]> = SmallVec::new();
        let mut i = 0;
        for &(n, e) in &other.0 {
            loop {
                let &(sn, se) = self.0.get(i)?;
                if sn < n {
                    out.push((sn, se));
                    i += 1;
                } else if sn == n {
                    if se < e {
                        return None;
                    }
                    if se > e {
                        out.push((sn, se - e));
                    }
                    i += 1;
                    break;
                } else {
                    return None;
                }
            }
        }
        out.extend_from_slice(&self.0[i..]);
        Some(Monomial(out))
    }

    /// Total degree.
    pub fn degree(&self) -> u32 {
        self.0.iter().map(|(_, e)| *e as u32).sum()
    }

    /// Exponent of one variable (0 when absent).
    pub fn exponent_of(&self, name: ParamName) -> u8 {
        self.0
            .iter()
            .find(|(n, _)| *n == name)
            .map(|(_, e)| *e)
            .unwrap_or(0)
    }

    /// True when the variable occurs.
    pub fn contains(&self, name: ParamName) -> bool {
        self.0.iter().any(|(n, _)| *n == name)
    }

    /// Iterates over (variable, exponent) factors in canonical order.
    pub fn iter(&self) -> impl Iterator<Item = (ParamName, u8)> + '_ {
        self.0.iter().copied()
    }

    /// Graded lexicographic comparison (total degree first, then exponents
    /// by ascending variable name). This order is multiplicative and is the
    /// one used for exact polynomial division.
    pub fn grlex_cmp(&self, other: &Monomial) -> Ordering {
        match self.degree().cmp(&other.degree()) {
            Ordering::Equal => {}
            ord => return ord,
        }
        let (a, b) = (&self.0, &other.0);
        let (mut i, mut j) = (0, 0);
        while i < a.len() && j < b.len() {
            match a[i].0.cmp(&b[j].0) {
                // Present variable beats absent one at the earliest name.
                Ordering::Less => return Ordering::Greater,
                Ordering::Greater => return Ordering::Less,
                Ordering::Equal => match a[i].1.cmp(&b[j].1) {
                    Ordering::Equal => {
                        i += 1;
                        j += 1;
                    }
                    ord => return ord,
                },
            }
        }
        // Equal prefixes and equal total degree force both exhausted.
        debug_assert!(i == a.len() && j == b.len());
        Ordering::Equal
    }
}

impl fmt::Display for Monomial {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.0.is_empty() {
            return f.write_str("1");
        }
        for (idx, (name, exp)) in self.0.iter().enumerate() {
            if idx > 0 {
                f.write_str("*")?;
            }
            write!(f, "{name}")?;
            if *exp > 1 {
                write!(f, "^{exp}")?;
            }
        }
        Ok(())
    }
}

/// Result of collecting a polynomial linearly over a set of unknowns:
/// `p = Σ coeffs[u]·unknowns[u] + remainder`, with the remainder free of
/// every unknown.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct CollectedLinear {
    pub coeffs: Vec<ParamPoly>,
    pub remainder: ParamPoly,
}

/// A sparse multivariate polynomial with [`BigRational`] coefficients.
///
/// Stored zero coefficients are never kept, term order is canonical, and
/// equality is structural. Values are immutable in spirit: every operation
/// returns a fresh polynomial (in-place helpers exist as optimizations).
#[derive(Clone, PartialEq, Eq, Default)]
pub struct ParamPoly {
    terms: BTreeMap<Monomial, BigRational>,
}

impl ParamPoly {
    /// The zero polynomial.
    pub fn zero() -> Self {
        ParamPoly { terms: BTreeMap::new() }
    }

    /// The constant 1.
    pub fn one() -> Self {
        ParamPoly::from_int(1)
    }

    /// A constant polynomial.
    pub fn constant(c: BigRational) -> Self {
        let mut p = ParamPoly::zero();
        p.add_term(Monomial::one(), c);
        p
    }

    /// An integer constant.
    pub fn from_int(n: i64) -> Self {
        ParamPoly::constant(BigRational::from_integer(BigInt::from(n)))
    }

    /// A rational constant `num/den`.
    pub fn rational(num: i64, den: i64) -> Self {
        assert!(den != 0, "zero denominator");
        ParamPoly::constant(BigRational::new(BigInt::from(num), BigInt::from(den)))
    }

    /// A single variable.
    pub fn var(name: ParamName) -> Self {
        let mut p = ParamPoly::zero();
        p.add_term(Monomial::var(name), BigRational::one());
        p
    }

    /// A single term `c·m`.
    pub fn term(coeff: BigRational, mono: Monomial) -> Self {
        let mut p = ParamPoly::zero();
        p.add_term(mono, coeff);
        p
    }

    /// True for the zero polynomial.
    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    /// Number of stored terms.
    pub fn len(&self) -> usize {
        self.terms.len()
    }

    /// True when no terms are stored (alias of [`ParamPoly::is_zero`]).
    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }

    /// Iterates over (monomial, coefficient) in canonical order.
    pub fn terms(&self) -> impl Iterator<Item = (&Monomial, &BigRational)> {
        self.terms.iter()
    }

    /// The coefficient of a monomial, if present.
    pub fn coefficient(&self, mono: &Monomial) -> Option<&BigRational> {
        self.terms.get(mono)
    }

    /// `Some(c)` when the polynomial is the constant `c` (zero gives 0).
    pub fn as_constant(&self) -> Option<BigRational> {
        match self.terms.len() {
            0 => Some(BigRational::zero()),
            1 => {
                let (m, c) = self.terms.iter().next().unwrap();
                m.is_one().then(|| c.clone())
            }
            _ => None,
        }
    }

    /// Adds `c·m` in place, pruning a resulting zero.
    pub fn add_term(&mut self, mono: Monomial, coeff: BigRational) {
        if coeff.is_zero() {
            return;
        }
        use std::collections::btree_map::Entry;
        match self.terms.entry(mono) {
            Entry::Vacant(e) => {
                e.insert(coeff);
            }
            Entry::Occupied(mut e) => {
                *e.get_mut() += coeff;
                if e.get().is_zero() {
                    e.remove();
                }
            }
        }
    }

    /// `self += other` in place.
    pub fn add_assign_ref(&mut self, other: &ParamPoly) {
        for (m, c) in &other.terms {
            self.add_term(m.clone(), c.clone());
        }
    }

    /// `self -= other` in place.
    pub fn sub_assign_ref(&mut self, other: &ParamPoly) {
        for (m, c) in &other.terms {
            self.add_term(m.clone(), -c.clone());
        }
    }

    /// `self += p·q` without materializing the product.
    pub fn add_mul_assign(&mut self, p: &ParamPoly, q: &ParamPoly) {
        for (mp, cp) in &p.terms {
            for (mq, cq) in &q.terms {
                self.add_term(mp.mul(mq), cp * cq);
            }
        }
    }

    /// Scales by a rational constant.
    pub fn scale(&self, c: &BigRational) -> ParamPoly {
        if c.is_zero() {
            return ParamPoly::zero();
        }
        ParamPoly {
            terms: self.terms.iter().map(|(m, v)| (m.clone(), v * c)).collect(),
        }
    }

    /// Scales by `num/den` with integer arguments.
    pub fn scale_int(&self, num: i64, den: i64) -> ParamPoly {
        self.scale(&BigRational::new(BigInt::from(num), BigInt::from(den)))
    }

    /// Multiplies by a single monomial.
    pub fn mul_monomial(&self, mono: &Monomial, coeff: &BigRational) -> ParamPoly {
        if coeff.is_zero() {
            return ParamPoly::zero();
        }
        ParamPoly {
            terms: self
                .terms
                .iter()
                .map(|(m, v)| (m.mul(mono), v * coeff))
                .collect(),
        }
    }

    /// Integer power by repeated squaring.
    pub fn pow(&self, exp: u32) -> ParamPoly {
        match exp {
            0 => ParamPoly::one(),
            1 => self.clone(),
            _ => {
                let half = self.pow(exp / 2);
                let sq = &half * &half;
                if exp % 2 == 0 {
                    sq
                } else {
                    &sq * self
                }
            }
        }
    }

    /// All variables occurring in the polynomial.
    pub fn params(&self) -> BTreeSet<ParamName> {
        let mut out = BTreeSet::new();
        for m in self.terms.keys() {
            out.extend(m.iter().map(|(n, _)| n));
        }
        out
    }

    /// Degree in one variable.
    pub fn degree_in(&self, name: ParamName) -> u32 {
        self.terms
            .keys()
            .map(|m| m.exponent_of(name) as u32)
            .max()
            .unwrap_or(0)
    }

    /// Total degree (0 for the zero polynomial).
    pub fn total_degree(&self) -> u32 {
        self.terms.keys().map(Monomial::degree).max().unwrap_or(0)
    }

    /// Minimum power of π dividing every term (0 for the zero polynomial).
    pub fn pi_content(&self) -> u8 {
        self.terms
            .keys()
            .map(|m| m.exponent_of(ParamName::Pi))
            .min()
            .unwrap_or(0)
    }

    /// Simultaneous substitution of the bound variables. Identity bindings
    /// are ignored; any other cyclic dependency among bindings is an error.
    pub fn substitute(
        &self,
        bindings: &BTreeMap<ParamName, ParamPoly>,
    ) -> Result<ParamPoly, RingError> {
        let bindings = effective_bindings(bindings)?;
        if bindings.is_empty() {
            return Ok(self.clone());
        }
        let mut out = ParamPoly::zero();
        for (mono, coeff) in &self.terms {
            if !mono.iter().any(|(n, _)| bindings.contains_key(&n)) {
                out.add_term(mono.clone(), coeff.clone());
                continue;
            }
            let mut acc = ParamPoly::constant(coeff.clone());
            for (name, exp) in mono.iter() {
                match bindings.get(&name) {
                    Some(rhs) => acc = &acc * &rhs.pow(exp as u32),
                    None => acc = acc.mul_monomial(&Monomial::var_pow(name, exp), &BigRational::one()),
                }
            }
            out.add_assign_ref(&acc);
        }
        Ok(out)
    }

    /// Substitutes `param := num/den` and clears the denominator by exact
    /// division, erroring when the result is not polynomial. `den` must be
    /// nonzero; divisibility is what certifies the substitution.
    pub fn substitute_fraction(
        &self,
        param: ParamName,
        num: &ParamPoly,
        den: &ParamPoly,
    ) -> Result<ParamPoly, RingError> {
        if den.is_zero() {
            return Err(RingError::DivisionByZero);
        }
        if den.as_constant().map_or(false, |c| c.is_one()) {
            let mut bindings = BTreeMap::new();
            bindings.insert(param, num.clone());
            return self.substitute(&bindings);
        }
        let k_max = self.degree_in(param);
        if k_max == 0 {
            return Ok(self.clone());
        }
        // p = Σ_k c_k·param^k  ↦  (Σ_k c_k·num^k·den^(K−k)) / den^K.
        let mut by_power: Vec<ParamPoly> = vec![ParamPoly::zero(); (k_max + 1) as usize];
        for (mono, coeff) in &self.terms {
            let k = mono.exponent_of(param);
            let rest = mono
                .try_divide(&Monomial::var_pow(param, k))
                .expect("own factor divides");
            by_power[k as usize].add_term(rest, coeff.clone());
        }
        let mut numer = ParamPoly::zero();
        for (k, c_k) in by_power.iter().enumerate() {
            if c_k.is_zero() {
                continue;
            }
            let piece = c_k * &(&num.pow(k as u32) * &den.pow(k_max - k as u32));
            numer.add_assign_ref(&piece);
        }
        numer.divide_exact(&den.pow(k_max))
    }

    /// Writes `p = Σ coeff_u·u + remainder` over the given unknowns,
    /// erroring when any term has joint degree ≥ 2 in them.
    pub fn collect_linear(&self, unknowns: &[ParamName]) -> Result<CollectedLinear, RingError> {
        let mut coeffs = vec![ParamPoly::zero(); unknowns.len()];
        let mut remainder = ParamPoly::zero();
        for (mono, coeff) in &self.terms {
            let mut hit: Option<usize> = None;
            let mut deg = 0u32;
            for (idx, u) in unknowns.iter().enumerate() {
                let e = mono.exponent_of(*u);
                if e > 0 {
                    deg += e as u32;
                    hit = Some(idx);
                }
            }
            match deg {
                0 => remainder.add_term(mono.clone(), coeff.clone()),
                1 => {
                    let idx = hit.expect("degree 1 has a witness");
                    let rest = mono
                        .try_divide(&Monomial::var(unknowns[idx]))
                        .expect("unknown divides its own term");
                    coeffs[idx].add_term(rest, coeff.clone());
                }
                _ => {
                    return Err(RingError::NonlinearInUnknowns(format!(
                        "{}*{}",
                        coeff, mono
                    )))
                }
            }
        }
        Ok(CollectedLinear { coeffs, remainder })
    }

    /// Partial derivative with respect to one variable.
    pub fn partial_derivative(&self, name: ParamName) -> ParamPoly {
        let mut out = ParamPoly::zero();
        for (mono, coeff) in &self.terms {
            let e = mono.exponent_of(name);
            if e == 0 {
                continue;
            }
            let rest = mono
                .try_divide(&Monomial::var(name))
                .expect("var divides its own term");
            out.add_term(rest, coeff * BigRational::from_integer(BigInt::from(e)));
        }
        out
    }

    /// Leading term under the graded lexicographic order.
    fn grlex_leading(&self) -> Option<(&Monomial, &BigRational)> {
        self.terms
            .iter()
            .max_by(|(a, _), (b, _)| a.grlex_cmp(b))
    }

    /// Exact division: returns `self/divisor` when the division has no
    /// remainder, else [`RingError::NotDivisible`].
    pub fn divide_exact(&self, divisor: &ParamPoly) -> Result<ParamPoly, RingError> {
        if divisor.is_zero() {
            return Err(RingError::DivisionByZero);
        }
        if self.is_zero() {
            return Ok(ParamPoly::zero());
        }
        if divisor.terms.len() == 1 {
            // Fast path for monomial divisors (π powers, rational constants).
            let (dm, dc) = divisor.terms.iter().next().unwrap();
            let mut out = ParamPoly::zero();
            for (m, c) in &self.terms {
                let q = m.try_divide(dm).ok_or_else(|| {
                    RingError::NotDivisible(self.to_string(), divisor.to_string())
                })?;
                out.add_term(q, c / dc);
            }
            return Ok(out);
        }
        let (dm, dc) = divisor.grlex_leading().expect("nonzero divisor");
        let mut rem = self.clone();
        let mut quot = ParamPoly::zero();
        while !rem.is_zero() {
            let (rm, rc) = rem.grlex_leading().expect("nonzero remainder");
            let qm = rm.try_divide(dm).ok_or_else(|| {
                RingError::NotDivisible(self.to_string(), divisor.to_string())
            })?;
            let qc = rc / dc;
            quot.add_term(qm.clone(), qc.clone());
            // rem -= (qc·qm)·divisor
            for (m, c) in &divisor.terms {
                rem.add_term(qm.mul(m), -(&qc * c));
            }
        }
        Ok(quot)
    }

    /// Evaluates to a float. `pi` defaults to its float value unless bound
    /// explicitly; any other unbound variable is an error naming it.
    pub fn eval_f64(&self, bindings: &BTreeMap<ParamName, f64>) -> Result<f64, String> {
        let mut total = 0.0f64;
        for (mono, coeff) in &self.terms {
            let mut v = coeff.to_f64().ok_or("coefficient out of f64 range")?;
            for (name, exp) in mono.iter() {
                let x = match bindings.get(&name) {
                    Some(x) => *x,
                    None if name == ParamName::Pi => std::f64::consts::PI,
                    None => return Err(format!("unbound parameter `{name}`")),
                };
                v *= x.powi(exp as i32);
            }
            total += v;
        }
        Ok(total)
    }

    /// Partially evaluates at exact rational points, leaving other
    /// variables symbolic.
    pub fn eval_rational(&self, point: &BTreeMap<ParamName, BigRational>) -> ParamPoly {
        let bindings: BTreeMap<ParamName, ParamPoly> = point
            .iter()
            .map(|(n, v)| (*n, ParamPoly::constant(v.clone())))
            .collect();
        self.substitute(&bindings)
            .expect("constant bindings are acyclic")
    }
}

/// Drops identity bindings and rejects cyclic dependency among the rest.
fn effective_bindings(
    bindings: &BTreeMap<ParamName, ParamPoly>,
) -> Result<BTreeMap<ParamName, &ParamPoly>, RingError> {
    let mut eff: BTreeMap<ParamName, &ParamPoly> = BTreeMap::new();
    for (name, rhs) in bindings {
        if rhs == &ParamPoly::var(*name) {
            continue;
        }
        eff.insert(*name, rhs);
    }
    // Depth-first search for a cycle in param -> params(rhs) ∩ bound.
    #[derive(Clone, Copy, PartialEq)]
    enum Mark {
        Visiting,
        Done,
    }
    let mut marks: BTreeMap<ParamName, Mark> = BTreeMap::new();
    fn visit(
        node: ParamName,
        eff: &BTreeMap<ParamName, &ParamPoly>,
        marks: &mut BTreeMap<ParamName, Mark>,
    ) -> Result<(), RingError> {
        match marks.get(&node) {
            Some(Mark::Done) => return Ok(()),
            Some(Mark::Visiting) => return Err(RingError::CyclicBindings(node)),
            None => {}
        }
        marks.insert(node, Mark::Visiting);
        if let Some(rhs) = eff.get(&node) {
            for dep in rhs.params() {
                if eff.contains_key(&dep) {
                    visit(dep, eff, marks)?;
                }
            }
        }
        marks.insert(node, Mark::Done);
        Ok(())
    }
    for name in eff.keys().copied().collect::<Vec<_>>() {
        visit(name, &eff, &mut marks)?;
    }
    Ok(eff)
}

impl Add for &ParamPoly {
    type Output = ParamPoly;
    fn add(self, rhs: &ParamPoly) -> ParamPoly {
        let mut out = self.clone();
        out.add_assign_ref(rhs);
        out
    }
}

impl Sub for &ParamPoly {
    type Output = ParamPoly;
    fn sub(self, rhs: &ParamPoly) -> ParamPoly {
        let mut out = self.clone();
        out.sub_assign_ref(rhs);
        out
    }
}

impl Mul for &ParamPoly {
    type Output = ParamPoly;
    fn mul(self, rhs: &ParamPoly) -> ParamPoly {
        let mut out = ParamPoly::zero();
        out.add_mul_assign(self, rhs);
        out
    }
}

impl Neg for &ParamPoly {
    type Output = ParamPoly;
    fn neg(self) -> ParamPoly {
        ParamPoly {
            terms: self.terms.iter().map(|(m, c)| (m.clone(), -c)).collect(),
        }
    }
}

impl fmt::Display for ParamPoly {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.terms.is_empty() {
            return f.write_str("0");
        }
        for (idx, (mono, coeff)) in self.terms.iter().enumerate() {
            let neg = coeff.is_negative();
            if idx == 0 {
                if neg {
                    f.write_str("-")?;
                }
            } else if neg {
                f.write_str(" - ")?;
            } else {
                f.write_str(" + ")?;
            }
            let mag = coeff.abs();
            if mono.is_one() {
                write!(f, "{mag}")?;
            } else if mag.is_one() {
                write!(f, "{mono}")?;
            } else {
                write!(f, "{mag}*{mono}")?;
            }
        }
        Ok(())
    }
}

impl fmt::Debug for ParamPoly {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "ParamPoly({self})")
    }
}
