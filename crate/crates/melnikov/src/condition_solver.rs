//! Exact solving of parameter conditions on averaging-jet coefficients:
//! joint linear systems over the polynomial ring, auxiliary-parameter
//! reparameterization, certified generic rank, Jacobian transversality
//! probes, and exact root counting for limit-cycle lower bounds.
//!
//! The division discipline is explicit. π and nonzero rationals are
//! invertible everywhere; any other divisor must be declared nonzero in an
//! [`Assumptions`] list, and a solve whose system determinant is not a
//! product of declared factors (times a rational and a power of π) fails
//! naming that determinant. Solved [`Binding`]s therefore carry an explicit
//! polynomial denominator; applying a [`Substitution`] defers all division
//! to the end and clears the accumulated denominator by checked exact
//! division, so a non-polynomial outcome is an error, never a silent
//! approximation.
//!
//! Substitutions are ordered and triangular: a bound parameter never
//! reappears in a later right-hand side, so one sequential pass (equivalently
//! the parallel resolved form computed here) eliminates every bound
//! parameter.

use std::collections::BTreeMap;
use std::fmt;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed, Zero};
use rand_chacha::rand_core::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use crate::averaging_engine::Jet;
use crate::symbolic_ring::{Monomial, ParamName, ParamPoly, RingError};

/// Errors from condition solving and substitution application.
#[derive(Debug, Clone, Error)]
pub enum SolverError {
    #[error("coefficient index {k} is outside the jet truncation {truncation}")]
    OrderOutsideJet { k: u32, truncation: u32 },
    #[error("selected {equations} coefficients but {unknowns} unknowns; the joint solve needs a square system")]
    ShapeMismatch { equations: usize, unknowns: usize },
    #[error("parameter `{0}` appears twice in the request")]
    DuplicateParameter(ParamName),
    #[error("the system determinant vanishes identically; the selected coefficients do not determine the unknowns")]
    SingularSystem,
    #[error("division requires `{determinant}` to be nonzero, which no assumption grants")]
    UnjustifiedDivision { determinant: ParamPoly },
    #[error("coefficient of `{param}` is `{coefficient}`, not a nonzero rational multiple of a power of pi")]
    NonInvertibleCoefficient { param: ParamName, coefficient: ParamPoly },
    #[error("target value `{0}` must be linear in exactly one auxiliary parameter with a rational-times-pi-power coefficient, and free of the solved parameter")]
    BadTargetValue(ParamPoly),
    #[error("parameter `{0}` is already bound and may not appear in a later right-hand side")]
    NotTriangular(ParamName),
    #[error("a binding denominator became zero during resolution")]
    ZeroDenominator,
    #[error("the probe point lies on the excluded locus of assumption `{0}`")]
    ExcludedPoint(String),
    #[error("coefficient `{0}` still contains symbols after evaluation")]
    NotNumeric(ParamPoly),
    #[error(transparent)]
    Ring(#[from] RingError),
}

/// Nonvanishing side conditions under which division is justified.
#[derive(Clone, Debug, Default)]
pub struct Assumptions {
    nonzero: Vec<(ParamPoly, String)>,
}

impl Assumptions {
    /// No assumptions: only π and rationals may be inverted.
    pub fn none() -> Assumptions {
        Assumptions::default()
    }

    /// Declares a polynomial nonzero, with a short human-readable label.
    pub fn nonzero(mut self, poly: ParamPoly, label: impl Into<String>) -> Assumptions {
        self.nonzero.push((poly, label.into()));
        self
    }

    /// The declared nonzero polynomials with their labels.
    pub fn declared(&self) -> impl Iterator<Item = (&ParamPoly, &str)> {
        self.nonzero.iter().map(|(p, l)| (p, l.as_str()))
    }

    /// True when nothing has been declared.
    pub fn is_empty(&self) -> bool {
        self.nonzero.is_empty()
    }

    /// Checks that `det` may be inverted: after removing the rational
    /// content and π powers it must factor completely into declared
    /// polynomials.
    pub fn certify(&self, det: &ParamPoly) -> Result<(), SolverError> {
        if det.is_zero() {
            return Err(SolverError::SingularSystem);
        }
        let mut f = strip_pi(det);
        'reduce: while f.as_constant().is_none() {
            for (g, _) in &self.nonzero {
                let g = strip_pi(g);
                if g.as_constant().is_some() {
                    continue;
                }
                if let Ok(q) = f.divide_exact(&g) {
                    f = q;
                    continue 'reduce;
                }
            }
            return Err(SolverError::UnjustifiedDivision { determinant: det.clone() });
        }
        Ok(())
    }
}

/// Divides out the full π content of a polynomial.
fn strip_pi(p: &ParamPoly) -> ParamPoly {
    let e = p.pi_content();
    if e == 0 {
        return p.clone();
    }
    let pi_pow = ParamPoly::term(BigRational::one(), Monomial::var_pow(ParamName::Pi, e));
    p.divide_exact(&pi_pow).expect("pi content divides")
}

/// One solved binding `param = num/den`. The denominator is 1 when no
/// division was needed; otherwise its nonvanishing is justified by the
/// owning substitution's assumptions.
#[derive(Clone, Debug)]
pub struct Binding {
    /// The eliminated parameter.
    pub param: ParamName,
    /// Numerator of the bound value.
    pub num: ParamPoly,
    /// Denominator of the bound value, never zero.
    pub den: ParamPoly,
}

impl Binding {
    /// A division-free binding `param = rhs`.
    pub fn polynomial(param: ParamName, rhs: ParamPoly) -> Binding {
        Binding { param, num: rhs, den: ParamPoly::one() }
    }

    /// True when the denominator is the constant 1.
    pub fn den_is_one(&self) -> bool {
        self.den.as_constant().map_or(false, |c| c.is_one())
    }

    /// True when the binding equals `rhs` as an exact identity.
    pub fn equals_poly(&self, rhs: &ParamPoly) -> bool {
        self.num == rhs * &self.den
    }

    /// Collapses the fraction whenever the division is exact.
    fn reduce(&mut self) {
        if self.den_is_one() {
            return;
        }
        if let Ok(q) = self.num.divide_exact(&self.den) {
            self.num = q;
            self.den = ParamPoly::one();
        }
    }
}

impl fmt::Display for Binding {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.den_is_one() {
            write!(f, "{} = {}", self.param, self.num)
        } else {
            write!(f, "{} = ({})/({})", self.param, self.num, self.den)
        }
    }
}

/// An ordered, triangular list of bindings with its provenance note and the
/// nonvanishing assumptions that justify any division it performs.
///
/// Bindings apply in order; an earlier right-hand side may mention a
/// parameter bound later (the later binding then rewrites it), but a bound
/// parameter never reappears in a later right-hand side.
#[derive(Clone, Debug, Default)]
pub struct Substitution {
    bindings: Vec<Binding>,
    /// Which coefficients this annihilates or rewrites.
    pub note: String,
    /// Nonvanishing conditions attached to the solve.
    pub assumptions: Assumptions,
}

impl Substitution {
    /// An empty substitution with a provenance note.
    pub fn new(note: impl Into<String>) -> Substitution {
        Substitution { bindings: Vec::new(), note: note.into(), assumptions: Assumptions::none() }
    }

    /// An empty substitution carrying assumptions.
    pub fn with_assumptions(note: impl Into<String>, assumptions: Assumptions) -> Substitution {
        Substitution { bindings: Vec::new(), note: note.into(), assumptions }
    }

    /// Appends a binding, enforcing distinctness and triangularity.
    pub fn push(&mut self, binding: Binding) -> Result<(), SolverError> {
        for earlier in &self.bindings {
            if earlier.param == binding.param {
                return Err(SolverError::DuplicateParameter(binding.param));
            }
            if binding.num.params().contains(&earlier.param)
                || binding.den.params().contains(&earlier.param)
            {
                return Err(SolverError::NotTriangular(earlier.param));
            }
        }
        self.bindings.push(binding);
        Ok(())
    }

    /// Appends a division-free binding `param = rhs`.
    pub fn bind(&mut self, param: ParamName, rhs: ParamPoly) -> Result<(), SolverError> {
        self.push(Binding::polynomial(param, rhs))
    }

    /// The bindings in application order.
    pub fn bindings(&self) -> &[Binding] {
        &self.bindings
    }

    /// The binding for one parameter, if present.
    pub fn binding_for(&self, param: ParamName) -> Option<&Binding> {
        self.bindings.iter().find(|b| b.param == param)
    }

    /// Number of bindings.
    pub fn len(&self) -> usize {
        self.bindings.len()
    }

    /// True when no parameter is bound.
    pub fn is_empty(&self) -> bool {
        self.bindings.is_empty()
    }

    /// Resolves the ordered chain into parallel form: every right-hand side
    /// free of every bound parameter.
    fn resolved(&self) -> Result<Vec<Binding>, SolverError> {
        let mut tail: Vec<Binding> = Vec::with_capacity(self.bindings.len());
        for b in self.bindings.iter().rev() {
            let (n_num, n_den) = substitute_deferred(&b.num, &tail);
            let (d_num, d_den) = substitute_deferred(&b.den, &tail);
            let den = &n_den * &d_num;
            if den.is_zero() {
                return Err(SolverError::ZeroDenominator);
            }
            let mut rb = Binding { param: b.param, num: &n_num * &d_den, den };
            rb.reduce();
            tail.push(rb);
        }
        tail.reverse();
        Ok(tail)
    }

    /// Applies the substitution to a polynomial, clearing all denominators
    /// by checked exact division.
    pub fn apply_poly(&self, p: &ParamPoly) -> Result<ParamPoly, SolverError> {
        let parallel = self.resolved()?;
        let (num, den) = substitute_deferred(p, &parallel);
        Ok(num.divide_exact(&den)?)
    }

    /// Applies the substitution to every coefficient of a jet.
    pub fn apply(&self, jet: &Jet) -> Result<Jet, SolverError> {
        let parallel = self.resolved()?;
        let mut coeffs = Vec::with_capacity(jet.truncation() as usize);
        for (_, p) in jet.coefficients() {
            let (num, den) = substitute_deferred(p, &parallel);
            coeffs.push(num.divide_exact(&den)?);
        }
        Ok(Jet::from_coefficients(jet.order_eps(), coeffs))
    }
}

impl fmt::Display for Substitution {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "{}", self.note)?;
        for b in &self.bindings {
            writeln!(f, "  {b}")?;
        }
        for (p, label) in self.assumptions.declared() {
            writeln!(f, "  assuming {label}: {p} != 0")?;
        }
        Ok(())
    }
}

/// Substitutes every (parallel) binding into `p` without dividing, returning
/// the numerator and the accumulated denominator.
fn substitute_deferred(p: &ParamPoly, bindings: &[Binding]) -> (ParamPoly, ParamPoly) {
    let degrees: Vec<u32> = bindings.iter().map(|b| p.degree_in(b.param)).collect();
    if degrees.iter().all(|d| *d == 0) {
        return (p.clone(), ParamPoly::one());
    }
    // Power tables keep the per-term loop to pure multiplications.
    let num_pows: Vec<Vec<ParamPoly>> = bindings
        .iter()
        .zip(&degrees)
        .map(|(b, d)| power_table(&b.num, *d))
        .collect();
    let den_pows: Vec<Vec<ParamPoly>> = bindings
        .iter()
        .zip(&degrees)
        .map(|(b, d)| if b.den_is_one() { Vec::new() } else { power_table(&b.den, *d) })
        .collect();
    let mut den = ParamPoly::one();
    for (idx, d) in degrees.iter().enumerate() {
        if *d > 0 && !den_pows[idx].is_empty() {
            den = &den * &den_pows[idx][*d as usize];
        }
    }
    let mut out = ParamPoly::zero();
    for (mono, coeff) in p.terms() {
        let mut rest = mono.clone();
        let mut factor = ParamPoly::constant(coeff.clone());
        for (idx, b) in bindings.iter().enumerate() {
            if degrees[idx] == 0 {
                continue;
            }
            let e = mono.exponent_of(b.param) as u32;
            if e > 0 {
                rest = rest
                    .try_divide(&Monomial::var_pow(b.param, e as u8))
                    .expect("own factor divides");
                factor = &factor * &num_pows[idx][e as usize];
            }
            let defect = degrees[idx] - e;
            if defect > 0 && !den_pows[idx].is_empty() {
                factor = &factor * &den_pows[idx][defect as usize];
            }
        }
        out.add_assign_ref(&factor.mul_monomial(&rest, &BigRational::one()));
    }
    (out, den)
}

fn power_table(p: &ParamPoly, max: u32) -> Vec<ParamPoly> {
    let mut t = Vec::with_capacity(max as usize + 1);
    t.push(ParamPoly::one());
    for k in 1..=max {
        let next = &t[k as usize - 1] * p;
        t.push(next);
    }
    t
}

/// Validates a selected coefficient index against a jet.
fn check_order(jet: &Jet, k: u32) -> Result<(), SolverError> {
    if k == 0 || k > jet.truncation() {
        return Err(SolverError::OrderOutsideJet { k, truncation: jet.truncation() });
    }
    Ok(())
}

fn check_distinct(params: &[ParamName]) -> Result<(), SolverError> {
    for (i, p) in params.iter().enumerate() {
        if params[i + 1..].contains(p) {
            return Err(SolverError::DuplicateParameter(*p));
        }
    }
    Ok(())
}

fn joined_orders(i: u8, orders: &[u32]) -> String {
    let mut s = String::new();
    for (idx, k) in orders.iter().enumerate() {
        if idx > 0 {
            s.push_str(", ");
        }
        s.push_str(&format!("m_{{{i},{k}}}"));
    }
    s
}

/// Pins each selected coefficient m_{i,k} to a target value by solving the
/// joint linear system in the unknowns (Cramer's rule over the ring; the
/// system determinant must be certified nonzero by the assumptions).
pub fn solve_targets(
    jet: &Jet,
    targets: &[(u32, ParamPoly)],
    unknowns: &[ParamName],
    assumptions: Assumptions,
) -> Result<Substitution, SolverError> {
    if targets.len() != unknowns.len() {
        return Err(SolverError::ShapeMismatch {
            equations: targets.len(),
            unknowns: unknowns.len(),
        });
    }
    let order_list: Vec<u32> = targets.iter().map(|(k, _)| *k).collect();
    check_distinct(unknowns)?;
    let mut seen = Vec::new();
    for &k in &order_list {
        check_order(jet, k)?;
        if seen.contains(&k) {
            return Err(SolverError::OrderOutsideJet { k, truncation: jet.truncation() });
        }
        seen.push(k);
    }
    let n = unknowns.len();
    let mut rows: Vec<Vec<ParamPoly>> = Vec::with_capacity(n);
    let mut rhs: Vec<ParamPoly> = Vec::with_capacity(n);
    for (k, value) in targets {
        let collected = jet.coeff(*k).collect_linear(unknowns)?;
        rows.push(collected.coeffs);
        rhs.push(value - &collected.remainder);
    }
    let det = poly_matrix_determinant(&rows);
    assumptions.certify(&det)?;
    log::debug!(
        "solve over {n} unknowns: determinant has {} terms, degree {}",
        det.len(),
        det.total_degree()
    );
    let mut sub = Substitution::with_assumptions(
        format!("pins {} to the requested values", joined_orders(jet.order_eps(), &order_list)),
        assumptions,
    );
    for (j, u) in unknowns.iter().enumerate() {
        let mut replaced = rows.clone();
        for i in 0..n {
            replaced[i][j] = rhs[i].clone();
        }
        let mut binding = Binding { param: *u, num: poly_matrix_determinant(&replaced), den: det.clone() };
        binding.reduce();
        sub.push(binding)?;
    }
    Ok(sub)
}

/// Solves m_{i,k} = 0 for the selected orders as a joint linear system in
/// the unknowns, returning the annihilating substitution.
pub fn solve_vanishing(
    jet: &Jet,
    orders: &[u32],
    unknowns: &[ParamName],
    assumptions: Assumptions,
) -> Result<Substitution, SolverError> {
    let targets: Vec<(u32, ParamPoly)> = orders.iter().map(|k| (*k, ParamPoly::zero())).collect();
    let mut sub = solve_targets(jet, &targets, unknowns, assumptions)?;
    sub.note = format!("annihilates {}", joined_orders(jet.order_eps(), orders));
    Ok(sub)
}

/// One reparameterization step: force m_{i,k} to equal `value` by solving
/// for `solve_for`, whose coefficient must be a rational multiple of a
/// power of π.
#[derive(Clone, Debug)]
pub struct ReparamTarget {
    /// The pinned coefficient index.
    pub k: u32,
    /// The value it is pinned to, linear in exactly one auxiliary parameter.
    pub value: ParamPoly,
    /// The parameter solved for and eliminated.
    pub solve_for: ParamName,
}

impl ReparamTarget {
    /// Convenience constructor.
    pub fn new(k: u32, value: ParamPoly, solve_for: ParamName) -> ReparamTarget {
        ReparamTarget { k, value, solve_for }
    }
}

/// Result of [`reparametrize`]: the rewritten jet plus both directions of
/// the rewriting.
#[derive(Clone, Debug)]
pub struct Reparametrized {
    /// The jet with each targeted coefficient equal to its target value.
    pub jet: Jet,
    /// Bindings eliminating the solved parameters.
    pub forward: Substitution,
    /// Bindings restoring the auxiliaries; applying them to `jet` undoes
    /// the rewrite exactly.
    pub inverse: Substitution,
}

/// Rewrites a jet so that selected coefficients become auxiliary-parameter
/// values, solving one target at a time in the given order.
pub fn reparametrize(jet: &Jet, targets: &[ReparamTarget]) -> Result<Reparametrized, SolverError> {
    let mut current = jet.clone();
    let order_list: Vec<u32> = targets.iter().map(|t| t.k).collect();
    let mut forward = Substitution::new(format!(
        "rewrites {} as auxiliary parameters",
        joined_orders(jet.order_eps(), &order_list)
    ));
    let mut inverse_bindings: Vec<Binding> = Vec::new();
    for t in targets {
        check_order(&current, t.k)?;
        if t.value.params().contains(&t.solve_for) {
            return Err(SolverError::BadTargetValue(t.value.clone()));
        }
        let collected = current.coeff(t.k).collect_linear(&[t.solve_for])?;
        let pivot = collected.coeffs.into_iter().next().expect("one unknown");
        if !is_rational_pi_multiple(&pivot) {
            return Err(SolverError::NonInvertibleCoefficient {
                param: t.solve_for,
                coefficient: pivot,
            });
        }
        let rest = collected.remainder;
        // m_k = pivot·u + rest = value  ⇔  u = (value − rest)/pivot.
        let binding =
            Binding { param: t.solve_for, num: &t.value - &rest, den: pivot.clone() };
        current = apply_one(&current, &binding)?;
        // The inverse rebinds the one auxiliary inside the target value:
        // value = c·A + tail  ⇔  A = (pivot·u + rest − tail)/c.
        let aux = single_auxiliary(&t.value)
            .ok_or_else(|| SolverError::BadTargetValue(t.value.clone()))?;
        let vc = t.value.collect_linear(&[aux])?;
        let c = vc.coeffs.into_iter().next().expect("one unknown");
        if !is_rational_pi_multiple(&c) {
            return Err(SolverError::BadTargetValue(t.value.clone()));
        }
        let recovered = &(&pivot * &ParamPoly::var(t.solve_for)) + &(&rest - &vc.remainder);
        inverse_bindings.push(Binding { param: aux, num: recovered, den: c });
        forward.push(binding)?;
    }
    let mut inverse = Substitution::new(format!(
        "restores {} from the rewritten jet",
        joined_orders(jet.order_eps(), &order_list)
    ));
    for b in inverse_bindings.into_iter().rev() {
        inverse.push(b)?;
    }
    Ok(Reparametrized { jet: current, forward, inverse })
}

/// Applies a single binding to every coefficient of a jet.
fn apply_one(jet: &Jet, binding: &Binding) -> Result<Jet, SolverError> {
    let slice = std::slice::from_ref(binding);
    let mut coeffs = Vec::with_capacity(jet.truncation() as usize);
    for (_, p) in jet.coefficients() {
        let (num, den) = substitute_deferred(p, slice);
        coeffs.push(num.divide_exact(&den)?);
    }
    Ok(Jet::from_coefficients(jet.order_eps(), coeffs))
}

/// True for a single-term polynomial c·π^e with rational c ≠ 0.
fn is_rational_pi_multiple(p: &ParamPoly) -> bool {
    if p.is_zero() || p.len() != 1 {
        return false;
    }
    let (mono, _) = p.terms().next().expect("one term");
    mono.iter().all(|(name, _)| name == ParamName::Pi)
}

/// The unique auxiliary parameter of a polynomial, if there is exactly one.
fn single_auxiliary(p: &ParamPoly) -> Option<ParamName> {
    let mut found = None;
    for name in p.params() {
        if matches!(name, ParamName::Auxiliary(_)) {
            if found.is_some() {
                return None;
            }
            found = Some(name);
        }
    }
    found
}

/// A certified generic-rank report for selected jet coefficients viewed as
/// linear forms in free parameters.
#[derive(Clone, Debug)]
pub struct RankReport {
    /// Number of selected coefficients (matrix rows).
    pub rows: usize,
    /// Number of free parameters (matrix columns).
    pub cols: usize,
    /// The rank attained at the witness; a lower bound for the generic rank
    /// that is exact off a proper algebraic subset of witness space.
    pub rank: usize,
    /// Exact rational values for the leftover symbols (π included) at which
    /// the rank is attained, certifying it by exact elimination.
    pub witness: BTreeMap<ParamName, BigRational>,
    /// Independently assignable leading coefficients minus one.
    pub cycle_lower_bound: usize,
}

/// Computes the generic rank of the selected coefficients as linear forms
/// in the free parameters, certified at an exact random witness.
pub fn generic_rank(
    jet: &Jet,
    orders: &[u32],
    free: &[ParamName],
    seed: u64,
) -> Result<RankReport, SolverError> {
    check_distinct(free)?;
    let mut rows_sym: Vec<Vec<ParamPoly>> = Vec::with_capacity(orders.len());
    let mut leftover: std::collections::BTreeSet<ParamName> = std::collections::BTreeSet::new();
    for &k in orders {
        check_order(jet, k)?;
        let collected = jet.coeff(k).collect_linear(free)?;
        for c in &collected.coeffs {
            leftover.extend(c.params());
        }
        rows_sym.push(collected.coeffs);
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut best_rank = 0usize;
    let mut best_witness = BTreeMap::new();
    let max_possible = orders.len().min(free.len());
    for _ in 0..8 {
        let witness: BTreeMap<ParamName, BigRational> = leftover
            .iter()
            .map(|name| (*name, random_nonzero_rational(&mut rng)))
            .collect();
        let matrix: Vec<Vec<BigRational>> = rows_sym
            .iter()
            .map(|row| {
                row.iter()
                    .map(|p| {
                        p.eval_rational(&witness)
                            .as_constant()
                            .expect("all symbols bound at the witness")
                    })
                    .collect()
            })
            .collect();
        let rank = rational_matrix_rank(matrix);
        if rank > best_rank {
            best_rank = rank;
            best_witness = witness;
        }
        if best_rank == max_possible {
            break;
        }
    }
    Ok(RankReport {
        rows: orders.len(),
        cols: free.len(),
        rank: best_rank,
        witness: best_witness,
        cycle_lower_bound: best_rank.saturating_sub(1),
    })
}

fn random_nonzero_rational(rng: &mut ChaCha8Rng) -> BigRational {
    let num = (rng.next_u64() % 41) as i64 - 20;
    let num = if num == 0 { 21 } else { num };
    let den = (rng.next_u64() % 7) as i64 + 1;
    BigRational::new(BigInt::from(num), BigInt::from(den))
}

/// Exact rank of a rational matrix by Gaussian elimination.
fn rational_matrix_rank(mut m: Vec<Vec<BigRational>>) -> usize {
    let rows = m.len();
    let cols = m.first().map_or(0, Vec::len);
    let mut rank = 0usize;
    let mut row = 0usize;
    for col in 0..cols {
        let Some(pivot) = (row..rows).find(|r| !m[*r][col].is_zero()) else {
            continue;
        };
        m.swap(row, pivot);
        let lead = m[row][col].clone();
        for r in (row + 1)..rows {
            if m[r][col].is_zero() {
                continue;
            }
            let factor = &m[r][col] / &lead;
            for c in col..cols {
                let delta = &factor * &m[row][c];
                m[r][c] = &m[r][c] - &delta;
            }
        }
        rank += 1;
        row += 1;
        if row == rows {
            break;
        }
    }
    rank
}

/// Exact Jacobian determinant of the map (m_{i,k})_{k ∈ orders} with respect
/// to `variables`, partially evaluated at `point`. Unbound symbols (π in
/// particular) stay formal, so a nonzero result certifies nonvanishing.
pub fn transversality_probe(
    jet: &Jet,
    orders: &[u32],
    variables: &[ParamName],
    point: &BTreeMap<ParamName, BigRational>,
    assumptions: &Assumptions,
) -> Result<ParamPoly, SolverError> {
    if orders.len() != variables.len() {
        return Err(SolverError::ShapeMismatch {
            equations: orders.len(),
            unknowns: variables.len(),
        });
    }
    check_distinct(variables)?;
    for (g, label) in assumptions.declared() {
        if g.eval_rational(point).is_zero() {
            return Err(SolverError::ExcludedPoint(label.to_string()));
        }
    }
    let mut rows: Vec<Vec<ParamPoly>> = Vec::with_capacity(orders.len());
    for &k in orders {
        check_order(jet, k)?;
        let row: Vec<ParamPoly> = variables
            .iter()
            .map(|v| jet.coeff(k).partial_derivative(*v).eval_rational(point))
            .collect();
        rows.push(row);
    }
    Ok(poly_matrix_determinant(&rows))
}

/// Determinant of a square polynomial matrix (Laplace expansion with a
/// column-subset dynamic program; intended for small systems).
pub fn poly_matrix_determinant(rows: &[Vec<ParamPoly>]) -> ParamPoly {
    let n = rows.len();
    for r in rows {
        assert_eq!(r.len(), n, "determinant needs a square matrix");
    }
    if n == 0 {
        return ParamPoly::one();
    }
    assert!(n <= 16, "determinant size out of range");
    // d[mask] = det of the first |mask| rows on the column set `mask`.
    let mut d: Vec<Option<ParamPoly>> = vec![None; 1 << n];
    d[0] = Some(ParamPoly::one());
    for mask in 1usize..(1 << n) {
        let k = mask.count_ones() as usize;
        let mut acc = ParamPoly::zero();
        let mut pos = 0usize;
        for col in 0..n {
            if mask & (1 << col) == 0 {
                continue;
            }
            let entry = &rows[k - 1][col];
            if !entry.is_zero() {
                let minor = d[mask & !(1 << col)].as_ref().expect("subsets fill first");
                let term = entry * minor;
                if (k - 1 + pos) % 2 == 0 {
                    acc.add_assign_ref(&term);
                } else {
                    acc.sub_assign_ref(&term);
                }
            }
            pos += 1;
        }
        d[mask] = Some(acc);
    }
    d[(1 << n) - 1].take().expect("full mask filled")
}

/// Evaluates every jet coefficient at an exact parameter point, leaving π
/// and any unbound symbol formal.
pub fn evaluate_jet(jet: &Jet, point: &BTreeMap<ParamName, BigRational>) -> Vec<ParamPoly> {
    jet.coefficients().map(|(_, p)| p.eval_rational(point)).collect()
}

/// When every nonzero evaluated coefficient is a rational multiple of one
/// common power of π, returns those rationals; the positive factor π^e does
/// not move roots, so root counting on the result is exact.
pub fn pi_multiple_coefficients(values: &[ParamPoly]) -> Option<Vec<BigRational>> {
    let mut common: Option<u8> = None;
    let mut out = Vec::with_capacity(values.len());
    for p in values {
        if p.is_zero() {
            out.push(BigRational::zero());
            continue;
        }
        if p.len() != 1 {
            return None;
        }
        let (mono, coeff) = p.terms().next().expect("one term");
        let e = mono.exponent_of(ParamName::Pi);
        if !mono.iter().all(|(name, _)| name == ParamName::Pi) {
            return None;
        }
        match common {
            None => common = Some(e),
            Some(c) if c == e => {}
            Some(_) => return None,
        }
        out.push(coeff.clone());
    }
    Some(out)
}

/// Rational coefficients of the evaluated jet with π replaced by a caller
/// supplied rational approximation (for root isolation with controlled
/// error); errors when symbols other than π remain.
pub fn approximate_pi_coefficients(
    values: &[ParamPoly],
    pi: &BigRational,
) -> Result<Vec<BigRational>, SolverError> {
    let mut point = BTreeMap::new();
    point.insert(ParamName::Pi, pi.clone());
    values
        .iter()
        .map(|p| {
            let v = p.eval_rational(&point);
            v.as_constant().ok_or(SolverError::NotNumeric(v))
        })
        .collect()
}

/// Exact count of distinct positive roots, with a squarefreeness
/// certificate (all roots simple when true).
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct RootCount {
    /// Distinct roots in (0, ∞).
    pub distinct_positive: usize,
    /// True when the polynomial has no repeated complex root.
    pub squarefree: bool,
}

/// Counts distinct positive roots of Σ coeffs[k]·r^k by a Sturm sequence
/// (exact rational arithmetic; a root at r = 0 is factored out first).
pub fn count_positive_roots(coeffs: &[BigRational]) -> RootCount {
    let p = trim(coeffs.to_vec());
    if p.len() <= 1 {
        return RootCount { distinct_positive: 0, squarefree: true };
    }
    let chain = sturm_chain(&shift_out_zero_root(p));
    let at_zero = sign_variations(chain.iter().map(|q| sign_at_zero(q)));
    let at_inf = sign_variations(chain.iter().map(|q| sign_at_infinity(q)));
    let squarefree = chain.last().map_or(true, |q| q.len() <= 1);
    RootCount { distinct_positive: at_zero.saturating_sub(at_inf), squarefree }
}

/// Isolates the distinct positive roots of Σ coeffs[k]·r^k into disjoint
/// rational intervals (lo, hi], each containing exactly one root.
pub fn isolate_positive_roots(coeffs: &[BigRational]) -> Vec<(BigRational, BigRational)> {
    let p = trim(coeffs.to_vec());
    if p.len() <= 1 {
        return Vec::new();
    }
    let p = shift_out_zero_root(p);
    let chain = sturm_chain(&p);
    let variations_at = |x: &BigRational| -> usize {
        sign_variations(chain.iter().map(|q| sign_of(&eval_dense(q, x))))
    };
    let v_zero = sign_variations(chain.iter().map(|q| sign_at_zero(q)));
    let v_inf = sign_variations(chain.iter().map(|q| sign_at_infinity(q)));
    let total = v_zero.saturating_sub(v_inf);
    if total == 0 {
        return Vec::new();
    }
    // Cauchy bound: every root has |r| ≤ 1 + max|c_k|/|c_n|.
    let lead = p.last().expect("nonconstant").clone();
    let mut bound = BigRational::zero();
    for c in &p[..p.len() - 1] {
        let ratio = (c / &lead).abs();
        if ratio > bound {
            bound = ratio;
        }
    }
    let hi = bound + BigRational::one() + BigRational::one();
    let v_hi = variations_at(&hi);
    let mut out = Vec::new();
    let mut stack = vec![(BigRational::zero(), hi, v_zero, v_hi)];
    while let Some((lo, hi, v_lo, v_hi)) = stack.pop() {
        let count = v_lo.saturating_sub(v_hi);
        if count == 0 {
            continue;
        }
        if count == 1 {
            out.push((lo, hi));
            continue;
        }
        let mid = (&lo + &hi) / BigRational::from_integer(BigInt::from(2));
        let v_mid = variations_at(&mid);
        stack.push((lo, mid.clone(), v_lo, v_mid));
        stack.push((mid, hi, v_mid, v_hi));
    }
    out.sort_by(|a, b| a.0.cmp(&b.0));
    out
}

fn trim(mut v: Vec<BigRational>) -> Vec<BigRational> {
    while v.last().map_or(false, Zero::is_zero) {
        v.pop();
    }
    v
}

fn shift_out_zero_root(p: Vec<BigRational>) -> Vec<BigRational> {
    let first = p.iter().position(|c| !c.is_zero()).unwrap_or(0);
    p[first..].to_vec()
}

fn derivative_dense(p: &[BigRational]) -> Vec<BigRational> {
    p.iter()
        .enumerate()
        .skip(1)
        .map(|(k, c)| c * BigRational::from_integer(BigInt::from(k)))
        .collect()
}

fn eval_dense(p: &[BigRational], x: &BigRational) -> BigRational {
    let mut acc = BigRational::zero();
    for c in p.iter().rev() {
        acc = acc * x + c;
    }
    acc
}

/// Remainder of dense polynomial division, normalized to content 1 by a
/// positive rational factor (signs are all Sturm needs).
fn remainder_dense(num: &[BigRational], den: &[BigRational]) -> Vec<BigRational> {
    let mut rem = num.to_vec();
    let dn = den.len();
    let lead = den.last().expect("nonzero divisor");
    while rem.len() >= dn && rem.len() > 1 {
        let shift = rem.len() - dn;
        let factor = rem.last().expect("nonempty") / lead;
        for (i, c) in den.iter().enumerate() {
            let delta = &factor * c;
            rem[shift + i] = &rem[shift + i] - &delta;
        }
        rem = trim(rem);
        if rem.is_empty() {
            return rem;
        }
        if rem.len() < dn {
            break;
        }
    }
    rem
}

fn normalize_positive(mut p: Vec<BigRational>) -> Vec<BigRational> {
    if let Some(last) = p.last() {
        let scale = last.abs().recip();
        for c in &mut p {
            *c = &*c * &scale;
        }
    }
    p
}

fn sturm_chain(p: &[BigRational]) -> Vec<Vec<BigRational>> {
    let mut chain = vec![normalize_positive(trim(p.to_vec()))];
    let d = derivative_dense(&chain[0]);
    if trim(d.clone()).is_empty() {
        return chain;
    }
    chain.push(normalize_positive(d));
    loop {
        let n = chain.len();
        let rem = remainder_dense(&chain[n - 2], &chain[n - 1]);
        if rem.is_empty() {
            return chain;
        }
        let neg: Vec<BigRational> = rem.iter().map(|c| -c).collect();
        chain.push(normalize_positive(neg));
        if chain.last().expect("just pushed").len() == 1 {
            return chain;
        }
    }
}

fn sign_of(x: &BigRational) -> i8 {
    if x.is_zero() {
        0
    } else if x.is_positive() {
        1
    } else {
        -1
    }
}

fn sign_at_zero(p: &[BigRational]) -> i8 {
    p.first().map_or(0, sign_of)
}

fn sign_at_infinity(p: &[BigRational]) -> i8 {
    p.last().map_or(0, sign_of)
}

fn sign_variations(signs: impl Iterator<Item = i8>) -> usize {
    let mut count = 0usize;
    let mut last = 0i8;
    for s in signs {
        if s == 0 {
            continue;
        }
        if last != 0 && s != last {
            count += 1;
        }
        last = s;
    }
    count
}
