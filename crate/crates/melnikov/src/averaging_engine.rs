//! Taylor jets of the return flow and the averaged displacement
//! coefficients extracted from them.
//!
//! Writing the polar equation dr/dθ = F₀ + εF₁ + ε²F₂ + O(ε³) and expanding
//! its solution with initial radius r as 𝓛₀ + ε𝓛₁ + (ε²/2)𝓛₂ + O(ε³), the
//! three unknowns satisfy
//!
//!   𝓛₀′ = F₀(θ, 𝓛₀),                                𝓛₀(0) = r,
//!   𝓛₁′ = ∂ρF₀(θ, 𝓛₀)·𝓛₁ + F₁(θ, 𝓛₀),               𝓛₁(0) = 0,
//!   𝓛₂′ = ∂ρF₀(θ, 𝓛₀)·𝓛₂ + 2·F₂(θ, 𝓛₀)
//!          + 2·∂ρF₁(θ, 𝓛₀)·𝓛₁ + ∂²ρF₀(θ, 𝓛₀)·𝓛₁²,   𝓛₂(0) = 0.
//!
//! Truncating 𝓛ᵢ = Σ_k l_{i,k}(θ)·r^k turns each equation into a chain of
//! scalar problems l′_{i,k} = (known quasi-trigonometric polynomial): F₀
//! starts at ρ², so the r^k coefficient of every composite above involves
//! only coefficients l_{i,m} with m < k. Each step is one exact
//! antiderivative, and the averaging functions are the end values
//! m_{i,k} = l_{i,k}(2π).
//!
//! The second-order function carries the customary i!-style normalization:
//! the displacement map is d(r, ε) = ε·M₁(r) + (ε²/2)·M₂(r) + O(ε³).
//! Positive constants do not move zeros, so limit-cycle statements read off
//! M₂ directly; only numeric displacement comparisons need the ½.

use std::collections::BTreeMap;
use std::fmt;

use num_bigint::BigInt;
use num_rational::BigRational;
use thiserror::Error;

use crate::polar_model::{to_polar, ModelError, PerturbedSystem, PolarForm};
use crate::symbolic_ring::{ParamName, ParamPoly, RingError};
use crate::trig_calculus::{QuasiTrigPoly, RSeries, TrigError};

/// Default bound on the jet truncation order; raise it through
/// [`JetOptions`] for deeper jets.
pub const DEFAULT_ORDER_CAP: u32 = 17;

/// Errors from jet computation.
#[derive(Debug, Error)]
pub enum EngineError {
    /// Requested truncation order outside the accepted range.
    #[error("jet order {j} outside the supported range 1..={cap}")]
    OrderOutOfRange { j: u32, cap: u32 },
    /// An input (polar form or earlier flow jet) is truncated too early.
    #[error("input truncated at order {have} but the jet needs order {need}")]
    TruncationTooLow { have: u32, need: u32 },
    /// A flow jet was passed in the wrong ε-slot.
    #[error("expected a flow jet of ε-order {expected}, got order {got}")]
    WrongEpsOrder { expected: u8, got: u8 },
    /// The system lacks the perturbation data the requested order reads.
    #[error("order-{0} perturbation is not attached to the system")]
    MissingPerturbation(u8),
    /// The unperturbed return map is not the identity.
    #[error("unperturbed return map differs from the identity at r^{k}: not a center")]
    NotACenter { k: u32 },
    /// Averaging orders other than 1 and 2 are out of scope.
    #[error("averaging order {0} is not supported (only 1 and 2)")]
    UnsupportedOrder(u8),
    /// Propagated model-construction failure.
    #[error(transparent)]
    Model(#[from] ModelError),
    /// Propagated series failure.
    #[error(transparent)]
    Trig(#[from] TrigError),
}

/// Tunable limits for jet computation.
#[derive(Clone, Copy, Debug)]
pub struct JetOptions {
    /// Largest truncation order `j` accepted by [`averaging_jet_with`].
    pub order_cap: u32,
}

impl Default for JetOptions {
    fn default() -> Self {
        JetOptions { order_cap: DEFAULT_ORDER_CAP }
    }
}

/// The θ-dependent coefficients of one ε-order of the return flow,
/// 𝓛ᵢ(θ, r) ≈ Σ_{k=1..j} l_{i,k}(θ)·r^k.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct FlowJet {
    order_eps: u8,
    l: Vec<QuasiTrigPoly>,
}

impl FlowJet {
    /// The ε-order i of the flow term this jet expands.
    pub fn order_eps(&self) -> u8 {
        self.order_eps
    }

    /// Truncation order j in r.
    pub fn truncation(&self) -> u32 {
        self.l.len() as u32
    }

    /// Coefficient l_{i,k}, 1-based; zero beyond the truncation.
    pub fn coeff(&self, k: u32) -> &QuasiTrigPoly {
        static ZERO: once_cell::sync::Lazy<QuasiTrigPoly> =
            once_cell::sync::Lazy::new(QuasiTrigPoly::zero);
        assert!(k >= 1, "flow-jet coefficients start at k = 1");
        self.l.get(k as usize - 1).unwrap_or(&ZERO)
    }

    /// The jet as a series in r (coefficient l_{i,k} at r^k).
    pub fn as_series(&self) -> RSeries {
        let mut s = RSeries::zero(self.truncation());
        for (idx, c) in self.l.iter().enumerate() {
            s.set_coeff(idx as u32 + 1, c.clone());
        }
        s
    }

    /// True when every coefficient vanishes.
    pub fn is_zero(&self) -> bool {
        self.l.iter().all(QuasiTrigPoly::is_zero)
    }

    /// End values at θ = 2π: the displacement jet of this ε-order.
    pub fn at_2pi(&self) -> Jet {
        Jet {
            order_eps: self.order_eps,
            m: self.l.iter().map(QuasiTrigPoly::eval_2pi).collect(),
        }
    }
}

/// One averaging-function jet M_i^[j](r) = Σ_{k=1..j} m_{i,k}·r^k with
/// exact polynomial coefficients in π and the system parameters.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Jet {
    order_eps: u8,
    m: Vec<ParamPoly>,
}

impl Jet {
    /// Builds a jet from explicit coefficients m_{i,1..j}.
    pub fn from_coefficients(order_eps: u8, m: Vec<ParamPoly>) -> Jet {
        Jet { order_eps, m }
    }

    /// The ε-order i of the averaging function.
    pub fn order_eps(&self) -> u8 {
        self.order_eps
    }

    /// Truncation order j in r.
    pub fn truncation(&self) -> u32 {
        self.m.len() as u32
    }

    /// Coefficient m_{i,k}, 1-based; zero beyond the truncation.
    pub fn coeff(&self, k: u32) -> &ParamPoly {
        static ZERO: once_cell::sync::Lazy<ParamPoly> =
            once_cell::sync::Lazy::new(ParamPoly::zero);
        assert!(k >= 1, "jet coefficients start at k = 1");
        self.m.get(k as usize - 1).unwrap_or(&ZERO)
    }

    /// The pairs (k, m_{i,k}) for k = 1..j.
    pub fn coefficients(&self) -> impl Iterator<Item = (u32, &ParamPoly)> {
        self.m.iter().enumerate().map(|(idx, p)| (idx as u32 + 1, p))
    }

    /// True when every coefficient vanishes.
    pub fn is_zero(&self) -> bool {
        self.m.iter().all(ParamPoly::is_zero)
    }

    /// Applies one simultaneous parameter substitution to every coefficient.
    pub fn substitute(
        &self,
        bindings: &BTreeMap<ParamName, ParamPoly>,
    ) -> Result<Jet, RingError> {
        let m = self
            .m
            .iter()
            .map(|p| p.substitute(bindings))
            .collect::<Result<Vec<_>, _>>()?;
        Ok(Jet { order_eps: self.order_eps, m })
    }

    /// Floating-point value at radius r; π is bound automatically.
    pub fn eval_f64(
        &self,
        r: f64,
        bindings: &BTreeMap<ParamName, f64>,
    ) -> Result<f64, String> {
        let mut total = 0.0;
        let mut rk = 1.0;
        for p in &self.m {
            rk *= r;
            total += p.eval_f64(bindings)? * rk;
        }
        Ok(total)
    }
}

impl fmt::Display for Jet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let mut wrote = false;
        for (k, p) in self.coefficients() {
            if p.is_zero() {
                continue;
            }
            if wrote {
                write!(f, " + ")?;
            }
            write!(f, "({p})*r^{k}")?;
            wrote = true;
        }
        if !wrote {
            write!(f, "0")?;
        }
        write!(f, " + O(r^{})", self.truncation() + 1)
    }
}

fn check_truncation(have: u32, j: u32) -> Result<(), EngineError> {
    if j == 0 {
        return Err(EngineError::OrderOutOfRange { j, cap: DEFAULT_ORDER_CAP });
    }
    if have < j {
        return Err(EngineError::TruncationTooLow { have, need: j });
    }
    Ok(())
}

fn check_eps_order(jet: &FlowJet, expected: u8) -> Result<(), EngineError> {
    if jet.order_eps != expected {
        return Err(EngineError::WrongEpsOrder { expected, got: jet.order_eps });
    }
    Ok(())
}

fn log_sparsity(i: u8, l: &[QuasiTrigPoly]) {
    if !log::log_enabled!(log::Level::Debug) {
        return;
    }
    for (idx, q) in l.iter().enumerate() {
        let layers = q.layers().count();
        let mut modes = 0usize;
        let mut terms = 0usize;
        for (_, f) in q.layers() {
            for (_, _, p) in f.modes() {
                modes += 1;
                terms += p.len();
            }
        }
        log::debug!(
            "l[{},{}]: {} θ-layers, {} modes, {} ring terms",
            i,
            idx + 1,
            layers,
            modes,
            terms
        );
    }
}

/// Expands the unperturbed flow: l_{0,1} = 1 and, for k = 2..j, one exact
/// antiderivative of the r^k coefficient of F₀(θ, 𝓛₀) per step.
pub fn flow_jet_0(polar: &PolarForm, j: u32) -> Result<FlowJet, EngineError> {
    check_truncation(polar.order, j)?;
    let f0 = &polar.f[0];
    let mut lser = RSeries::identity(j);
    for k in 2..=j {
        // The r^k coefficient of F₀∘𝓛₀ involves only l_{0,m} with m < k
        // because F₀ starts at ρ², so the still-zero k-slot is harmless.
        let comp = f0.compose(&lser.truncate(k))?;
        lser.set_coeff(k, comp.coeff(k).antiderivative());
    }
    let l: Vec<QuasiTrigPoly> = (1..=j).map(|k| lser.coeff(k).clone()).collect();
    log_sparsity(0, &l);
    Ok(FlowJet { order_eps: 0, l })
}

/// ∂ρF₀ composed with 𝓛₀, exact to order j − 1; that suffices since the
/// weight multiplies series with no constant term.
fn variational_weight(polar: &PolarForm, pows: &[RSeries], j: u32) -> RSeries {
    polar.f[0].d_dr().compose_with_powers(pows, j.saturating_sub(1))
}

/// Integrates l′_k = g_k + Σ_{m<k} w_{k−m}·l_m with l_k(0) = 0; w must
/// have no constant term, so only already-solved coefficients are read.
fn integrate_linear(g: &RSeries, w: &RSeries, j: u32) -> Vec<QuasiTrigPoly> {
    debug_assert!(w.coeff(0).is_zero());
    let mut l: Vec<QuasiTrigPoly> = Vec::with_capacity(j as usize);
    for k in 1..=j {
        let mut rhs = g.coeff(k).clone();
        for m in 1..k {
            let wc = w.coeff(k - m);
            let lm = &l[m as usize - 1];
            if wc.is_zero() || lm.is_zero() {
                continue;
            }
            rhs.add_assign_ref(&wc.mul(lm));
        }
        l.push(rhs.antiderivative());
    }
    l
}

/// Expands the first-order flow term along the unperturbed flow:
/// l′_{1,k} = [r^k](F₁(θ, 𝓛₀) + ∂ρF₀(θ, 𝓛₀)·𝓛₁), integrated from zero.
pub fn flow_jet_1(polar: &PolarForm, l0: &FlowJet, j: u32) -> Result<FlowJet, EngineError> {
    check_truncation(polar.order, j)?;
    check_truncation(l0.truncation(), j)?;
    check_eps_order(l0, 0)?;
    let lser = l0.as_series().truncate(j);
    let pows = lser.powers(j)?;
    let g1 = polar.f[1].compose_with_powers(&pows, j);
    let w = variational_weight(polar, &pows, j);
    let l = integrate_linear(&g1, &w, j);
    log_sparsity(1, &l);
    Ok(FlowJet { order_eps: 1, l })
}

/// Expands the second-order flow term: the same variational weight as
/// order one, driven by 2·F₂(θ, 𝓛₀) + 2·∂ρF₁(θ, 𝓛₀)·𝓛₁ + ∂²ρF₀(θ, 𝓛₀)·𝓛₁²
/// (the flow's ε²-coefficient is half of this function).
pub fn flow_jet_2(
    polar: &PolarForm,
    l0: &FlowJet,
    l1: &FlowJet,
    j: u32,
) -> Result<FlowJet, EngineError> {
    check_truncation(polar.order, j)?;
    check_truncation(l0.truncation(), j)?;
    check_truncation(l1.truncation(), j)?;
    check_eps_order(l0, 0)?;
    check_eps_order(l1, 1)?;
    let lser = l0.as_series().truncate(j);
    let pows = lser.powers(j)?;
    let l1s = l1.as_series().truncate(j);

    let two = BigRational::from_integer(BigInt::from(2));
    let mut g2 = polar.f[2].compose_with_powers(&pows, j).scale(&two);
    // ∂ρF₁∘𝓛₀ is exact only to order j − 1, but 𝓛₁ has no constant term,
    // so the zero-extended product below is exact at order j; the same
    // argument covers ∂²ρF₀∘𝓛₀ against 𝓛₁² starting at r².
    let f1p = polar.f[1].d_dr().compose_with_powers(&pows, j.saturating_sub(1));
    g2 = g2.add(&f1p.mul_to_order(&l1s, j).scale(&two));
    let f0pp = polar.f[0]
        .d_dr()
        .d_dr()
        .compose_with_powers(&pows, j.saturating_sub(2));
    g2 = g2.add(&f0pp.mul_to_order(&l1s.mul(&l1s), j));

    let w = variational_weight(polar, &pows, j);
    let l = integrate_linear(&g2, &w, j);
    log_sparsity(2, &l);
    Ok(FlowJet { order_eps: 2, l })
}

/// Verifies 𝓛₀(2π, r) = r through the jet's truncation order, i.e. the
/// unperturbed return map is the identity. Anything else means the origin
/// is not a center and averaging does not apply.
pub fn check_center(l0: &FlowJet) -> Result<(), EngineError> {
    for k in 2..=l0.truncation() {
        if !l0.coeff(k).eval_2pi().is_zero() {
            return Err(EngineError::NotACenter { k });
        }
    }
    Ok(())
}

/// Computes M_i^[j], the order-j Taylor jet of the ith averaging function,
/// under the default [`JetOptions`].
pub fn averaging_jet(system: &PerturbedSystem, i: u8, j: u32) -> Result<Jet, EngineError> {
    averaging_jet_with(system, i, j, &JetOptions::default())
}

/// Computes M_i^[j] with explicit options: polar reduction, flow jets in
/// increasing ε-order with an exact center check in between, and evaluation
/// at θ = 2π.
pub fn averaging_jet_with(
    system: &PerturbedSystem,
    i: u8,
    j: u32,
    options: &JetOptions,
) -> Result<Jet, EngineError> {
    if !(i == 1 || i == 2) {
        return Err(EngineError::UnsupportedOrder(i));
    }
    if j == 0 || j > options.order_cap {
        return Err(EngineError::OrderOutOfRange { j, cap: options.order_cap });
    }
    if system.z1.is_none() {
        return Err(EngineError::MissingPerturbation(1));
    }
    if i == 2 && system.z2.is_none() {
        return Err(EngineError::MissingPerturbation(2));
    }

    let polar = to_polar(system, j.max(2))?;
    let l0 = flow_jet_0(&polar, j)?;
    check_center(&l0)?;
    let l1 = flow_jet_1(&polar, &l0, j)?;
    if i == 1 {
        return Ok(l1.at_2pi());
    }
    let l2 = flow_jet_2(&polar, &l0, &l1, j)?;
    Ok(l2.at_2pi())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::polar_model::{
        catalog, generic_perturbation, parse_system_definition, PlanarPoly, CATALOG_NAMES,
    };
    use crate::symbolic_ring::{parse_poly, Slot};
    use crate::trig_calculus::FourierPoly;

    fn pert(slot: Slot, i: u8, kx: u8, ky: u8) -> ParamName {
        ParamName::perturbation(slot, i, kx, ky).unwrap()
    }

    fn mono(kx: u8, ky: u8, coeff: ParamPoly) -> PlanarPoly {
        let mut p = PlanarPoly::zero();
        p.add_term((kx, ky), coeff);
        p
    }

    fn bind(pairs: &[(ParamName, &str)]) -> BTreeMap<ParamName, ParamPoly> {
        pairs
            .iter()
            .map(|(n, rhs)| (*n, parse_poly(rhs).unwrap()))
            .collect()
    }

    fn linear_center() -> PerturbedSystem {
        parse_system_definition("name = lin\ndegree = 2\nP = -y\nQ = x\n").unwrap()
    }

    #[test]
    fn linear_center_flow_is_the_identity() {
        let polar = to_polar(&linear_center(), 6).unwrap();
        let l0 = flow_jet_0(&polar, 6).unwrap();
        assert_eq!(l0.coeff(1), &QuasiTrigPoly::one());
        for k in 2..=6 {
            assert!(l0.coeff(k).is_zero(), "l_0,{k} should vanish");
        }
        check_center(&l0).unwrap();
    }

    /// The quadratic center's first flow coefficient in closed form:
    /// l_{0,2}(θ) = (sin³θ + cos³θ − 1)/3, the antiderivative of
    /// cos θ sin θ (sin θ − cos θ).
    #[test]
    fn lv_quadratic_flow_coefficient_is_exact() {
        let sys = catalog("LV", &[]).unwrap();
        let polar = to_polar(&sys, 4).unwrap();
        let l0 = flow_jet_0(&polar, 4).unwrap();

        let mut f = FourierPoly::constant(ParamPoly::rational(-1, 3));
        f.add_mode(1, crate::trig_calculus::Kind::Cos, ParamPoly::rational(1, 4));
        f.add_mode(1, crate::trig_calculus::Kind::Sin, ParamPoly::rational(1, 4));
        f.add_mode(3, crate::trig_calculus::Kind::Cos, ParamPoly::rational(1, 12));
        f.add_mode(3, crate::trig_calculus::Kind::Sin, ParamPoly::rational(-1, 12));
        assert_eq!(l0.coeff(2), &QuasiTrigPoly::from_fourier(f));

        check_center(&l0).unwrap();
    }

    /// Numeric flow oracle: fourth-order Runge-Kutta on the exact polar
    /// ODE dr/dθ = A₀/B₀ for the quadratic center, compared against the
    /// order-2 and order-5 jets; errors must shrink like r³ and r⁶.
    #[test]
    fn lv_flow_jet_matches_numeric_integration() {
        let sys = catalog("LV", &[]).unwrap();
        let polar = to_polar(&sys, 5).unwrap();
        let l0 = flow_jet_0(&polar, 5).unwrap();
        let series = l0.as_series();
        let bindings = BTreeMap::new();

        // dr/dθ = r²·cs(s−c) / (1 + r·cs(c+s)), exact for this system.
        let rhs = |theta: f64, r: f64| {
            let (s, c) = theta.sin_cos();
            r * r * (c * s * (s - c)) / (1.0 + r * c * s * (c + s))
        };
        let theta_end = 2.0;
        for r0 in [0.01_f64, 0.02, 0.04] {
            let n = 4000;
            let h = theta_end / n as f64;
            let mut r = r0;
            let mut th = 0.0;
            for _ in 0..n {
                let k1 = rhs(th, r);
                let k2 = rhs(th + h / 2.0, r + h / 2.0 * k1);
                let k3 = rhs(th + h / 2.0, r + h / 2.0 * k2);
                let k4 = rhs(th + h, r + h * k3);
                r += h / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
                th += h;
            }
            let l02 = l0.coeff(2).eval_f64(theta_end, &bindings).unwrap();
            let two_term = r0 + l02 * r0 * r0;
            assert!(
                (r - two_term).abs() <= 2.0 * r0.powi(3),
                "order-2 jet off at r0 = {r0}: {} vs {two_term}",
                r
            );
            let five_term = series.eval_f64(theta_end, r0, &bindings).unwrap();
            assert!(
                (r - five_term).abs() <= 2.0 * r0.powi(6),
                "order-5 jet off at r0 = {r0}: {} vs {five_term}",
                r
            );
        }
    }

    /// Every catalog system passes the symbolic center check: the return
    /// map of the unperturbed flow is the identity, coefficient by
    /// coefficient, with family parameters left symbolic.
    #[test]
    fn catalog_center_check_is_exact() {
        for name in CATALOG_NAMES {
            let sys = catalog(name, &[]).unwrap();
            let polar = to_polar(&sys, 6).unwrap();
            let l0 = flow_jet_0(&polar, 6).unwrap();
            check_center(&l0).unwrap_or_else(|e| panic!("{name}: {e}"));
        }
    }

    #[test]
    fn zero_perturbation_gives_zero_jets() {
        let mut sys = catalog("S1", &[]).unwrap();
        sys.z1 = Some((PlanarPoly::zero(), PlanarPoly::zero()));
        sys.z2 = Some((PlanarPoly::zero(), PlanarPoly::zero()));
        let jet1 = averaging_jet(&sys, 1, 5).unwrap();
        assert!(jet1.is_zero());
        let jet2 = averaging_jet(&sys, 2, 5).unwrap();
        assert!(jet2.is_zero());

        let polar = to_polar(&sys, 5).unwrap();
        let l0 = flow_jet_0(&polar, 5).unwrap();
        let l1 = flow_jet_1(&polar, &l0, 5).unwrap();
        assert!(l1.is_zero());
        assert!(flow_jet_2(&polar, &l0, &l1, 5).unwrap().is_zero());
    }

    #[test]
    fn missing_perturbations_are_reported() {
        let sys = catalog("LV", &[]).unwrap();
        assert!(matches!(
            averaging_jet(&sys, 1, 3),
            Err(EngineError::MissingPerturbation(1))
        ));
        let sys = generic_perturbation(&sys, 1, 2).unwrap();
        assert!(matches!(
            averaging_jet(&sys, 2, 3),
            Err(EngineError::MissingPerturbation(2))
        ));
        assert!(matches!(
            averaging_jet(&sys, 3, 3),
            Err(EngineError::UnsupportedOrder(3))
        ));
        assert!(matches!(
            averaging_jet(&sys, 1, 0),
            Err(EngineError::OrderOutOfRange { j: 0, .. })
        ));
        assert!(matches!(
            averaging_jet(&sys, 1, 18),
            Err(EngineError::OrderOutOfRange { j: 18, .. })
        ));
        assert!(averaging_jet_with(&sys, 1, 18, &JetOptions { order_cap: 20 }).is_ok());
    }

    /// Known first-order coefficients for the quadratic center with a
    /// generic quadratic perturbation: m_{1,1} = π(a₁₁₀ + b₁₀₁) and
    /// m_{1,3} = −(π/8)(2a₁₂₀ + 2a₁₀₂ − a₁₁₀ + 2b₁₂₀ + 2b₁₀₂ − b₁₀₁).
    /// The m_{1,3} sign is pinned by direct return-map integration of the
    /// planar system: with only a₁₂₀ = 1 (respectively b₁₀₂ = 1) at
    /// ε = 1e−4, the measured displacement per ε at r = 0.1 is −7.61e−4,
    /// matching −π/4·r³ = −7.85e−4 plus the r⁵ tail, not +π/4·r³.
    /// The two conditions annihilating m_{1,1} and m_{1,3} kill the whole
    /// 5-jet, even coefficients included.
    #[test]
    fn lv_first_order_jet_matches_known_coefficients() {
        let sys = generic_perturbation(&catalog("LV", &[]).unwrap(), 1, 2).unwrap();
        let jet = averaging_jet(&sys, 1, 5).unwrap();

        let m11 = parse_poly("pi*(a110 + b101)").unwrap();
        let m13 = parse_poly(
            "-pi/8*(2*a120 + 2*a102 - a110 + 2*b120 + 2*b102 - b101)",
        )
        .unwrap();
        assert_eq!(jet.coeff(1), &m11);
        assert_eq!(jet.coeff(3), &m13);

        let conditions = bind(&[
            (pert(Slot::A, 1, 1, 0), "-b101"),
            (pert(Slot::A, 1, 0, 2), "-b102 - a120 - b120"),
        ]);
        assert!(jet.substitute(&conditions).unwrap().is_zero());
    }

    /// Every m_{1,k} is homogeneous of degree one in the perturbation
    /// parameters (family parameters and π may appear to any degree).
    #[test]
    fn first_order_jet_is_homogeneous_linear() {
        let sys = generic_perturbation(&catalog("H", &[]).unwrap(), 1, 2).unwrap();
        let jet = averaging_jet(&sys, 1, 4).unwrap();
        let first: Vec<ParamName> = sys.perturbation_params(1);
        assert!(!jet.is_zero());
        for (_, m) in jet.coefficients() {
            for (mono, _) in m.terms() {
                let deg: u32 = first.iter().map(|p| mono.exponent_of(*p) as u32).sum();
                assert_eq!(deg, 1, "non-linear monomial {mono:?} in {m}");
            }
        }
    }

    /// First-order jets add when the first-order perturbations add.
    #[test]
    fn first_order_jet_is_additive_in_the_perturbation() {
        let base = catalog("LV", &[]).unwrap();
        let za = (
            mono(2, 0, ParamPoly::rational(1, 2)),
            mono(1, 1, ParamPoly::from_int(-1)),
        );
        let zb = (
            mono(0, 1, ParamPoly::rational(2, 3)),
            mono(0, 2, ParamPoly::from_int(3)),
        );
        let mut sys_a = base.clone();
        sys_a.z1 = Some(za.clone());
        let mut sys_b = base.clone();
        sys_b.z1 = Some(zb.clone());
        let mut sys_ab = base.clone();
        sys_ab.z1 = Some((za.0.add(&zb.0), za.1.add(&zb.1)));

        let ja = averaging_jet(&sys_a, 1, 5).unwrap();
        let jb = averaging_jet(&sys_b, 1, 5).unwrap();
        let jab = averaging_jet(&sys_ab, 1, 5).unwrap();
        for k in 1..=5 {
            let mut sum = ja.coeff(k).clone();
            sum.add_assign_ref(jb.coeff(k));
            assert_eq!(&sum, jab.coeff(k), "additivity fails at k = {k}");
        }
        assert!(!jab.is_zero());
    }

    /// Known first-order coefficients for the quartic-integral center:
    /// m_{1,3} = π(9a₁₁₁ − 12b₁₀₂ − 40b₁₀₁ − 30b₁₂₀)/9 and
    /// m_{1,5} = 40π(21a₁₁₁ − 48b₁₀₂ − 40b₁₀₁ − 60b₁₂₀)/81.
    #[test]
    fn s4_first_order_jet_matches_known_coefficients() {
        let sys = generic_perturbation(&catalog("S4", &[]).unwrap(), 1, 2).unwrap();
        let jet = averaging_jet(&sys, 1, 5).unwrap();

        assert_eq!(jet.coeff(1), &parse_poly("pi*(a110 + b101)").unwrap());
        assert_eq!(
            jet.coeff(3),
            &parse_poly("pi/9*(9*a111 - 12*b102 - 40*b101 - 30*b120)").unwrap()
        );
        assert_eq!(
            jet.coeff(5),
            &parse_poly("40*pi/81*(21*a111 - 48*b102 - 40*b101 - 60*b120)").unwrap()
        );

        // The annihilating conditions kill the whole 5-jet.
        let conditions = bind(&[
            (pert(Slot::A, 1, 1, 0), "-b101"),
            (pert(Slot::A, 1, 1, 1), "8*b101 + 4*b120"),
            (pert(Slot::B, 1, 0, 2), "8/3*b101 + 1/2*b120"),
        ]);
        assert!(jet.substitute(&conditions).unwrap().is_zero());
    }

    /// Known first-order coefficients for the Hamiltonian family after
    /// a₁₁₀ = −b₁₀₁, and the exact 2×2 determinant identity tying the
    /// order-3 and order-5 rows to the family's discriminant d.
    #[test]
    fn hamiltonian_first_order_jet_matches_known_coefficients() {
        let sys = generic_perturbation(&catalog("H", &[]).unwrap(), 1, 2).unwrap();
        let jet = averaging_jet(&sys, 1, 5).unwrap();
        assert_eq!(jet.coeff(1), &parse_poly("pi*(a110 + b101)").unwrap());

        let reduced = jet
            .substitute(&bind(&[(pert(Slot::A, 1, 1, 0), "-b101")]))
            .unwrap();
        let m13 = parse_poly(
            "-pi/8*((alpha + 3*gamma)*(a111 + 2*b102) + (beta + 3*delta)*(b111 + 2*a120))",
        )
        .unwrap();
        let m15 = parse_poly(
            "-pi/128*((39*alpha*delta^2 + 27*gamma*delta^2 + 30*alpha*beta*delta \
              + 30*beta*gamma*delta + 5*alpha^3 + 15*alpha^2*gamma + 15*alpha*beta^2 \
              + 35*alpha*gamma^2 + 35*beta^2*gamma + 105*gamma^3)*(a111 + 2*b102) \
              + (117*delta^3 + 39*beta*delta^2 + 35*alpha^2*delta + 30*alpha*gamma*delta \
              + 15*beta^2*delta + 15*gamma^2*delta + 15*alpha^2*beta + 30*alpha*beta*gamma \
              + 5*beta^3 + 35*beta*gamma^2)*(b111 + 2*a120))",
        )
        .unwrap();
        assert_eq!(reduced.coeff(3), &m13);
        assert_eq!(reduced.coeff(5), &m15);

        // Determinant of the linear system (m13, m15) in the two combos
        // u = a111 + 2b102, v = b111 + 2a120 equals 5π²d/512.
        let unknowns = [
            pert(Slot::A, 1, 1, 1),
            pert(Slot::B, 1, 1, 1),
        ];
        let row3 = reduced.coeff(3).collect_linear(&unknowns).unwrap();
        let row5 = reduced.coeff(5).collect_linear(&unknowns).unwrap();
        let det = &(&row3.coeffs[0] * &row5.coeffs[1]) - &(&row3.coeffs[1] * &row5.coeffs[0]);
        let d = sys.named_polys.get("d").expect("discriminant attached");
        let scale = parse_poly("5*pi^2/512").unwrap();
        assert_eq!(det, &scale * d);

        // The solution branch for d ≠ 0 kills the 5-jet entirely.
        let conditions = bind(&[
            (pert(Slot::A, 1, 1, 0), "-b101"),
            (pert(Slot::A, 1, 1, 1), "-2*b102"),
            (pert(Slot::B, 1, 1, 1), "-2*a120"),
        ]);
        assert!(jet.substitute(&conditions).unwrap().is_zero());
    }

    /// Known first-order coefficients for the cubic rational-integral
    /// center (family parameter α symbolic) after a₁₁₀ = −b₁₀₁, and the
    /// vanishing of the full 7-jet under its closing conditions.
    #[test]
    fn cubic_rational_first_order_jet_matches_known_coefficients() {
        let sys = generic_perturbation(&catalog("CR1", &[]).unwrap(), 1, 3).unwrap();
        let jet = averaging_jet(&sys, 1, 7).unwrap();
        assert_eq!(jet.coeff(1), &parse_poly("pi*(a110 + b101)").unwrap());

        let reduced = jet
            .substitute(&bind(&[(pert(Slot::A, 1, 1, 0), "-b101")]))
            .unwrap();
        let m13 = parse_poly(
            "pi/4*(3*a130 + a112 + 4*alpha*a120 + 4*alpha*a102 + 3*b103 \
              - 8*(alpha^2 + 1)*b101 + b121)",
        )
        .unwrap();
        let m15 = parse_poly(
            "pi/4*((3*alpha^2 + 1)*a130 + (alpha^2 + 1)*a112 + 4*alpha^3*a120 \
              + 4*alpha^3*a102 + (3*alpha^2 - 1)*b103 - 8*alpha^2*(alpha^2 + 1)*b101 \
              + (alpha^2 - 1)*b121)",
        )
        .unwrap();
        let m17 = parse_poly(
            "pi/16*((12*alpha^4 + 28*alpha^2 + 3)*a130 + (4*alpha^4 + 28*alpha^2 + 5)*a112 \
              + 16*alpha^5*a120 + 16*alpha^5*a102 + (12*alpha^4 - 28*alpha^2 - 5)*b103 \
              - 32*alpha^4*(alpha^2 + 1)*b101 + (4*alpha^4 - 28*alpha^2 - 3)*b121)",
        )
        .unwrap();
        assert_eq!(reduced.coeff(3), &m13);
        assert_eq!(reduced.coeff(5), &m15);
        assert_eq!(reduced.coeff(7), &m17);

        let closing = "-alpha*(a120 + a102) + 2*(alpha^2 + 1)*b101 - b121";
        let conditions = bind(&[
            (pert(Slot::A, 1, 1, 0), "-b101"),
            (pert(Slot::A, 1, 3, 0), "b121"),
            (pert(Slot::A, 1, 1, 2), closing),
            (pert(Slot::B, 1, 0, 3), closing),
        ]);
        assert!(jet.substitute(&conditions).unwrap().is_zero());
    }

    /// Hand-computed second-order oracle on the linear center: with
    /// Z₁ = (a·x, 0) and Z₂ = (0, b·y) the flow gives 𝓛₁ = a·r·(θ/2 +
    /// sin 2θ/4), the displacement's ε²-coefficient is πb + (π²/2)a², and
    /// m_{2,1} is twice that.
    #[test]
    fn linear_center_second_order_jet_matches_hand_computation() {
        let mut sys = linear_center();
        let a = pert(Slot::A, 1, 1, 0);
        let b = pert(Slot::B, 2, 0, 1);
        sys.z1 = Some((mono(1, 0, ParamPoly::var(a)), PlanarPoly::zero()));
        sys.z2 = Some((PlanarPoly::zero(), mono(0, 1, ParamPoly::var(b))));

        let jet1 = averaging_jet(&sys, 1, 2).unwrap();
        assert_eq!(jet1.coeff(1), &parse_poly("pi*a110").unwrap());

        let jet2 = averaging_jet(&sys, 2, 2).unwrap();
        assert_eq!(
            jet2.coeff(1),
            &parse_poly("2*pi*b201 + pi^2*a110^2").unwrap()
        );
    }

    /// Every m_{2,k} splits into a part quadratic in first-order
    /// parameters and a part linear in second-order parameters.
    #[test]
    fn second_order_jet_has_the_bilinear_structure() {
        let sys = catalog("LV", &[]).unwrap();
        let sys = generic_perturbation(&sys, 1, 2).unwrap();
        let sys = generic_perturbation(&sys, 2, 2).unwrap();
        let jet = averaging_jet(&sys, 2, 3).unwrap();
        assert!(!jet.is_zero());
        let first = sys.perturbation_params(1);
        let second = sys.perturbation_params(2);
        for (_, m) in jet.coefficients() {
            for (mono, _) in m.terms() {
                let d1: u32 = first.iter().map(|p| mono.exponent_of(*p) as u32).sum();
                let d2: u32 = second.iter().map(|p| mono.exponent_of(*p) as u32).sum();
                assert!(
                    (d1, d2) == (2, 0) || (d1, d2) == (0, 1),
                    "monomial {mono:?} has degrees ({d1}, {d2})"
                );
            }
        }
    }

    /// Numeric shadow on the quadratic center with rational perturbations
    /// of both orders: integrating dr/dθ = F₀ + εF₁ + ε²F₂ around one turn
    /// matches r + ε·M₁(r) + (ε²/2)·M₂(r) up to O(ε³) + O(ε·r^{j+1}).
    #[test]
    fn displacement_matches_numeric_integration_of_the_polar_equation() {
        let mut sys = catalog("LV", &[]).unwrap();
        sys.z1 = Some((
            mono(1, 0, ParamPoly::rational(1, 2)).add(&mono(2, 0, ParamPoly::from_int(1))),
            mono(1, 1, ParamPoly::rational(-1, 3)),
        ));
        sys.z2 = Some((
            mono(0, 2, ParamPoly::rational(2, 5)),
            mono(0, 1, ParamPoly::from_int(1)),
        ));

        let j = 5;
        let jet1 = averaging_jet(&sys, 1, j).unwrap();
        let jet2 = averaging_jet(&sys, 2, j).unwrap();
        let polar = to_polar(&sys, j).unwrap();
        let bindings = BTreeMap::new();

        let rhs = |theta: f64, r: f64, eps: f64| {
            let f0 = polar.f[0].eval_f64(theta, r, &bindings).unwrap();
            let f1 = polar.f[1].eval_f64(theta, r, &bindings).unwrap();
            let f2 = polar.f[2].eval_f64(theta, r, &bindings).unwrap();
            f0 + eps * f1 + eps * eps * f2
        };
        for eps in [1e-2_f64, 3e-3] {
            let r0 = 0.05_f64;
            let n = 8000;
            let h = 2.0 * std::f64::consts::PI / n as f64;
            let mut r = r0;
            let mut th = 0.0;
            for _ in 0..n {
                let k1 = rhs(th, r, eps);
                let k2 = rhs(th + h / 2.0, r + h / 2.0 * k1, eps);
                let k3 = rhs(th + h / 2.0, r + h / 2.0 * k2, eps);
                let k4 = rhs(th + h, r + h * k3, eps);
                r += h / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
                th += h;
            }
            let displaced = r - r0;
            let first = eps * jet1.eval_f64(r0, &bindings).unwrap();
            let both = first + 0.5 * eps * eps * jet2.eval_f64(r0, &bindings).unwrap();
            let res1 = (displaced - first).abs();
            let res2 = (displaced - both).abs();
            // The second-order term is visible above the integration noise
            // and accounts for most of the first-order residual.
            assert!(res1 > 1e-9, "eps = {eps}: first-order residual {res1} too small to test");
            assert!(
                res2 * 5.0 < res1,
                "eps = {eps}: M2 does not explain the residual ({res2} vs {res1})"
            );
            // What remains is cubic in ε (plus the jet tail in r).
            assert!(
                res2 < 100.0 * eps.powi(3) * r0,
                "eps = {eps}: residual {res2} above the expected order"
            );
        }
    }

    /// Flow-jet initial conditions: l_{0,1} = 1 and every other
    /// coefficient vanishes at θ = 0.
    #[test]
    fn flow_jets_satisfy_their_initial_conditions() {
        let sys = generic_perturbation(&catalog("S2", &[]).unwrap(), 1, 2).unwrap();
        let sys = generic_perturbation(&sys, 2, 2).unwrap();
        let polar = to_polar(&sys, 4).unwrap();
        let l0 = flow_jet_0(&polar, 4).unwrap();
        let l1 = flow_jet_1(&polar, &l0, 4).unwrap();
        let l2 = flow_jet_2(&polar, &l0, &l1, 4).unwrap();
        assert_eq!(l0.coeff(1), &QuasiTrigPoly::one());
        for k in 2..=4 {
            assert!(l0.coeff(k).eval_at_zero().is_zero());
        }
        for jet in [&l1, &l2] {
            for k in 1..=4 {
                assert!(jet.coeff(k).eval_at_zero().is_zero());
            }
        }
        assert!(matches!(
            flow_jet_1(&polar, &l1, 4),
            Err(EngineError::WrongEpsOrder { expected: 0, got: 1 })
        ));
        assert!(matches!(
            flow_jet_0(&polar, 5),
            Err(EngineError::TruncationTooLow { have: 4, need: 5 })
        ));
    }

    /// A deliberately non-integrable cubic "center" candidate is caught
    /// by the symbolic center check.
    #[test]
    fn non_center_is_rejected() {
        let text = "name = bad\ndegree = 3\nP = -y + x^3\nQ = x\nP1 = x^2\nQ1 = 0\n";
        let sys = parse_system_definition(text).unwrap();
        // l_{0,3}(2π) = ∫cos⁴θ dθ = 3π/4 per unit r³, so the identity-map
        // check fails at k = 3.
        match averaging_jet(&sys, 1, 4) {
            Err(EngineError::NotACenter { k }) => assert_eq!(k, 3),
            other => panic!("expected center failure, got {other:?}"),
        }
    }

    /// Numeric sanity for the hand-computed m_{2,1} oracle, pinning the
    /// quadratic-in-first and linear-in-second contributions separately.
    #[test]
    fn linear_center_second_order_jet_matches_numeric_displacement() {
        let mut sys = linear_center();
        sys.z1 = Some((mono(1, 0, ParamPoly::rational(1, 2)), PlanarPoly::zero()));
        sys.z2 = Some((PlanarPoly::zero(), mono(0, 1, ParamPoly::rational(1, 3))));
        let jet2 = averaging_jet(&sys, 2, 1).unwrap();
        // The displacement's ε²-coefficient is π/3 + (π²/2)(1/2)² by hand;
        // m_{2,1} is twice that under the jet normalization.
        let expected = parse_poly("2*pi/3 + pi^2/4").unwrap();
        assert_eq!(jet2.coeff(1), &expected);
        let val = jet2.eval_f64(1.0, &BTreeMap::new()).unwrap();
        let float = 2.0 * std::f64::consts::PI / 3.0 + std::f64::consts::PI.powi(2) / 4.0;
        assert!((val - float).abs() < 1e-12);
    }

    #[test]
    fn jet_display_is_readable() {
        let sys = generic_perturbation(&catalog("LV", &[]).unwrap(), 1, 2).unwrap();
        let jet = averaging_jet(&sys, 1, 1).unwrap();
        let text = jet.to_string();
        assert!(text.contains("r^1"), "display was {text}");
        assert!(text.contains("O(r^2)"), "display was {text}");
    }

    /// Doubling Z₁ while keeping Z₂ = 0 multiplies the second-order jet
    /// by exactly 4: the ε²-term is quadratic in the first-order data.
    #[test]
    fn quadratic_in_first_order_scales_by_four() {
        let base = catalog("LV", &[]).unwrap();
        let z1 = (
            mono(1, 0, ParamPoly::from_int(1)),
            mono(0, 2, ParamPoly::from_int(1)),
        );
        let zero = PlanarPoly::zero();
        let mut sys1 = base.clone();
        sys1.z1 = Some(z1.clone());
        sys1.z2 = Some((zero.clone(), zero.clone()));
        let mut sys2 = base.clone();
        let two = ParamPoly::from_int(2);
        sys2.z1 = Some((z1.0.mul_param(&two), z1.1.mul_param(&two)));
        sys2.z2 = Some((zero.clone(), zero));

        let j1 = averaging_jet(&sys1, 2, 4).unwrap();
        let j2 = averaging_jet(&sys2, 2, 4).unwrap();
        assert!(!j1.is_zero());
        let four = BigRational::from_integer(BigInt::from(4));
        for k in 1..=4 {
            assert_eq!(&j1.coeff(k).scale(&four), j2.coeff(k));
        }
    }
}
