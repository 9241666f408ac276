//! Floating-point verification of the symbolic jets: return maps of the
//! perturbed planar field, displacement profiles with error bars and
//! sign-change certificates, ε-order residual diagnostics, and Melnikov
//! line integrals along unperturbed level curves.
//!
//! Integration runs in Cartesian coordinates (the polar form is only for
//! symbolics) with an adaptive Dormand-Prince 5(4) pair; the section
//! crossing on {y = 0, x > 0} is localized on the dense output and the
//! accumulated winding angle guarantees a first return is never confused
//! with a spurious crossing. Displacement comparisons use the engine's
//! normalization d(r, ε) ≈ ε·M₁(r) + (ε²/2)·M₂(r): the second-order
//! function is twice the displacement's ε²-coefficient.
//!
//! The line integral of (Q₁ dx − P₁ dy)/R is accumulated while the level
//! curve Γ(r) is traversed clockwise (the unperturbed field integrated in
//! reverse time); with that orientation the value is a positive,
//! r-dependent multiple of the radial displacement rate, matching the
//! sign conventions of the jets. Proportionality to the jets is always
//! estimated, never assumed.

use std::collections::BTreeMap;
use std::fmt::Write as _;

use num_rational::BigRational;
use num_traits::ToPrimitive;
use thiserror::Error;

use crate::averaging_engine::Jet;
use crate::polar_model::{PerturbedSystem, PlanarPoly};
use crate::symbolic_ring::ParamName;

/// Lowest admissible integration tolerance, one hundred machine epsilons.
pub const MIN_TOLERANCE: f64 = f64::EPSILON * 100.0;

/// Errors from numeric integration and verification.
#[derive(Debug, Error)]
pub enum NumericError {
    /// A tolerance below the floating-point floor or not finite.
    #[error("tolerance {0:e} is below the floor {MIN_TOLERANCE:e} or not finite")]
    BadTolerance(f64),
    /// A negative or non-finite perturbation strength.
    #[error("epsilon must be finite and nonnegative, got {0}")]
    BadEpsilon(f64),
    /// A radius grid that is not strictly increasing and positive.
    #[error("bad radius grid: {0}")]
    BadGrid(String),
    /// A parameter value outside the f64 range.
    #[error("parameter value for `{0}` does not fit in an f64")]
    ValueOutOfRange(ParamName),
    /// Evaluation of a symbolic object failed, typically an unbound symbol.
    #[error("evaluation failed: {0}")]
    Evaluation(String),
    /// The orbit did not return to the section within the winding budget.
    #[error("no section return after winding {winding:.3} rad in {steps} steps")]
    NonReturn { winding: f64, steps: usize },
    /// The adaptive step collapsed, usually near a singular locus.
    #[error("step size underflow at t = {t:.6} (h = {h:e})")]
    StepUnderflow { t: f64, h: f64 },
    /// The state left the range of floating-point numbers.
    #[error("state became non-finite at t = {t:.6}")]
    NonFinite { t: f64 },
    /// The traced level curve failed to close up to tolerance.
    #[error("orbit did not close: gap {gap:e} at return")]
    NonClosure { gap: f64 },
    /// The integrand of the line integral requires H and R on the system.
    #[error("system carries no first integral and integrating factor")]
    MissingFirstIntegral,
    /// The integrating factor vanished on the traced curve.
    #[error("integrating factor ~ {value:e} on the orbit at t = {t:.6}")]
    SingularIntegrand { t: f64, value: f64 },
}

/// Exact parameter values, perturbation strength, and integration
/// tolerances for one numeric experiment.
///
/// Values are exact rationals rendered to floats at evaluation time.
/// Perturbation coefficients left unbound evaluate to zero; family
/// parameters must be bound here or fixed on the system. The section is
/// fixed to {y = 0, x > 0}.
#[derive(Clone, Debug)]
pub struct NumericBinding {
    values: BTreeMap<ParamName, BigRational>,
    epsilon: f64,
    abs_tol: f64,
    rel_tol: f64,
}

impl NumericBinding {
    /// A binding with the given ε and default 1e-12 tolerances.
    pub fn new(epsilon: f64) -> Result<NumericBinding, NumericError> {
        if !epsilon.is_finite() || epsilon < 0.0 {
            return Err(NumericError::BadEpsilon(epsilon));
        }
        Ok(NumericBinding {
            values: BTreeMap::new(),
            epsilon,
            abs_tol: 1e-12,
            rel_tol: 1e-12,
        })
    }

    /// Sets absolute and relative tolerances (both at least 100 ε_machine).
    pub fn with_tolerances(mut self, abs: f64, rel: f64) -> Result<NumericBinding, NumericError> {
        for t in [abs, rel] {
            if !t.is_finite() || t < MIN_TOLERANCE {
                return Err(NumericError::BadTolerance(t));
            }
        }
        self.abs_tol = abs;
        self.rel_tol = rel;
        Ok(self)
    }

    /// Binds a parameter to an exact rational value.
    pub fn bind_rational(mut self, param: ParamName, value: BigRational) -> NumericBinding {
        self.values.insert(param, value);
        self
    }

    /// Binds a parameter to the rational num/den.
    pub fn bind(self, param: ParamName, num: i64, den: i64) -> NumericBinding {
        self.bind_rational(
            param,
            BigRational::new(num.into(), den.into()),
        )
    }

    /// The perturbation strength ε.
    pub fn epsilon(&self) -> f64 {
        self.epsilon
    }

    /// The same binding with a different ε.
    pub fn with_epsilon(mut self, epsilon: f64) -> Result<NumericBinding, NumericError> {
        if !epsilon.is_finite() || epsilon < 0.0 {
            return Err(NumericError::BadEpsilon(epsilon));
        }
        self.epsilon = epsilon;
        Ok(self)
    }

    /// The (absolute, relative) tolerance pair.
    pub fn tolerances(&self) -> (f64, f64) {
        (self.abs_tol, self.rel_tol)
    }

    /// The same binding with both tolerances divided by `factor`, clamped
    /// at the floating-point floor.
    fn tightened(&self, factor: f64) -> NumericBinding {
        let mut out = self.clone();
        out.abs_tol = (self.abs_tol / factor).max(MIN_TOLERANCE);
        out.rel_tol = (self.rel_tol / factor).max(MIN_TOLERANCE);
        out
    }

    /// Float values for every symbol the system can mention: bound values,
    /// the system's fixed family values, and zero for unbound perturbation
    /// coefficients.
    pub fn value_map(
        &self,
        system: &PerturbedSystem,
    ) -> Result<BTreeMap<ParamName, f64>, NumericError> {
        let mut values = BTreeMap::new();
        for (p, v) in &self.values {
            values.insert(*p, v.to_f64().ok_or(NumericError::ValueOutOfRange(*p))?);
        }
        for (p, v) in &system.family_values {
            if !values.contains_key(p) {
                values.insert(*p, v.to_f64().ok_or(NumericError::ValueOutOfRange(*p))?);
            }
        }
        for order in [1u8, 2] {
            for p in system.perturbation_params(order) {
                values.entry(p).or_insert(0.0);
            }
        }
        Ok(values)
    }
}

/// One planar polynomial with all parameters fixed, ready for fast
/// evaluation.
struct CompiledPoly {
    terms: Vec<(f64, i32, i32)>,
}

impl CompiledPoly {
    fn compile(
        p: &PlanarPoly,
        values: &BTreeMap<ParamName, f64>,
    ) -> Result<CompiledPoly, NumericError> {
        let mut terms = Vec::new();
        for (&(kx, ky), c) in p.terms() {
            let v = c.eval_f64(values).map_err(NumericError::Evaluation)?;
            if v != 0.0 {
                terms.push((v, i32::from(kx), i32::from(ky)));
            }
        }
        Ok(CompiledPoly { terms })
    }

    fn zero() -> CompiledPoly {
        CompiledPoly { terms: Vec::new() }
    }

    fn eval(&self, x: f64, y: f64) -> f64 {
        let mut acc = 0.0;
        for &(c, kx, ky) in &self.terms {
            acc += c * x.powi(kx) * y.powi(ky);
        }
        acc
    }
}

/// The full perturbed right-hand side with parameters and ε fixed.
struct CompiledField {
    p0: CompiledPoly,
    q0: CompiledPoly,
    p1: CompiledPoly,
    q1: CompiledPoly,
    p2: CompiledPoly,
    q2: CompiledPoly,
    eps: f64,
}

impl CompiledField {
    fn compile(
        system: &PerturbedSystem,
        binding: &NumericBinding,
    ) -> Result<CompiledField, NumericError> {
        let values = binding.value_map(system)?;
        let pair = |z: &Option<(PlanarPoly, PlanarPoly)>| -> Result<_, NumericError> {
            match z {
                Some((p, q)) => Ok((
                    CompiledPoly::compile(p, &values)?,
                    CompiledPoly::compile(q, &values)?,
                )),
                None => Ok((CompiledPoly::zero(), CompiledPoly::zero())),
            }
        };
        let (p1, q1) = pair(&system.z1)?;
        let (p2, q2) = pair(&system.z2)?;
        Ok(CompiledField {
            p0: CompiledPoly::compile(&system.z.0, &values)?,
            q0: CompiledPoly::compile(&system.z.1, &values)?,
            p1,
            q1,
            p2,
            q2,
            eps: binding.epsilon,
        })
    }

    fn eval(&self, x: f64, y: f64) -> (f64, f64) {
        let e = self.eps;
        (
            self.p0.eval(x, y) + e * (self.p1.eval(x, y) + e * self.p2.eval(x, y)),
            self.q0.eval(x, y) + e * (self.q1.eval(x, y) + e * self.q2.eval(x, y)),
        )
    }
}

const MAX_STEPS: usize = 400_000;
const MAX_WINDING: f64 = 2.5 * std::f64::consts::TAU;
const MAX_TIME: f64 = 5_000.0;
const MAX_STEP: f64 = 0.1;
const MIN_STEP: f64 = 1e-13;

/// The section state reached by the integrator.
struct SectionHit {
    state: [f64; 3],
    winding: f64,
}

/// Dense-output polynomial of one Dormand-Prince step, per component.
struct DenseStep {
    rcont: [[f64; 5]; 3],
}

impl DenseStep {
    fn eval(&self, i: usize, theta: f64) -> f64 {
        let r = &self.rcont[i];
        let t1 = 1.0 - theta;
        r[0] + theta * (r[1] + t1 * (r[2] + theta * (r[3] + t1 * r[4])))
    }
}

/// Integrates dy/dt = rhs(y) from `start` until the first crossing of
/// {y = 0, x > 0} away from the start, with adaptive Dormand-Prince 5(4)
/// steps, dense-output event localization, and winding tracking.
fn integrate_to_section<F>(
    rhs: F,
    start: [f64; 3],
    abs_tol: f64,
    rel_tol: f64,
) -> Result<SectionHit, NumericError>
where
    F: Fn(f64, &[f64; 3]) -> Result<[f64; 3], NumericError>,
{
    // Dormand-Prince 5(4) tableau.
    const A: [[f64; 6]; 6] = [
        [1.0 / 5.0, 0.0, 0.0, 0.0, 0.0, 0.0],
        [3.0 / 40.0, 9.0 / 40.0, 0.0, 0.0, 0.0, 0.0],
        [44.0 / 45.0, -56.0 / 15.0, 32.0 / 9.0, 0.0, 0.0, 0.0],
        [
            19372.0 / 6561.0,
            -25360.0 / 2187.0,
            64448.0 / 6561.0,
            -212.0 / 729.0,
            0.0,
            0.0,
        ],
        [
            9017.0 / 3168.0,
            -355.0 / 33.0,
            46732.0 / 5247.0,
            49.0 / 176.0,
            -5103.0 / 18656.0,
            0.0,
        ],
        [
            35.0 / 384.0,
            0.0,
            500.0 / 1113.0,
            125.0 / 192.0,
            -2187.0 / 6784.0,
            11.0 / 84.0,
        ],
    ];
    // Difference between the 5th- and 4th-order weights.
    const E: [f64; 7] = [
        35.0 / 384.0 - 5179.0 / 57600.0,
        0.0,
        500.0 / 1113.0 - 7571.0 / 16695.0,
        125.0 / 192.0 - 393.0 / 640.0,
        -2187.0 / 6784.0 + 92097.0 / 339200.0,
        11.0 / 84.0 - 187.0 / 2100.0,
        -1.0 / 40.0,
    ];
    // Dense-output weights.
    const D: [f64; 7] = [
        -12715105075.0 / 11282082432.0,
        0.0,
        87487479700.0 / 32700410799.0,
        -10690763975.0 / 1880347072.0,
        701980252875.0 / 199316789632.0,
        -1453857185.0 / 822651844.0,
        69997945.0 / 29380423.0,
    ];

    let mut y = start;
    let mut t = 0.0_f64;
    let mut h = 1e-3_f64;
    let mut winding = 0.0_f64;
    let mut k1 = rhs(t, &y)?;
    let mut steps = 0usize;

    while steps < MAX_STEPS {
        if t.abs() > MAX_TIME || winding.abs() > MAX_WINDING {
            return Err(NumericError::NonReturn { winding, steps });
        }
        if h < MIN_STEP {
            return Err(NumericError::StepUnderflow { t, h });
        }
        let mut k = [[0.0_f64; 3]; 7];
        k[0] = k1;
        let mut failed = false;
        for stage in 0..6 {
            let mut ys = y;
            for (j, kj) in k.iter().enumerate().take(stage + 1) {
                for i in 0..3 {
                    ys[i] += h * A[stage][j] * kj[i];
                }
            }
            if !ys.iter().all(|v| v.is_finite()) {
                failed = true;
                break;
            }
            k[stage + 1] = rhs(t + h, &ys)?;
        }
        if failed || k.iter().any(|ki| !ki.iter().all(|v| v.is_finite())) {
            h *= 0.25;
            steps += 1;
            continue;
        }
        // 5th-order solution (the A[5] row doubles as its weights).
        let mut y1 = y;
        for (j, kj) in k.iter().enumerate().take(6) {
            for i in 0..3 {
                y1[i] += h * A[5][j] * kj[i];
            }
        }
        if !y1.iter().all(|v| v.is_finite()) {
            h *= 0.25;
            steps += 1;
            continue;
        }
        let k7 = rhs(t + h, &y1)?;
        let mut err_norm = 0.0_f64;
        for i in 0..3 {
            let mut e = 0.0;
            for (j, kj) in k.iter().enumerate().take(6) {
                e += E[j] * kj[i];
            }
            e += E[6] * k7[i];
            e *= h;
            let scale = abs_tol + rel_tol * y[i].abs().max(y1[i].abs());
            err_norm += (e / scale) * (e / scale);
        }
        err_norm = (err_norm / 3.0).sqrt();
        steps += 1;
        if err_norm > 1.0 {
            h *= (0.9 * err_norm.powf(-0.2)).clamp(0.2, 1.0);
            continue;
        }

        // Accepted: check for a section crossing inside this step.
        let crossed = y[1] * y1[1] < 0.0 || (y1[1] == 0.0 && y[1] != 0.0);
        if crossed {
            let mut rcont = [[0.0_f64; 5]; 3];
            for i in 0..3 {
                let dy = y1[i] - y[i];
                let mut acc = 0.0;
                for (j, kj) in k.iter().enumerate().take(6) {
                    acc += D[j] * kj[i];
                }
                acc += D[6] * k7[i];
                rcont[i] = [y[i], dy, h * k[0][i] - dy, dy - h * k7[i] - (h * k[0][i] - dy), h * acc];
            }
            let dense = DenseStep { rcont };
            let (mut lo, mut hi) = (0.0_f64, 1.0_f64);
            let y_lo = dense.eval(1, lo);
            for _ in 0..80 {
                let mid = 0.5 * (lo + hi);
                if (dense.eval(1, mid) >= 0.0) == (y_lo >= 0.0) {
                    lo = mid;
                } else {
                    hi = mid;
                }
            }
            let theta = 0.5 * (lo + hi);
            let hit = [dense.eval(0, theta), dense.eval(1, theta), dense.eval(2, theta)];
            if hit[0] > 0.0 {
                let delta = angle_increment(y[0], y[1], hit[0], hit[1]);
                return Ok(SectionHit { state: hit, winding: winding + delta });
            }
        }

        winding += angle_increment(y[0], y[1], y1[0], y1[1]);
        t += h;
        y = y1;
        k1 = k7;
        h = (h * (0.9 * err_norm.max(1e-10).powf(-0.2)).clamp(0.2, 5.0)).min(MAX_STEP);
    }
    Err(NumericError::NonReturn { winding, steps })
}

/// Signed angle from (x0, y0) to (x1, y1) as seen from the origin.
fn angle_increment(x0: f64, y0: f64, x1: f64, y1: f64) -> f64 {
    (x0 * y1 - y0 * x1).atan2(x0 * x1 + y0 * y1)
}

/// First-return abscissa on {y = 0, x > 0} of the perturbed orbit
/// starting at (r0, 0).
pub fn return_map(
    system: &PerturbedSystem,
    binding: &NumericBinding,
    r0: f64,
) -> Result<f64, NumericError> {
    let field = CompiledField::compile(system, binding)?;
    let hit = integrate_to_section(
        |_t, s| Ok([field.eval(s[0], s[1]).0, field.eval(s[0], s[1]).1, 0.0]),
        [r0, 0.0, 0.0],
        binding.abs_tol,
        binding.rel_tol,
    )?;
    Ok(hit.state[0])
}

/// Gap after integrating forward to the first return and then backward to
/// the section again; measures the integrator's self-consistency.
pub fn reversibility_gap(
    system: &PerturbedSystem,
    binding: &NumericBinding,
    r0: f64,
) -> Result<f64, NumericError> {
    let field = CompiledField::compile(system, binding)?;
    let forward = integrate_to_section(
        |_t, s| {
            let (dx, dy) = field.eval(s[0], s[1]);
            Ok([dx, dy, 0.0])
        },
        [r0, 0.0, 0.0],
        binding.abs_tol,
        binding.rel_tol,
    )?;
    let back = integrate_to_section(
        |_t, s| {
            let (dx, dy) = field.eval(s[0], s[1]);
            Ok([-dx, -dy, 0.0])
        },
        forward.state,
        binding.abs_tol,
        binding.rel_tol,
    )?;
    Ok(((back.state[0] - r0).powi(2) + back.state[1].powi(2)).sqrt())
}

/// A displacement map sampled on a radius grid, with error bars and
/// certified sign-change brackets.
#[derive(Clone, Debug)]
pub struct DisplacementProfile {
    /// Sampled radii, strictly increasing; truncated at the first
    /// non-returning radius.
    pub grid: Vec<f64>,
    /// Displacement d(r, ε) = (first return) − r at each radius.
    pub values: Vec<f64>,
    /// Error estimates from a tightened-tolerance reference run.
    pub errors: Vec<f64>,
    /// Radius at which orbits stopped returning, if any.
    pub truncated_at: Option<f64>,
    /// Grid brackets (r_i, r_{i+1}) where d changes sign and both
    /// endpoint values exceed twice their error bars.
    pub sign_changes: Vec<(f64, f64)>,
}

impl DisplacementProfile {
    /// Renders the profile as CSV with columns r, d, err, flag.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("r,d,err,flag\n");
        for i in 0..self.grid.len() {
            let flag = if self.values[i].abs() > 2.0 * self.errors[i] {
                "ok"
            } else {
                "uncertain"
            };
            let _ = writeln!(
                out,
                "{:.17e},{:.17e},{:.17e},{}",
                self.grid[i], self.values[i], self.errors[i], flag
            );
        }
        out
    }
}

/// Samples the displacement map over a strictly increasing positive grid.
///
/// Each value comes from a 32-fold tightened reference run; the error bar
/// is its distance to the run at the requested tolerance. The profile is
/// truncated at the first radius whose orbit does not return.
pub fn displacement_profile(
    system: &PerturbedSystem,
    binding: &NumericBinding,
    grid: &[f64],
) -> Result<DisplacementProfile, NumericError> {
    if grid.is_empty() {
        return Err(NumericError::BadGrid("empty grid".into()));
    }
    if grid[0] <= 0.0 || grid.windows(2).any(|w| w[0] >= w[1]) {
        return Err(NumericError::BadGrid(
            "grid must be strictly increasing and positive".into(),
        ));
    }
    let tight = binding.tightened(32.0);
    let mut kept = Vec::new();
    let mut values = Vec::new();
    let mut errors = Vec::new();
    let mut truncated_at = None;
    for &r in grid {
        let coarse = match return_map(system, binding, r) {
            Ok(r1) => r1,
            Err(NumericError::NonReturn { .. }) => {
                truncated_at = Some(r);
                break;
            }
            Err(e) => return Err(e),
        };
        let fine = return_map(system, &tight, r)?;
        kept.push(r);
        values.push(fine - r);
        errors.push((coarse - fine).abs().max(5e-15 * (1.0 + r)));
    }
    let mut sign_changes = Vec::new();
    for i in 0..kept.len().saturating_sub(1) {
        let certified = values[i].abs() > 2.0 * errors[i]
            && values[i + 1].abs() > 2.0 * errors[i + 1];
        if certified && values[i] * values[i + 1] < 0.0 {
            sign_changes.push((kept[i], kept[i + 1]));
        }
    }
    Ok(DisplacementProfile { grid: kept, values, errors, truncated_at, sign_changes })
}

/// Sign changes of a displacement profile with simple-zero certificates.
#[derive(Clone, Debug, PartialEq)]
pub struct CycleCount {
    /// Certified sign changes.
    pub count: usize,
    /// Secant-interpolated zero radii, one per certified change.
    pub radii: Vec<f64>,
    /// Brackets where a sign change is suggested but an endpoint is
    /// within its error bar; flagged, never counted.
    pub uncertain: Vec<(f64, f64)>,
}

/// Counts certified sign changes of the profile and localizes their radii.
///
/// A change counts only when both endpoint values exceed twice their error
/// bars, so the secant slope across the bracket is bounded away from zero
/// relative to the noise; ambiguous brackets are reported separately.
pub fn count_cycles(profile: &DisplacementProfile) -> CycleCount {
    let mut count = 0;
    let mut radii = Vec::new();
    let mut uncertain = Vec::new();
    let n = profile.grid.len();
    for i in 0..n.saturating_sub(1) {
        let (d0, d1) = (profile.values[i], profile.values[i + 1]);
        let (e0, e1) = (profile.errors[i], profile.errors[i + 1]);
        let (r0, r1) = (profile.grid[i], profile.grid[i + 1]);
        let flips = d0 * d1 < 0.0;
        let certified = d0.abs() > 2.0 * e0 && d1.abs() > 2.0 * e1;
        if flips && certified {
            count += 1;
            radii.push(r0 - d0 * (r1 - r0) / (d1 - d0));
        } else if (flips || d0.abs() <= 2.0 * e0 || d1.abs() <= 2.0 * e1)
            && (d0 - 2.0 * e0 <= 0.0 && d1 + 2.0 * e1 >= 0.0
                || d1 - 2.0 * e1 <= 0.0 && d0 + 2.0 * e0 >= 0.0)
            && !(d0.abs() > 2.0 * e0 && d1.abs() > 2.0 * e1 && d0 * d1 > 0.0)
        {
            uncertain.push((r0, r1));
        }
    }
    CycleCount { count, radii, uncertain }
}

/// Least-squares slope of ln(residual) against ln(ε); None when fewer
/// than two positive pairs remain.
pub fn fit_log_slope(eps: &[f64], residuals: &[f64]) -> Option<f64> {
    let pts: Vec<(f64, f64)> = eps
        .iter()
        .zip(residuals)
        .filter(|(e, r)| **e > 0.0 && **r > 0.0)
        .map(|(e, r)| (e.ln(), r.ln()))
        .collect();
    if pts.len() < 2 {
        return None;
    }
    let n = pts.len() as f64;
    let sx: f64 = pts.iter().map(|p| p.0).sum();
    let sy: f64 = pts.iter().map(|p| p.1).sum();
    let sxx: f64 = pts.iter().map(|p| p.0 * p.0).sum();
    let sxy: f64 = pts.iter().map(|p| p.0 * p.1).sum();
    let denom = n * sxx - sx * sx;
    if denom.abs() < 1e-300 {
        return None;
    }
    Some((n * sxy - sx * sy) / denom)
}

/// Slope diagnostics of the residual between the numeric displacement and
/// a jet prediction, at one radius.
#[derive(Clone, Debug)]
pub struct RadiusFit {
    /// The sampled radius.
    pub r: f64,
    /// Fitted log-log slope over the usable ε values, if at least two
    /// residuals rose above the noise floor.
    pub slope: Option<f64>,
    /// Residual per ε value, in the order given to the check.
    pub residuals: Vec<f64>,
    /// Noise floor per ε value (ten times the displacement error bar).
    pub floors: Vec<f64>,
}

/// The ε-order report across a radius grid.
#[derive(Clone, Debug)]
pub struct OrderFit {
    /// One fit per radius.
    pub per_radius: Vec<RadiusFit>,
    /// Median of the conclusive slopes, if any radius was conclusive.
    pub median_slope: Option<f64>,
}

/// Fits the ε-order of the residual d(r, ε) − Σ_i ε^i c_i M_i(r) over a
/// geometric ε sequence, where c_1 = 1 and c_2 = 1/2 under the engine's
/// normalization. Residuals below the noise floor are dropped; radii with
/// fewer than two usable residuals are reported inconclusive.
pub fn epsilon_order_check(
    system: &PerturbedSystem,
    binding: &NumericBinding,
    eps: &[f64],
    grid: &[f64],
    jets: &[&Jet],
) -> Result<OrderFit, NumericError> {
    if eps.is_empty() || eps.iter().any(|e| *e <= 0.0) {
        return Err(NumericError::BadEpsilon(eps.first().copied().unwrap_or(0.0)));
    }
    if grid.is_empty() || grid[0] <= 0.0 || grid.windows(2).any(|w| w[0] >= w[1]) {
        return Err(NumericError::BadGrid(
            "grid must be strictly increasing and positive".into(),
        ));
    }
    let values = binding.value_map(system)?;
    let predict = |r: f64, e: f64| -> Result<f64, NumericError> {
        let mut d = 0.0;
        for jet in jets {
            let factor = if jet.order_eps() == 2 { 0.5 } else { 1.0 };
            let m = jet.eval_f64(r, &values).map_err(NumericError::Evaluation)?;
            d += factor * e.powi(i32::from(jet.order_eps())) * m;
        }
        Ok(d)
    };
    let mut per_radius = Vec::new();
    for &r in grid {
        let mut residuals = Vec::new();
        let mut floors = Vec::new();
        for &e in eps {
            let b = binding.clone().with_epsilon(e)?;
            let tight = b.tightened(32.0);
            let coarse = return_map(system, &b, r)?;
            let fine = return_map(system, &tight, r)?;
            let d = fine - r;
            let err = (coarse - fine).abs().max(5e-15 * (1.0 + r));
            residuals.push((d - predict(r, e)?).abs());
            floors.push(10.0 * err);
        }
        let usable: Vec<(f64, f64)> = eps
            .iter()
            .zip(residuals.iter().zip(&floors))
            .filter(|(_, (res, floor))| *res > *floor)
            .map(|(e, (res, _))| (*e, *res))
            .collect();
        let slope = fit_log_slope(
            &usable.iter().map(|p| p.0).collect::<Vec<_>>(),
            &usable.iter().map(|p| p.1).collect::<Vec<_>>(),
        );
        per_radius.push(RadiusFit { r, slope, residuals, floors });
    }
    let mut slopes: Vec<f64> = per_radius.iter().filter_map(|f| f.slope).collect();
    slopes.sort_by(|a, b| a.partial_cmp(b).expect("finite slopes"));
    let median_slope = if slopes.is_empty() {
        None
    } else {
        Some(slopes[slopes.len() / 2])
    };
    Ok(OrderFit { per_radius, median_slope })
}

/// Line integral of (Q₁ dx − P₁ dy)/R along the unperturbed level curve
/// through (r, 0), traversed clockwise.
///
/// The curve is traced by integrating the unperturbed field one full
/// period in reverse time while the integrand accumulates as an extra
/// state component; with this orientation the value is a positive
/// r-dependent multiple of the radial displacement rate. Errors if the
/// system lacks H and R, if R vanishes on the curve, or if the orbit
/// fails to close.
pub fn melnikov_line_integral(
    system: &PerturbedSystem,
    binding: &NumericBinding,
    r: f64,
) -> Result<f64, NumericError> {
    let (_h, r_factor) = match (&system.h, &system.r_factor) {
        (Some(h), Some(rf)) => (h, rf),
        _ => return Err(NumericError::MissingFirstIntegral),
    };
    let values = binding.value_map(system)?;
    let p0 = CompiledPoly::compile(&system.z.0, &values)?;
    let q0 = CompiledPoly::compile(&system.z.1, &values)?;
    let (p1, q1) = match &system.z1 {
        Some((p, q)) => (
            CompiledPoly::compile(p, &values)?,
            CompiledPoly::compile(q, &values)?,
        ),
        None => (CompiledPoly::zero(), CompiledPoly::zero()),
    };
    let rhs = |t: f64, s: &[f64; 3]| -> Result<[f64; 3], NumericError> {
        let (x, y) = (s[0], s[1]);
        let dx = p0.eval(x, y);
        let dy = q0.eval(x, y);
        let rv = r_factor
            .eval_f64(x, y, &values)
            .map_err(|e| NumericError::Evaluation(e.to_string()))?;
        if rv.abs() < 1e-12 * (1.0 + x.abs() + y.abs()) {
            return Err(NumericError::SingularIntegrand { t, value: rv });
        }
        let di = (q1.eval(x, y) * dx - p1.eval(x, y) * dy) / rv;
        Ok([-dx, -dy, -di])
    };
    let hit = integrate_to_section(rhs, [r, 0.0, 0.0], binding.abs_tol, binding.rel_tol)?;
    let gap = ((hit.state[0] - r).powi(2) + hit.state[1].powi(2)).sqrt();
    if gap > (1e-7_f64).max(1e4 * binding.abs_tol) * (1.0 + r) {
        return Err(NumericError::NonClosure { gap });
    }
    Ok(hit.state[2])
}
