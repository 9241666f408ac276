//! Perturbed center systems: the built-in catalog, generic perturbations,
//! and the text definition format.

use std::collections::BTreeMap;
use std::fmt::Write as _;

use num_rational::BigRational;

use crate::symbolic_ring::{parse_poly, ParamName, ParamPoly, Slot};

use super::expr::Axis;
use super::planar::check_rotation_linear_part;
use super::{Expr, ModelError, PlanarPoly};

/// Names accepted by [`catalog`].
pub const CATALOG_NAMES: [&str; 7] = ["LV", "H", "CR1", "S1", "S2", "S3", "S4"];

/// A planar polynomial system ẋ = P + εP₁ + ε²P₂, ẏ = Q + εQ₁ + ε²Q₂ whose
/// unperturbed part has a center at the origin with linear part (-y, x).
#[derive(Clone, Debug)]
pub struct PerturbedSystem {
    /// Display name; arbitrary for parsed definitions.
    pub name: String,
    /// Degree bound for the system and its perturbations.
    pub degree: u8,
    /// The unperturbed field (P, Q).
    pub z: (PlanarPoly, PlanarPoly),
    /// First-order perturbation (P₁, Q₁), if attached.
    pub z1: Option<(PlanarPoly, PlanarPoly)>,
    /// Second-order perturbation (P₂, Q₂), if attached.
    pub z2: Option<(PlanarPoly, PlanarPoly)>,
    /// First integral of the unperturbed field, when known in closed form.
    pub h: Option<Expr>,
    /// Integrating factor R with Z = R·(-∂H/∂y, ∂H/∂x), when known.
    pub r_factor: Option<Expr>,
    /// Family parameters still carried symbolically.
    pub family: Vec<ParamName>,
    /// Family parameters fixed to rational values at construction.
    pub family_values: BTreeMap<ParamName, BigRational>,
    /// Auxiliary named polynomials attached to the system, such as the
    /// discriminant governing the rank of its first-order conditions.
    pub named_polys: BTreeMap<String, ParamPoly>,
}

struct CatalogEntry {
    name: &'static str,
    degree: u8,
    p: &'static str,
    q: &'static str,
    h: &'static str,
    r: &'static str,
    params: &'static [&'static str],
    named: &'static [(&'static str, &'static str)],
}

/// The quadratic Hamiltonian family's discriminant: its vanishing is the
/// exact degeneracy locus of the family's first-order conditions.
const HAMILTONIAN_DISCRIMINANT: &str = "alpha^3*beta - alpha*beta^3 \
     + 6*alpha^2*beta*gamma - 2*beta^3*gamma + 9*alpha*beta*gamma^2 \
     + 2*alpha^3*delta - 6*alpha*beta^2*delta + 9*alpha^2*gamma*delta \
     - 9*beta^2*gamma*delta - 27*gamma^3*delta - 9*alpha*beta*delta^2 \
     + 27*gamma*delta^3";

const CATALOG: [CatalogEntry; 7] = [
    CatalogEntry {
        name: "LV",
        degree: 2,
        p: "-y*(1 + x)",
        q: "x*(1 + y)",
        h: "x + y - ln((x + 1)*(y + 1))",
        r: "(x + 1)*(y + 1)",
        params: &[],
        named: &[],
    },
    CatalogEntry {
        name: "H",
        degree: 2,
        p: "-y - alpha/2*x^2 - beta*x*y - 3*gamma/2*y^2",
        q: "x + 3*delta/2*x^2 + alpha*x*y + beta/2*y^2",
        h: "(x^2 + y^2 + delta*x^3 + alpha*x^2*y + beta*x*y^2 + gamma*y^3)/2",
        r: "1",
        params: &["alpha", "beta", "gamma", "delta"],
        named: &[("d", HAMILTONIAN_DISCRIMINANT)],
    },
    CatalogEntry {
        name: "CR1",
        degree: 3,
        p: "-y*(1 - 2*alpha*x - 2*x^2)",
        q: "x + alpha*(y^2 - x^2) + 2*x*y^2",
        h: "(x^2 + y^2)/(1 - 2*x*(alpha + x))",
        r: "(1 - 2*x*(alpha + x))^2/2",
        params: &["alpha"],
        named: &[],
    },
    CatalogEntry {
        name: "S1",
        degree: 2,
        p: "-y + x^2 - y^2",
        q: "x*(1 + 2*y)",
        h: "(x^2 + y^2)/(1 + 2*y)",
        r: "(1 + 2*y)^2/2",
        params: &[],
        named: &[],
    },
    CatalogEntry {
        name: "S2",
        degree: 2,
        p: "-y + x^2",
        q: "x*(1 + y)",
        h: "(x^2 + y^2)/(1 + y)^2",
        r: "(1 + y)^3/2",
        params: &[],
        named: &[],
    },
    CatalogEntry {
        name: "S3",
        degree: 2,
        p: "-y - 4/3*x^2",
        q: "x*(1 - 16/3*y)",
        h: "(16*x^4 - 24*x^2*y + 9*x^2 + 9*y^2)/(3 - 16*y)",
        r: "(16*y - 3)^2/(6*(32*x^2 - 24*y + 9))",
        params: &[],
        named: &[],
    },
    CatalogEntry {
        name: "S4",
        degree: 2,
        p: "-y + 16/3*x^2 - 4/3*y^2",
        q: "x*(1 + 8/3*y)",
        h: "(9*x^2 + (3 + 4*y)^2*y^2)/(3 + 8*y)^4",
        r: "(3 + 8*y)^5/54",
        params: &[],
        named: &[],
    },
];

/// Builds a catalog system, optionally fixing family parameters to rational
/// values.  Binding names must be declared by the chosen system.
pub fn catalog(
    name: &str,
    bindings: &[(&str, BigRational)],
) -> Result<PerturbedSystem, ModelError> {
    let entry = CATALOG
        .iter()
        .find(|e| e.name.eq_ignore_ascii_case(name))
        .ok_or_else(|| ModelError::UnknownSystem(name.to_string()))?;

    let mut family: Vec<ParamName> = entry
        .params
        .iter()
        .map(|s| ParamName::family(s).expect("catalog parameter names are valid"))
        .collect();

    let mut substitutions: BTreeMap<ParamName, ParamPoly> = BTreeMap::new();
    let mut family_values = BTreeMap::new();
    for (pname, value) in bindings {
        let p = ParamName::family(pname)
            .map_err(|_| ModelError::UnknownParameter(pname.to_string()))?;
        if !family.contains(&p) {
            return Err(ModelError::UnknownParameter(pname.to_string()));
        }
        substitutions.insert(p, ParamPoly::constant(value.clone()));
        family_values.insert(p, value.clone());
        family.retain(|q| *q != p);
    }

    let p_poly = Expr::parse(entry.p)?.to_planar_poly()?.substitute(&substitutions)?;
    let q_poly = Expr::parse(entry.q)?.to_planar_poly()?.substitute(&substitutions)?;
    check_rotation_linear_part(&p_poly, &q_poly)?;

    let mut named_polys = BTreeMap::new();
    for (key, src) in entry.named {
        let poly = parse_poly(src)?.substitute(&substitutions)?;
        named_polys.insert((*key).to_string(), poly);
    }

    Ok(PerturbedSystem {
        name: entry.name.to_string(),
        degree: entry.degree,
        z: (p_poly, q_poly),
        z1: None,
        z2: None,
        h: Some(Expr::parse(entry.h)?),
        r_factor: Some(Expr::parse(entry.r)?),
        family,
        family_values,
        named_polys,
    })
}

/// Attaches the fully generic degree-`n` perturbation at ε-order `i`: every
/// coefficient of P_i, Q_i is a fresh symbolic parameter, and both
/// polynomials vanish at the origin.
pub fn generic_perturbation(
    system: &PerturbedSystem,
    i: u8,
    n: u8,
) -> Result<PerturbedSystem, ModelError> {
    let mut p = PlanarPoly::zero();
    let mut q = PlanarPoly::zero();
    for kx in 0..=n {
        for ky in 0..=(n - kx) {
            if kx + ky == 0 {
                continue;
            }
            let a = ParamName::perturbation(Slot::A, i, kx, ky)?;
            let b = ParamName::perturbation(Slot::B, i, kx, ky)?;
            p.add_term((kx, ky), ParamPoly::var(a));
            q.add_term((kx, ky), ParamPoly::var(b));
        }
    }
    let mut out = system.clone();
    match i {
        1 => out.z1 = Some((p, q)),
        2 => out.z2 = Some((p, q)),
        _ => return Err(ModelError::BadPerturbationSlot(i)),
    }
    Ok(out)
}

impl PerturbedSystem {
    /// All perturbation parameters appearing at ε-order `i`, sorted.
    pub fn perturbation_params(&self, i: u8) -> Vec<ParamName> {
        let z = match i {
            1 => &self.z1,
            2 => &self.z2,
            _ => &None,
        };
        let mut out = Vec::new();
        if let Some((p, q)) = z {
            for param in p.params().into_iter().chain(q.params()) {
                if param.is_perturbation_of_order(i) && !out.contains(&param) {
                    out.push(param);
                }
            }
        }
        out.sort();
        out
    }

    /// Substitutes ring bindings through every polynomial slot of the system.
    pub fn substitute(
        &self,
        bindings: &BTreeMap<ParamName, ParamPoly>,
    ) -> Result<Self, ModelError> {
        let mut out = self.clone();
        out.z = (self.z.0.substitute(bindings)?, self.z.1.substitute(bindings)?);
        if let Some((p, q)) = &self.z1 {
            out.z1 = Some((p.substitute(bindings)?, q.substitute(bindings)?));
        }
        if let Some((p, q)) = &self.z2 {
            out.z2 = Some((p.substitute(bindings)?, q.substitute(bindings)?));
        }
        for poly in out.named_polys.values_mut() {
            *poly = poly.substitute(bindings)?;
        }
        Ok(out)
    }

    /// Merges fixed family values into a caller-supplied numeric binding map.
    pub fn numeric_values(
        &self,
        extra: &BTreeMap<ParamName, f64>,
    ) -> BTreeMap<ParamName, f64> {
        let mut values = extra.clone();
        for (p, v) in &self.family_values {
            values.entry(*p).or_insert_with(|| {
                num_traits::ToPrimitive::to_f64(v).expect("rational fits in f64")
            });
        }
        values
    }

    /// Evaluates the full right-hand side (ẋ, ẏ) at a point, including the
    /// perturbation terms scaled by ε.
    pub fn eval_rhs(
        &self,
        x: f64,
        y: f64,
        eps: f64,
        values: &BTreeMap<ParamName, f64>,
    ) -> Result<(f64, f64), ModelError> {
        let values = self.numeric_values(values);
        let eval_pair = |pair: &(PlanarPoly, PlanarPoly)| -> Result<(f64, f64), ModelError> {
            let px = pair.0.eval_f64(x, y, &values).map_err(ModelError::Evaluation)?;
            let qy = pair.1.eval_f64(x, y, &values).map_err(ModelError::Evaluation)?;
            Ok((px, qy))
        };
        let (mut dx, mut dy) = eval_pair(&self.z)?;
        if let Some(z1) = &self.z1 {
            let (p1, q1) = eval_pair(z1)?;
            dx += eps * p1;
            dy += eps * q1;
        }
        if let Some(z2) = &self.z2 {
            let (p2, q2) = eval_pair(z2)?;
            dx += eps * eps * p2;
            dy += eps * eps * q2;
        }
        Ok((dx, dy))
    }

    /// Checks Z = R·(-∂H/∂y, ∂H/∂x) numerically at sample points near the
    /// origin, with any symbolic family parameters drawn from `values`.
    pub fn check_integral_pair(
        &self,
        values: &BTreeMap<ParamName, f64>,
        tol: f64,
    ) -> Result<(), ModelError> {
        let (h, r) = match (&self.h, &self.r_factor) {
            (Some(h), Some(r)) => (h, r),
            _ => return Ok(()),
        };
        let values = self.numeric_values(values);
        let hx = h.diff(Axis::X);
        let hy = h.diff(Axis::Y);
        for &(x, y) in &[
            (0.08, 0.02),
            (-0.05, 0.07),
            (0.03, -0.09),
            (-0.06, -0.04),
            (0.11, 0.05),
        ] {
            let rv = r.eval_f64(x, y, &values)?;
            let want_p = -rv * hy.eval_f64(x, y, &values)?;
            let want_q = rv * hx.eval_f64(x, y, &values)?;
            let got_p = self.z.0.eval_f64(x, y, &values).map_err(ModelError::Evaluation)?;
            let got_q = self.z.1.eval_f64(x, y, &values).map_err(ModelError::Evaluation)?;
            if (want_p - got_p).abs() > tol || (want_q - got_q).abs() > tol {
                return Err(ModelError::Evaluation(format!(
                    "integrating factor mismatch at ({x}, {y}): \
                     field ({got_p}, {got_q}) vs R·∇H rotated ({want_p}, {want_q})"
                )));
            }
        }
        Ok(())
    }

    /// Renders the system in the text definition format.
    pub fn to_definition_string(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(out, "name = {}", self.name);
        let _ = writeln!(out, "degree = {}", self.degree);
        let _ = writeln!(out, "P = {}", self.z.0);
        let _ = writeln!(out, "Q = {}", self.z.1);
        if let Some((p, q)) = &self.z1 {
            let _ = writeln!(out, "P1 = {p}");
            let _ = writeln!(out, "Q1 = {q}");
        }
        if let Some((p, q)) = &self.z2 {
            let _ = writeln!(out, "P2 = {p}");
            let _ = writeln!(out, "Q2 = {q}");
        }
        if let Some(h) = &self.h {
            let _ = writeln!(out, "H = {h}");
        }
        if let Some(r) = &self.r_factor {
            let _ = writeln!(out, "R = {r}");
        }
        let names: Vec<String> = self.family.iter().map(|p| p.to_string()).collect();
        let _ = writeln!(out, "params = [{}]", names.join(", "));
        out
    }
}

/// Parses the text definition format: `key = value` lines with keys
/// `name`, `degree`, `P`, `Q`, `P1`, `Q1`, `P2`, `Q2`, `H`, `R`, `params`;
/// `#` starts a comment.  `degree`, `P`, and `Q` are required, perturbation
/// slots come in pairs, and every family parameter used must be declared in
/// `params = [...]`.
pub fn parse_system_definition(text: &str) -> Result<PerturbedSystem, ModelError> {
    let mut fields: BTreeMap<String, (usize, String)> = BTreeMap::new();
    for (idx, raw) in text.lines().enumerate() {
        let line_no = idx + 1;
        let line = match raw.find('#') {
            Some(cut) => &raw[..cut],
            None => raw,
        }
        .trim();
        if line.is_empty() {
            continue;
        }
        let (key, value) = line.split_once('=').ok_or(ModelError::Definition {
            line: line_no,
            msg: "expected `key = value`".into(),
        })?;
        let key = key.trim().to_string();
        let known = [
            "name", "degree", "P", "Q", "P1", "Q1", "P2", "Q2", "H", "R", "params",
        ];
        if !known.contains(&key.as_str()) {
            return Err(ModelError::Definition {
                line: line_no,
                msg: format!("unknown key `{key}`"),
            });
        }
        if fields.insert(key.clone(), (line_no, value.trim().to_string())).is_some() {
            return Err(ModelError::Definition {
                line: line_no,
                msg: format!("duplicate key `{key}`"),
            });
        }
    }

    let require = |key: &str| -> Result<(usize, String), ModelError> {
        fields.get(key).cloned().ok_or(ModelError::Definition {
            line: 0,
            msg: format!("missing required key `{key}`"),
        })
    };

    let (degree_line, degree_text) = require("degree")?;
    let degree: u8 = degree_text.parse().map_err(|_| ModelError::Definition {
        line: degree_line,
        msg: format!("`degree` must be a small integer, got `{degree_text}`"),
    })?;

    let declared: Vec<ParamName> = match fields.get("params") {
        None => Vec::new(),
        Some((line_no, text)) => {
            let inner = text
                .strip_prefix('[')
                .and_then(|t| t.strip_suffix(']'))
                .ok_or(ModelError::Definition {
                    line: *line_no,
                    msg: "`params` must look like [alpha, beta]".into(),
                })?;
            let mut names = Vec::new();
            for part in inner.split(',') {
                let part = part.trim();
                if part.is_empty() {
                    continue;
                }
                names.push(ParamName::family(part)?);
            }
            names
        }
    };

    let at_line = |line: usize, err: ModelError| -> ModelError {
        match err {
            ModelError::Definition { msg, .. } => ModelError::Definition { line, msg },
            other => ModelError::Definition {
                line,
                msg: other.to_string(),
            },
        }
    };

    // Family names must be declared; perturbation names may appear only in
    // the slot matching their ε-order.
    let check_params = |poly_params: &[ParamName],
                        line: usize,
                        allowed_order: Option<u8>|
     -> Result<(), ModelError> {
        for p in poly_params {
            match p {
                ParamName::Family(_) => {
                    if !declared.contains(p) {
                        return Err(at_line(
                            line,
                            ModelError::UndeclaredParameter(p.to_string()),
                        ));
                    }
                }
                ParamName::Perturbation { order, .. } => {
                    if allowed_order != Some(*order) {
                        return Err(ModelError::Definition {
                            line,
                            msg: format!("`{p}` is not allowed in this slot"),
                        });
                    }
                }
                ParamName::Pi => {}
                ParamName::Auxiliary(_) => {
                    return Err(ModelError::Definition {
                        line,
                        msg: format!("auxiliary name `{p}` is not allowed here"),
                    });
                }
            }
        }
        Ok(())
    };

    let parse_planar = |key: &str, order: Option<u8>| -> Result<Option<PlanarPoly>, ModelError> {
        let Some((line, text)) = fields.get(key).cloned() else {
            return Ok(None);
        };
        let poly = Expr::parse(&text)
            .and_then(|e| e.to_planar_poly())
            .map_err(|e| at_line(line, e))?;
        check_params(&poly.params(), line, order)?;
        if poly.degree() > degree {
            return Err(ModelError::Definition {
                line,
                msg: format!(
                    "`{key}` has degree {} above the declared bound {degree}",
                    poly.degree()
                ),
            });
        }
        Ok(Some(poly))
    };

    let (p_line, _) = require("P")?;
    let p = parse_planar("P", None)?.expect("P present");
    let q = parse_planar("Q", None)?.ok_or(ModelError::Definition {
        line: 0,
        msg: "missing required key `Q`".into(),
    })?;
    check_rotation_linear_part(&p, &q).map_err(|e| at_line(p_line, e))?;

    let pair = |pk: &str, qk: &str, order: u8| -> Result<Option<(PlanarPoly, PlanarPoly)>, ModelError> {
        let a = parse_planar(pk, Some(order))?;
        let b = parse_planar(qk, Some(order))?;
        match (a, b) {
            (None, None) => Ok(None),
            (Some(a), Some(b)) => {
                if !a.vanishes_at_origin() || !b.vanishes_at_origin() {
                    return Err(ModelError::ConstantTermInPerturbation);
                }
                Ok(Some((a, b)))
            }
            _ => Err(ModelError::Definition {
                line: 0,
                msg: format!("`{pk}` and `{qk}` must be given together"),
            }),
        }
    };
    let z1 = pair("P1", "Q1", 1)?;
    let z2 = pair("P2", "Q2", 2)?;

    let parse_expr = |key: &str| -> Result<Option<Expr>, ModelError> {
        let Some((line, text)) = fields.get(key).cloned() else {
            return Ok(None);
        };
        let e = Expr::parse(&text).map_err(|err| at_line(line, err))?;
        check_params(&e.params(), line, None)?;
        Ok(Some(e))
    };
    let h = parse_expr("H")?;
    let r_factor = parse_expr("R")?;

    let name = fields
        .get("name")
        .map(|(_, v)| v.clone())
        .unwrap_or_else(|| "custom".to_string());

    Ok(PerturbedSystem {
        name,
        degree,
        z: (p, q),
        z1,
        z2,
        h,
        r_factor,
        family: declared,
        family_values: BTreeMap::new(),
        named_polys: BTreeMap::new(),
    })
}
