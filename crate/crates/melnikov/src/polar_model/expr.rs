//! Closed-form expressions in x, y and parameters, used for first
//! integrals and integrating factors.
//!
//! Unlike [`PlanarPoly`](super::PlanarPoly) these may contain quotients and
//! logarithms.  They support symbolic partial derivatives and pointwise
//! evaluation, which is all the numeric checks need.

use std::collections::BTreeMap;
use std::fmt;

use num_rational::BigRational;
use num_traits::{One, ToPrimitive, Zero};

use crate::symbolic_ring::{classify_param, ParamName, ParamPoly};

use super::{ModelError, PlanarPoly};

/// One of the two plane coordinates.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Axis {
    X,
    Y,
}

/// An expression tree over x, y, parameters, and rational constants.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Expr {
    Const(BigRational),
    Var(Axis),
    Param(ParamName),
    Add(Box<Expr>, Box<Expr>),
    Sub(Box<Expr>, Box<Expr>),
    Mul(Box<Expr>, Box<Expr>),
    Div(Box<Expr>, Box<Expr>),
    Pow(Box<Expr>, u32),
    Neg(Box<Expr>),
    Ln(Box<Expr>),
}

impl Expr {
    /// Parses an expression; `+ - * / ^` with the usual precedence,
    /// parentheses, `x`, `y`, `ln(...)`, parameter names, and rational
    /// constants.
    pub fn parse(input: &str) -> Result<Self, ModelError> {
        let mut p = ExprParser { src: input.as_bytes(), pos: 0 };
        p.skip_ws();
        let e = p.expr()?;
        p.skip_ws();
        if p.pos != p.src.len() {
            return Err(p.error("unexpected trailing input"));
        }
        Ok(e)
    }

    /// The constant zero.
    pub fn zero() -> Self {
        Expr::Const(BigRational::zero())
    }

    /// True for a literal zero constant.
    pub fn is_zero_literal(&self) -> bool {
        matches!(self, Expr::Const(c) if c.is_zero())
    }

    /// Partial derivative with respect to one coordinate.
    pub fn diff(&self, axis: Axis) -> Expr {
        match self {
            Expr::Const(_) | Expr::Param(_) => Expr::zero(),
            Expr::Var(a) => {
                if *a == axis {
                    Expr::Const(BigRational::one())
                } else {
                    Expr::zero()
                }
            }
            Expr::Add(a, b) => add(a.diff(axis), b.diff(axis)),
            Expr::Sub(a, b) => sub(a.diff(axis), b.diff(axis)),
            Expr::Mul(a, b) => add(
                mul(a.diff(axis), (**b).clone()),
                mul((**a).clone(), b.diff(axis)),
            ),
            Expr::Div(a, b) => {
                let num = sub(
                    mul(a.diff(axis), (**b).clone()),
                    mul((**a).clone(), b.diff(axis)),
                );
                Expr::Div(Box::new(num), Box::new(Expr::Pow(b.clone(), 2)))
            }
            Expr::Pow(a, n) => {
                if *n == 0 {
                    return Expr::zero();
                }
                let outer = mul(
                    Expr::Const(BigRational::from_integer((*n).into())),
                    Expr::Pow(a.clone(), n - 1),
                );
                mul(outer, a.diff(axis))
            }
            Expr::Neg(a) => Expr::Neg(Box::new(a.diff(axis))),
            Expr::Ln(a) => Expr::Div(Box::new(a.diff(axis)), a.clone()),
        }
    }

    /// Evaluates at a point with numeric parameter values; π is implicit.
    pub fn eval_f64(
        &self,
        x: f64,
        y: f64,
        values: &BTreeMap<ParamName, f64>,
    ) -> Result<f64, ModelError> {
        let v = self.eval_inner(x, y, values)?;
        if v.is_finite() {
            Ok(v)
        } else {
            Err(ModelError::Evaluation(format!(
                "non-finite value at ({x}, {y})"
            )))
        }
    }

    fn eval_inner(
        &self,
        x: f64,
        y: f64,
        values: &BTreeMap<ParamName, f64>,
    ) -> Result<f64, ModelError> {
        Ok(match self {
            Expr::Const(c) => rational_to_f64(c),
            Expr::Var(Axis::X) => x,
            Expr::Var(Axis::Y) => y,
            Expr::Param(ParamName::Pi) => std::f64::consts::PI,
            Expr::Param(p) => *values.get(p).ok_or_else(|| {
                ModelError::Evaluation(format!("no value bound for `{p}`"))
            })?,
            Expr::Add(a, b) => a.eval_inner(x, y, values)? + b.eval_inner(x, y, values)?,
            Expr::Sub(a, b) => a.eval_inner(x, y, values)? - b.eval_inner(x, y, values)?,
            Expr::Mul(a, b) => a.eval_inner(x, y, values)? * b.eval_inner(x, y, values)?,
            Expr::Div(a, b) => a.eval_inner(x, y, values)? / b.eval_inner(x, y, values)?,
            Expr::Pow(a, n) => a.eval_inner(x, y, values)?.powi(*n as i32),
            Expr::Neg(a) => -a.eval_inner(x, y, values)?,
            Expr::Ln(a) => a.eval_inner(x, y, values)?.ln(),
        })
    }

    /// Expands into a planar polynomial; fails on logarithms or division by
    /// anything but a nonzero constant.
    pub fn to_planar_poly(&self) -> Result<PlanarPoly, ModelError> {
        Ok(match self {
            Expr::Const(c) => PlanarPoly::constant(c.clone()),
            Expr::Var(Axis::X) => PlanarPoly::monomial(1, 0),
            Expr::Var(Axis::Y) => PlanarPoly::monomial(0, 1),
            Expr::Param(p) => {
                let mut out = PlanarPoly::zero();
                out.add_term((0, 0), ParamPoly::var(*p));
                out
            }
            Expr::Add(a, b) => a.to_planar_poly()?.add(&b.to_planar_poly()?),
            Expr::Sub(a, b) => a.to_planar_poly()?.add(&b.to_planar_poly()?.neg()),
            Expr::Mul(a, b) => a.to_planar_poly()?.mul(&b.to_planar_poly()?),
            Expr::Div(a, b) => {
                let den = match &**b {
                    Expr::Const(c) if !c.is_zero() => c.clone(),
                    _ => {
                        return Err(ModelError::NotPolynomial(format!(
                            "division by `{b}`"
                        )))
                    }
                };
                a.to_planar_poly()?
                    .mul_param(&ParamPoly::constant(den.recip()))
            }
            Expr::Pow(a, n) => a.to_planar_poly()?.pow(*n),
            Expr::Neg(a) => a.to_planar_poly()?.neg(),
            Expr::Ln(_) => {
                return Err(ModelError::NotPolynomial("contains ln".into()))
            }
        })
    }

    /// All parameters referenced anywhere in the expression, except π.
    pub fn params(&self) -> Vec<ParamName> {
        let mut out = Vec::new();
        self.collect_params(&mut out);
        out.sort();
        out.dedup();
        out
    }

    fn collect_params(&self, out: &mut Vec<ParamName>) {
        match self {
            Expr::Const(_) | Expr::Var(_) | Expr::Param(ParamName::Pi) => {}
            Expr::Param(p) => out.push(*p),
            Expr::Add(a, b) | Expr::Sub(a, b) | Expr::Mul(a, b) | Expr::Div(a, b) => {
                a.collect_params(out);
                b.collect_params(out);
            }
            Expr::Pow(a, _) | Expr::Neg(a) | Expr::Ln(a) => a.collect_params(out),
        }
    }
}

fn add(a: Expr, b: Expr) -> Expr {
    if a.is_zero_literal() {
        return b;
    }
    if b.is_zero_literal() {
        return a;
    }
    Expr::Add(Box::new(a), Box::new(b))
}

fn sub(a: Expr, b: Expr) -> Expr {
    if b.is_zero_literal() {
        return a;
    }
    if a.is_zero_literal() {
        return Expr::Neg(Box::new(b));
    }
    Expr::Sub(Box::new(a), Box::new(b))
}

fn mul(a: Expr, b: Expr) -> Expr {
    if a.is_zero_literal() || b.is_zero_literal() {
        return Expr::zero();
    }
    if matches!(&a, Expr::Const(c) if c.is_one()) {
        return b;
    }
    if matches!(&b, Expr::Const(c) if c.is_one()) {
        return a;
    }
    Expr::Mul(Box::new(a), Box::new(b))
}

fn rational_to_f64(c: &BigRational) -> f64 {
    c.to_f64().unwrap_or_else(|| {
        let n = c.numer().to_f64().unwrap_or(f64::NAN);
        let d = c.denom().to_f64().unwrap_or(f64::NAN);
        n / d
    })
}

struct ExprParser<'a> {
    src: &'a [u8],
    pos: usize,
}

impl<'a> ExprParser<'a> {
    fn error(&self, msg: &str) -> ModelError {
        ModelError::Definition {
            line: 0,
            msg: format!("column {}: {}", self.pos + 1, msg),
        }
    }

    fn skip_ws(&mut self) {
        while self.pos < self.src.len() && self.src[self.pos].is_ascii_whitespace() {
            self.pos += 1;
        }
    }

    fn peek(&self) -> Option<u8> {
        self.src.get(self.pos).copied()
    }

    fn eat(&mut self, b: u8) -> bool {
        if self.peek() == Some(b) {
            self.pos += 1;
            true
        } else {
            false
        }
    }

    fn expr(&mut self) -> Result<Expr, ModelError> {
        let mut acc = self.term()?;
        loop {
            self.skip_ws();
            if self.eat(b'+') {
                self.skip_ws();
                acc = Expr::Add(Box::new(acc), Box::new(self.term()?));
            } else if self.eat(b'-') {
                self.skip_ws();
                acc = Expr::Sub(Box::new(acc), Box::new(self.term()?));
            } else {
                return Ok(acc);
            }
        }
    }

    fn term(&mut self) -> Result<Expr, ModelError> {
        let mut acc = self.factor()?;
        loop {
            self.skip_ws();
            if self.eat(b'*') {
                self.skip_ws();
                acc = Expr::Mul(Box::new(acc), Box::new(self.factor()?));
            } else if self.eat(b'/') {
                self.skip_ws();
                acc = Expr::Div(Box::new(acc), Box::new(self.factor()?));
            } else {
                return Ok(acc);
            }
        }
    }

    fn factor(&mut self) -> Result<Expr, ModelError> {
        self.skip_ws();
        if self.eat(b'-') {
            return Ok(Expr::Neg(Box::new(self.factor()?)));
        }
        let base = self.primary()?;
        self.skip_ws();
        if self.eat(b'^') {
            self.skip_ws();
            let n = self.uint()?;
            return Ok(Expr::Pow(Box::new(base), n));
        }
        Ok(base)
    }

    fn primary(&mut self) -> Result<Expr, ModelError> {
        self.skip_ws();
        match self.peek() {
            Some(b'(') => {
                self.pos += 1;
                let e = self.expr()?;
                self.skip_ws();
                if !self.eat(b')') {
                    return Err(self.error("expected `)`"));
                }
                Ok(e)
            }
            Some(c) if c.is_ascii_digit() => {
                let n = self.uint()?;
                Ok(Expr::Const(BigRational::from_integer(n.into())))
            }
            Some(c) if c.is_ascii_alphabetic() => {
                let word = self.identifier();
                match word.as_str() {
                    "x" => Ok(Expr::Var(Axis::X)),
                    "y" => Ok(Expr::Var(Axis::Y)),
                    "ln" => {
                        self.skip_ws();
                        if !self.eat(b'(') {
                            return Err(self.error("expected `(` after ln"));
                        }
                        let inner = self.expr()?;
                        self.skip_ws();
                        if !self.eat(b')') {
                            return Err(self.error("expected `)`"));
                        }
                        Ok(Expr::Ln(Box::new(inner)))
                    }
                    _ => {
                        let start = self.pos - word.len();
                        let p = classify_param(&word, start)?;
                        Ok(Expr::Param(p))
                    }
                }
            }
            _ => Err(self.error("expected a value")),
        }
    }

    fn uint(&mut self) -> Result<u32, ModelError> {
        let start = self.pos;
        while matches!(self.peek(), Some(c) if c.is_ascii_digit()) {
            self.pos += 1;
        }
        if start == self.pos {
            return Err(self.error("expected an integer"));
        }
        std::str::from_utf8(&self.src[start..self.pos])
            .unwrap()
            .parse()
            .map_err(|_| self.error("integer out of range"))
    }

    fn identifier(&mut self) -> String {
        let start = self.pos;
        while matches!(self.peek(), Some(c) if c.is_ascii_alphanumeric() || c == b'_') {
            self.pos += 1;
        }
        String::from_utf8_lossy(&self.src[start..self.pos]).into_owned()
    }
}

impl fmt::Display for Expr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        // Precedence levels: 0 additive, 1 multiplicative, 2 unary/power.
        fn go(e: &Expr, f: &mut fmt::Formatter<'_>, parent: u8) -> fmt::Result {
            let level = match e {
                Expr::Add(..) | Expr::Sub(..) => 0,
                Expr::Mul(..) | Expr::Div(..) => 1,
                _ => 2,
            };
            let need = level < parent;
            if need {
                write!(f, "(")?;
            }
            match e {
                Expr::Const(c) => write!(f, "{c}")?,
                Expr::Var(Axis::X) => write!(f, "x")?,
                Expr::Var(Axis::Y) => write!(f, "y")?,
                Expr::Param(p) => write!(f, "{p}")?,
                Expr::Add(a, b) => {
                    go(a, f, 0)?;
                    write!(f, " + ")?;
                    go(b, f, 1)?;
                }
                Expr::Sub(a, b) => {
                    go(a, f, 0)?;
                    write!(f, " - ")?;
                    go(b, f, 1)?;
                }
                Expr::Mul(a, b) => {
                    go(a, f, 1)?;
                    write!(f, "*")?;
                    go(b, f, 2)?;
                }
                Expr::Div(a, b) => {
                    go(a, f, 1)?;
                    write!(f, "/")?;
                    go(b, f, 3)?;
                }
                Expr::Pow(a, n) => {
                    go(a, f, 3)?;
                    write!(f, "^{n}")?;
                }
                Expr::Neg(a) => {
                    write!(f, "-")?;
                    go(a, f, 3)?;
                }
                Expr::Ln(a) => {
                    write!(f, "ln(")?;
                    go(a, f, 0)?;
                    write!(f, ")")?;
                }
            }
            if need {
                write!(f, ")")?;
            }
            Ok(())
        }
        go(self, f, 0)
    }
}
