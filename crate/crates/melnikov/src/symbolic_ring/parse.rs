//! Round-trip parser for the textual polynomial grammar
//! (`3/8*pi*a110*b102 + ...`).

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::Zero;

use super::{ParamName, ParamPoly, RingError, Slot};

/// Classifies a bare identifier: `pi`, auxiliary `A<k>`, perturbation
/// `a<i><k><l>`/`b<i><k><l>`, or a family parameter.
pub(crate) fn classify_param(word: &str, pos: usize) -> Result<ParamName, RingError> {
    if word == "pi" {
        return Ok(ParamName::Pi);
    }
    let bytes = word.as_bytes();
    if bytes[0] == b'A' && word.len() > 1 && bytes[1..].iter().all(u8::is_ascii_digit) {
        let k: u32 = word[1..].parse().map_err(|_| RingError::Parse {
            pos,
            msg: format!("auxiliary index out of range in `{word}`"),
        })?;
        return Ok(ParamName::aux(k));
    }
    if (bytes[0] == b'a' || bytes[0] == b'b')
        && word.len() == 4
        && bytes[1..].iter().all(u8::is_ascii_digit)
    {
        let slot = if bytes[0] == b'a' { Slot::A } else { Slot::B };
        return ParamName::perturbation(slot, bytes[1] - b'0', bytes[2] - b'0', bytes[3] - b'0');
    }
    ParamName::family(word)
}

/// Parses a polynomial from the textual grammar. Supports `+ - * / ^`,
/// parentheses, unsigned integer and `p/q` rational literals, and parameter
/// names; division is allowed only by nonzero rational constants.
pub fn parse_poly(input: &str) -> Result<ParamPoly, RingError> {
    let mut p = Parser { src: input.as_bytes(), pos: 0 };
    let poly = p.expr()?;
    p.skip_ws();
    if p.pos != p.src.len() {
        return Err(p.error("unexpected trailing input"));
    }
    Ok(poly)
}

pub(crate) struct Parser<'a> {
    pub src: &'a [u8],
    pub pos: usize,
}

impl<'a> Parser<'a> {
    pub(crate) fn error(&self, msg: impl Into<String>) -> RingError {
        RingError::Parse { pos: self.pos, msg: msg.into() }
    }

    pub(crate) fn skip_ws(&mut self) {
        while self.src.get(self.pos).is_some_and(|b| b.is_ascii_whitespace()) {
            self.pos += 1;
        }
    }

    pub(crate) fn peek(&mut self) -> Option<u8> {
        self.skip_ws();
        self.src.get(self.pos).copied()
    }

    pub(crate) fn eat(&mut self, byte: u8) -> bool {
        if self.peek() == Some(byte) {
            self.pos += 1;
            true
        } else {
            false
        }
    }

    pub(crate) fn expr(&mut self) -> Result<ParamPoly, RingError> {
        self.expr_with(&mut |_, word, pos| classify_param(word, pos).map(ParamPoly::var))
    }

    /// Expression parser parameterized over identifier resolution, so other
    /// grammars (system definitions) can reuse it with extra names.
    pub(crate) fn expr_with(
        &mut self,
        resolve: &mut dyn FnMut(&Self, &str, usize) -> Result<ParamPoly, RingError>,
    ) -> Result<ParamPoly, RingError> {
        let mut acc = self.term_with(resolve)?;
        loop {
            if self.eat(b'+') {
                let t = self.term_with(resolve)?;
                acc.add_assign_ref(&t);
            } else if self.eat(b'-') {
                let t = self.term_with(resolve)?;
                acc.sub_assign_ref(&t);
            } else {
                return Ok(acc);
            }
        }
    }

    fn term_with(
        &mut self,
        resolve: &mut dyn FnMut(&Self, &str, usize) -> Result<ParamPoly, RingError>,
    ) -> Result<ParamPoly, RingError> {
        let mut acc = self.factor_with(resolve)?;
        loop {
            if self.eat(b'*') {
                let f = self.factor_with(resolve)?;
                acc = &acc * &f;
            } else if self.eat(b'/') {
                let at = self.pos;
                let f = self.factor_with(resolve)?;
                let c = f.as_constant().ok_or_else(|| RingError::Parse {
                    pos: at,
                    msg: "division only by nonzero rational constants".into(),
                })?;
                if c.is_zero() {
                    return Err(RingError::Parse { pos: at, msg: "division by zero".into() });
                }
                acc = acc.scale(&c.recip());
            } else {
                return Ok(acc);
            }
        }
    }

    fn factor_with(
        &mut self,
        resolve: &mut dyn FnMut(&Self, &str, usize) -> Result<ParamPoly, RingError>,
    ) -> Result<ParamPoly, RingError> {
        if self.eat(b'-') {
            let f = self.factor_with(resolve)?;
            return Ok(-&f);
        }
        let base = self.primary_with(resolve)?;
        if self.eat(b'^') {
            let exp = self.uint()?;
            let exp: u32 = exp.try_into().map_err(|_| self.error("exponent too large"))?;
            return Ok(base.pow(exp));
        }
        Ok(base)
    }

    fn primary_with(
        &mut self,
        resolve: &mut dyn FnMut(&Self, &str, usize) -> Result<ParamPoly, RingError>,
    ) -> Result<ParamPoly, RingError> {
        match self.peek() {
            Some(b'(') => {
                self.pos += 1;
                let inner = self.expr_with(resolve)?;
                if !self.eat(b')') {
                    return Err(self.error("expected `)`"));
                }
                Ok(inner)
            }
            Some(b) if b.is_ascii_digit() => {
                let n = self.uint()?;
                Ok(ParamPoly::constant(BigRational::from_integer(n)))
            }
            Some(b) if b.is_ascii_alphabetic() || b == b'_' => {
                let at = self.pos;
                let word = self.identifier()?;
                resolve(self, &word, at)
            }
            _ => Err(self.error("expected number, name, or `(`")),
        }
    }

    pub(crate) fn uint(&mut self) -> Result<BigInt, RingError> {
        self.skip_ws();
        let start = self.pos;
        while self.src.get(self.pos).is_some_and(u8::is_ascii_digit) {
            self.pos += 1;
        }
        if self.pos == start {
            return Err(self.error("expected an unsigned integer"));
        }
        let digits = std::str::from_utf8(&self.src[start..self.pos]).expect("digits are ASCII");
        Ok(digits.parse::<BigInt>().expect("digit string parses"))
    }

    pub(crate) fn identifier(&mut self) -> Result<String, RingError> {
        self.skip_ws();
        let start = self.pos;
        while self
            .src
            .get(self.pos)
            .is_some_and(|b| b.is_ascii_alphanumeric() || *b == b'_')
        {
            self.pos += 1;
        }
        if self.pos == start {
            return Err(self.error("expected an identifier"));
        }
        Ok(std::str::from_utf8(&self.src[start..self.pos])
            .expect("identifiers are ASCII")
            .to_string())
    }
}
