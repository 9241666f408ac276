//! Parameter names and their canonical total order.

use std::fmt;

use super::RingError;

/// Which perturbation polynomial a coefficient belongs to: slot `a`
/// multiplies x^k y^l in P_i, slot `b` the same monomial in Q_i.
#[derive(Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Debug)]
pub enum Slot {
    A,
    B,
}

impl Slot {
    fn letter(self) -> char {
        match self {
            Slot::A => 'a',
            Slot::B => 'b',
        }
    }
}

/// A family-parameter name: at most 8 ASCII characters, stored inline and
/// zero-padded so that the derived byte order coincides with string order.
#[derive(Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct FamilyName([u8; 8]);

impl FamilyName {
    /// Builds a family name. Names must be 1..=8 ASCII characters, start
    /// with a letter, continue with letters, digits, or `_`, and must not
    /// collide with the reserved spellings (`pi`, `A<digits>`, perturbation
    /// patterns `a<i><k><l>`/`b<i><k><l>`, and the coordinates `x`, `y`).
    pub fn new(name: &str) -> Result<Self, RingError> {
        let err = |msg| RingError::InvalidFamilyName(name.to_string(), msg);
        if name.is_empty() || name.len() > 8 {
            return Err(err("length must be 1..=8"));
        }
        let bytes = name.as_bytes();
        if !bytes[0].is_ascii_alphabetic() {
            return Err(err("must start with an ASCII letter"));
        }
        if !bytes.iter().all(|b| b.is_ascii_alphanumeric() || *b == b'_') {
            return Err(err("only ASCII letters, digits, and `_` allowed"));
        }
        if name == "pi" || name == "x" || name == "y" {
            return Err(err("reserved name"));
        }
        if bytes[0] == b'A' && bytes[1..].iter().all(|b| b.is_ascii_digit()) && name.len() > 1 {
            return Err(err("collides with auxiliary parameter spelling A<k>"));
        }
        if (bytes[0] == b'a' || bytes[0] == b'b')
            && name.len() == 4
            && bytes[1..].iter().all(|b| b.is_ascii_digit())
        {
            return Err(err("collides with perturbation coefficient spelling"));
        }
        let mut buf = [0u8; 8];
        buf[..bytes.len()].copy_from_slice(bytes);
        Ok(FamilyName(buf))
    }

    /// The name as a string slice.
    pub fn as_str(&self) -> &str {
        let len = self.0.iter().position(|b| *b == 0).unwrap_or(8);
        std::str::from_utf8(&self.0[..len]).expect("family names are ASCII")
    }
}

impl fmt::Display for FamilyName {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl fmt::Debug for FamilyName {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "FamilyName({})", self.as_str())
    }
}

/// A symbolic variable of the coefficient ring.
///
/// The derived order is the canonical one used everywhere: `pi` first, then
/// family parameters (by name), then auxiliary `A_k` (by index), then
/// perturbation coefficients (slot, order, exponents).
#[derive(Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Debug)]
pub enum ParamName {
    /// The transcendental constant π, kept formal in all symbolic data.
    Pi,
    /// A family parameter of the unperturbed system, e.g. `alpha`.
    Family(FamilyName),
    /// An auxiliary parameter `A_k` introduced by jet reparameterization.
    Auxiliary(u32),
    /// A perturbation coefficient `a_{i kx ky}` or `b_{i kx ky}`.
    Perturbation { slot: Slot, order: u8, kx: u8, ky: u8 },
}

impl ParamName {
    /// Family parameter by name; errors on invalid or reserved spellings.
    pub fn family(name: &str) -> Result<Self, RingError> {
        Ok(ParamName::Family(FamilyName::new(name)?))
    }

    /// Auxiliary parameter `A_k`.
    pub fn aux(k: u32) -> Self {
        ParamName::Auxiliary(k)
    }

    /// Perturbation coefficient for `x^kx y^ky` at perturbation order 1 or 2.
    pub fn perturbation(slot: Slot, order: u8, kx: u8, ky: u8) -> Result<Self, RingError> {
        if !(1..=2).contains(&order) || kx + ky == 0 || kx > 9 || ky > 9 {
            return Err(RingError::InvalidPerturbationIndex { order, kx, ky });
        }
        Ok(ParamName::Perturbation { slot, order, kx, ky })
    }

    /// True for perturbation coefficients of the given order.
    pub fn is_perturbation_of_order(&self, i: u8) -> bool {
        matches!(self, ParamName::Perturbation { order, .. } if *order == i)
    }
}

impl fmt::Display for ParamName {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ParamName::Pi => f.write_str("pi"),
            ParamName::Family(name) => name.fmt(f),
            ParamName::Auxiliary(k) => write!(f, "A{k}"),
            ParamName::Perturbation { slot, order, kx, ky } => {
                write!(f, "{}{}{}{}", slot.letter(), order, kx, ky)
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn canonical_order_is_kind_then_fields() {
        let pi = ParamName::Pi;
        let alpha = ParamName::family("alpha").unwrap();
        let beta = ParamName::family("beta").unwrap();
        let a1 = ParamName::aux(1);
        let a110 = ParamName::perturbation(Slot::A, 1, 1, 0).unwrap();
        let b101 = ParamName::perturbation(Slot::B, 1, 0, 1).unwrap();
        let mut names = vec![b101, a1, beta, a110, pi, alpha];
        names.sort();
        assert_eq!(names, vec![pi, alpha, beta, a1, a110, b101]);
    }

    #[test]
    fn display_round_trips_by_spelling() {
        assert_eq!(ParamName::Pi.to_string(), "pi");
        assert_eq!(ParamName::family("alpha").unwrap().to_string(), "alpha");
        assert_eq!(ParamName::aux(12).to_string(), "A12");
        assert_eq!(
            ParamName::perturbation(Slot::B, 2, 0, 3).unwrap().to_string(),
            "b203"
        );
    }

    #[test]
    fn reserved_family_spellings_rejected() {
        assert!(ParamName::family("pi").is_err());
        assert!(ParamName::family("A3").is_err());
        assert!(ParamName::family("a110").is_err());
        assert!(ParamName::family("x").is_err());
        assert!(ParamName::family("toolongname").is_err());
        assert!(ParamName::family("d").is_ok());
        assert!(ParamName::family("abc").is_ok());
    }

    #[test]
    fn perturbation_index_validation() {
        assert!(ParamName::perturbation(Slot::A, 3, 1, 0).is_err());
        assert!(ParamName::perturbation(Slot::A, 1, 0, 0).is_err());
        assert!(ParamName::perturbation(Slot::A, 1, 3, 0).is_ok());
    }
}
