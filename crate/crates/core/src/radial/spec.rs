use std::fmt;

use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{Error, Result};
use crate::nonlinearity::GrowthExpr;

/// Which of the two problems: `Delta_p u = f(u) + g(|grad u|)` or `... - g`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Sign {
    Plus,
    Minus,
}

impl Sign {
    pub fn factor(self) -> f64 {
        match self {
            Sign::Plus => 1.0,
            Sign::Minus => -1.0,
        }
    }

    pub fn label(self) -> &'static str {
        match self {
            Sign::Plus => "plus",
            Sign::Minus => "minus",
        }
    }
}

impl fmt::Display for Sign {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.label())
    }
}

impl std::str::FromStr for Sign {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "plus" | "+" | "p+" => Ok(Sign::Plus),
            "minus" | "-" | "p-" => Ok(Sign::Minus),
            other => Err(Error::InvalidSpec(format!("unknown sign '{other}', expected plus or minus"))),
        }
    }
}

impl Serialize for Sign {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.serialize_str(self.label())
    }
}

impl<'de> Deserialize<'de> for Sign {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

/// A full problem instance.
#[derive(Debug, Clone, Serialize)]
pub struct ProblemSpec {
    pub p: f64,
    pub n: u32,
    pub sign: Sign,
    pub v0: f64,
    pub f: GrowthExpr,
    pub g: GrowthExpr,
    /// Allows `f` or `g` to be the zero function.
    #[serde(skip)]
    pub test_mode: bool,
}

#[derive(Deserialize)]
struct RawSpec {
    p: f64,
    n: u32,
    sign: Sign,
    v0: f64,
    f: GrowthExpr,
    g: GrowthExpr,
}

impl ProblemSpec {
    pub fn new(p: f64, n: u32, sign: Sign, f: GrowthExpr, g: GrowthExpr, v0: f64) -> Result<Self> {
        let spec = Self { p, n, sign, v0, f, g, test_mode: false };
        spec.validate()?;
        Ok(spec)
    }

    /// Same as [`ProblemSpec::new`] but accepting zero nonlinearities.
    pub fn new_test_mode(p: f64, n: u32, sign: Sign, f: GrowthExpr, g: GrowthExpr, v0: f64) -> Result<Self> {
        let spec = Self { p, n, sign, v0, f, g, test_mode: true };
        spec.validate()?;
        Ok(spec)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.p > 1.0 && self.p.is_finite()) {
            return Err(Error::InvalidSpec(format!("p must exceed 1, got {}", self.p)));
        }
        if self.n < 1 {
            return Err(Error::InvalidSpec("dimension n must be at least 1".into()));
        }
        if !(self.v0 > 0.0 && self.v0.is_finite()) {
            return Err(Error::InvalidSpec(format!("v0 must be positive, got {}", self.v0)));
        }
        if !self.test_mode {
            if self.f.is_zero() {
                return Err(Error::InvalidSpec("f is identically zero (allowed only in test mode)".into()));
            }
            if self.g.is_zero() {
                return Err(Error::InvalidSpec("g is identically zero (allowed only in test mode)".into()));
            }
        }
        Ok(())
    }

    /// Parses the JSON schema `{p, n, sign, v0, f, g}`.
    pub fn from_json_value<'de, D: Deserializer<'de>>(d: D, test_mode: bool) -> Result<Self> {
        let raw = RawSpec::deserialize(d).map_err(|e| Error::InvalidSpec(e.to_string()))?;
        let spec = Self { p: raw.p, n: raw.n, sign: raw.sign, v0: raw.v0, f: raw.f, g: raw.g, test_mode };
        spec.validate()?;
        Ok(spec)
    }

    pub fn with_v0(&self, v0: f64) -> Result<Self> {
        let mut s = self.clone();
        s.v0 = v0;
        s.validate()?;
        Ok(s)
    }

    /// `f(v) +- g(t)`.
    pub fn rhs(&self, v: f64, t: f64) -> f64 {
        self.f.value(v) + self.sign.factor() * self.g.value(t)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_sign_variants() {
        for s in ["plus", "+", "Plus"] {
            assert_eq!(s.parse::<Sign>().unwrap(), Sign::Plus);
        }
        assert_eq!("-".parse::<Sign>().unwrap(), Sign::Minus);
        assert!("up".parse::<Sign>().is_err());
    }

    #[test]
    fn zero_g_needs_test_mode() {
        let f = GrowthExpr::power(1.0, 1.0).unwrap();
        assert!(ProblemSpec::new(2.0, 3, Sign::Plus, f.clone(), GrowthExpr::zero(), 1.0).is_err());
        assert!(ProblemSpec::new_test_mode(2.0, 3, Sign::Plus, f, GrowthExpr::zero(), 1.0).is_ok());
    }

    #[test]
    fn rejects_bad_parameters() {
        let f = GrowthExpr::power(1.0, 1.0).unwrap();
        assert!(ProblemSpec::new(1.0, 3, Sign::Plus, f.clone(), f.clone(), 1.0).is_err());
        assert!(ProblemSpec::new(2.0, 0, Sign::Plus, f.clone(), f.clone(), 1.0).is_err());
        assert!(ProblemSpec::new(2.0, 3, Sign::Plus, f.clone(), f, 0.0).is_err());
    }
}
