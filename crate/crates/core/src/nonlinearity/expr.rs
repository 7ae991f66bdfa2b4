use std::f64::consts::E;
use std::fmt;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use super::asymptotic::Growth;
use crate::error::{Error, Result};

/// One summand `c * t^a * (log(e + t))^b`.
///
/// The shifted logarithm keeps every term finite and zero-compatible at the
/// origin while leaving the behaviour at infinity that of `log t`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Term {
    pub c: f64,
    pub a: f64,
    #[serde(default)]
    pub b: f64,
}

impl Term {
    pub fn new(c: f64, a: f64, b: f64) -> Self {
        Self { c, a, b }
    }

    fn validate(&self) -> Result<()> {
        if !(self.c.is_finite() && self.c > 0.0) {
            return Err(Error::InvalidSpec(format!("coefficient must be positive, got {}", self.c)));
        }
        if !(self.a.is_finite() && self.a > 0.0) {
            return Err(Error::InvalidSpec(format!(
                "power exponent must be positive so that the term vanishes at 0, got {}",
                self.a
            )));
        }
        if !self.b.is_finite() {
            return Err(Error::InvalidSpec("log exponent must be finite".into()));
        }
        // a log(e+t) + b t/(e+t) > a + min(b, 0) keeps the derivative positive.
        if self.a + self.b.min(0.0) < 0.0 {
            return Err(Error::InvalidSpec(format!(
                "term t^{} log(e+t)^{} is not guaranteed to be increasing (need a + b >= 0 when b < 0)",
                self.a, self.b
            )));
        }
        Ok(())
    }

    #[inline]
    pub fn eval(&self, t: f64) -> f64 {
        if t == 0.0 {
            return 0.0;
        }
        let mut v = self.c * t.powf(self.a);
        if self.b != 0.0 {
            v *= (E + t).ln().powf(self.b);
        }
        v
    }

    /// `ln(term(e^lt))`.
    #[inline]
    pub fn ln_eval(&self, lt: f64) -> f64 {
        let mut v = self.c.ln() + self.a * lt;
        if self.b != 0.0 {
            v += self.b * ln_shifted_log(lt);
        }
        v
    }

    pub fn growth(&self) -> Growth {
        Growth::new(self.a, self.b)
    }
}

/// `ln(ln(e + e^lt))`, stable for large `lt`.
#[inline]
pub(crate) fn ln_shifted_log(lt: f64) -> f64 {
    let l = if lt > 1.0 { lt + (1.0 - lt).exp().ln_1p() } else { (E + lt.exp()).ln() };
    l.ln()
}

/// Black-box strictly increasing function with `h(0) = 0`.
#[derive(Clone)]
pub struct OpaqueMonotone {
    name: String,
    func: Arc<dyn Fn(f64) -> f64 + Send + Sync>,
}

impl OpaqueMonotone {
    pub fn name(&self) -> &str {
        &self.name
    }
}

impl fmt::Debug for OpaqueMonotone {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("OpaqueMonotone").field("name", &self.name).finish()
    }
}

/// A monotone nonlinearity on `[0, inf)`.
///
/// `Analytic` with an empty term list is the zero function, which is only
/// accepted by problem specs in test mode.
#[derive(Debug, Clone)]
pub enum GrowthExpr {
    Analytic(Vec<Term>),
    Opaque(OpaqueMonotone),
}

impl GrowthExpr {
    pub fn analytic(terms: Vec<Term>) -> Result<Self> {
        if terms.is_empty() {
            return Err(Error::InvalidSpec("a growth expression needs at least one term".into()));
        }
        for t in &terms {
            t.validate()?;
        }
        Ok(GrowthExpr::Analytic(terms))
    }

    /// `c * t^a`.
    pub fn power(c: f64, a: f64) -> Result<Self> {
        Self::analytic(vec![Term::new(c, a, 0.0)])
    }

    /// `c * t^a * log(e + t)^b`.
    pub fn power_log(c: f64, a: f64, b: f64) -> Result<Self> {
        Self::analytic(vec![Term::new(c, a, b)])
    }

    pub fn zero() -> Self {
        GrowthExpr::Analytic(Vec::new())
    }

    /// Wraps a user function. The caller declares it strictly increasing with
    /// `func(0) = 0`; only the value at zero is checked here.
    pub fn opaque<F>(name: impl Into<String>, func: F) -> Result<Self>
    where
        F: Fn(f64) -> f64 + Send + Sync + 'static,
    {
        let z = func(0.0);
        if z != 0.0 {
            return Err(Error::InvalidSpec(format!("opaque function must vanish at 0, got {z}")));
        }
        Ok(GrowthExpr::Opaque(OpaqueMonotone { name: name.into(), func: Arc::new(func) }))
    }

    pub fn is_zero(&self) -> bool {
        matches!(self, GrowthExpr::Analytic(t) if t.is_empty())
    }

    pub fn terms(&self) -> Option<&[Term]> {
        match self {
            GrowthExpr::Analytic(t) => Some(t),
            GrowthExpr::Opaque(_) => None,
        }
    }

    /// `Some((c, a))` when the expression is exactly `c * t^a`.
    pub fn as_pure_power(&self) -> Option<(f64, f64)> {
        match self.terms() {
            Some([t]) if t.b == 0.0 => Some((t.c, t.a)),
            _ => None,
        }
    }

    /// True when some term has `0 < a < 1`, i.e. the function is not
    /// Lipschitz at the origin.
    pub fn non_lipschitz_at_zero(&self) -> bool {
        self.terms().map(|ts| ts.iter().any(|t| t.a < 1.0)).unwrap_or(false)
    }

    pub fn eval(&self, t: f64) -> Result<f64> {
        if !(t >= 0.0) {
            return Err(Error::Domain(format!("nonlinearity evaluated at negative argument {t}")));
        }
        Ok(self.value(t))
    }

    /// Unchecked evaluation for `t >= 0`.
    #[inline]
    pub fn value(&self, t: f64) -> f64 {
        match self {
            GrowthExpr::Analytic(terms) => terms.iter().map(|term| term.eval(t)).sum(),
            GrowthExpr::Opaque(o) => {
                if t == 0.0 {
                    0.0
                } else {
                    (o.func)(t)
                }
            }
        }
    }

    /// `ln(value(e^lt))`; `-inf` for the zero function. Analytic sums never
    /// overflow here, opaque functions are limited to the f64 range.
    pub fn ln_value(&self, lt: f64) -> f64 {
        match self {
            GrowthExpr::Analytic(terms) => match terms.len() {
                0 => f64::NEG_INFINITY,
                1 => terms[0].ln_eval(lt),
                _ => log_sum_exp(terms.iter().map(|t| t.ln_eval(lt))),
            },
            GrowthExpr::Opaque(o) => (o.func)(lt.exp()).ln(),
        }
    }

    /// Dominant `(power, log)` exponent pair as `t -> infinity`.
    pub fn asymptotic_signature(&self) -> Result<Growth> {
        match self {
            GrowthExpr::Analytic(terms) => terms
                .iter()
                .map(Term::growth)
                .reduce(Growth::dominant)
                .ok_or_else(|| Error::Unsupported("the zero function has no growth signature".into())),
            GrowthExpr::Opaque(o) => {
                Err(Error::Unsupported(format!("opaque function '{}' has no analytic signature", o.name)))
            }
        }
    }

    /// Multiplies every coefficient by `k > 0`.
    pub fn scaled(&self, k: f64) -> Result<Self> {
        match self {
            GrowthExpr::Analytic(terms) => {
                Ok(GrowthExpr::Analytic(terms.iter().map(|t| Term::new(t.c * k, t.a, t.b)).collect()))
            }
            GrowthExpr::Opaque(o) => {
                let inner = o.func.clone();
                Self::opaque(format!("{}*{k}", o.name), move |t| k * inner(t))
            }
        }
    }
}

impl fmt::Display for GrowthExpr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            GrowthExpr::Analytic(terms) if terms.is_empty() => write!(f, "0"),
            GrowthExpr::Analytic(terms) => {
                for (i, t) in terms.iter().enumerate() {
                    if i > 0 {
                        write!(f, " + ")?;
                    }
                    write!(f, "{}*t^{}", t.c, t.a)?;
                    if t.b != 0.0 {
                        write!(f, "*log(e+t)^{}", t.b)?;
                    }
                }
                Ok(())
            }
            GrowthExpr::Opaque(o) => write!(f, "<{}>", o.name),
        }
    }
}

pub(crate) fn log_sum_exp(vals: impl Iterator<Item = f64>) -> f64 {
    let vals: Vec<f64> = vals.collect();
    let m = vals.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    if m == f64::NEG_INFINITY || m == f64::INFINITY {
        return m;
    }
    m + vals.iter().map(|v| (v - m).exp()).sum::<f64>().ln()
}

/// `ln(e^a + e^b)`.
#[inline]
pub(crate) fn log_add_exp(a: f64, b: f64) -> f64 {
    let (hi, lo) = if a >= b { (a, b) } else { (b, a) };
    if lo == f64::NEG_INFINITY {
        return hi;
    }
    hi + (lo - hi).exp().ln_1p()
}

#[derive(Serialize, Deserialize)]
struct Schema {
    terms: Vec<Term>,
}

impl Serialize for GrowthExpr {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        match self {
            GrowthExpr::Analytic(terms) => Schema { terms: terms.clone() }.serialize(s),
            GrowthExpr::Opaque(o) => Err(serde::ser::Error::custom(format!(
                "opaque function '{}' cannot be serialized",
                o.name
            ))),
        }
    }
}

impl<'de> Deserialize<'de> for GrowthExpr {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let schema = Schema::deserialize(d)?;
        if schema.terms.is_empty() {
            return Ok(GrowthExpr::zero());
        }
        GrowthExpr::analytic(schema.terms).map_err(serde::de::Error::custom)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn eval_examples() {
        let sq = GrowthExpr::power(1.0, 2.0).unwrap();
        assert_eq!(sq.eval(3.0).unwrap(), 9.0);
        assert_eq!(sq.eval(0.0).unwrap(), 0.0);
        let sum = GrowthExpr::analytic(vec![Term::new(1.0, 1.0, 0.0), Term::new(1.0, 3.0, 0.0)]).unwrap();
        assert_eq!(sum.eval(2.0).unwrap(), 10.0);
        let lg = GrowthExpr::power_log(1.0, 1.0, 2.0).unwrap();
        assert_eq!(lg.eval(0.0).unwrap(), 0.0);
    }

    #[test]
    fn negative_argument_is_a_domain_error() {
        let sq = GrowthExpr::power(1.0, 2.0).unwrap();
        assert!(matches!(sq.eval(-1.0), Err(Error::Domain(_))));
    }

    #[test]
    fn rejects_invalid_terms() {
        assert!(GrowthExpr::power(-1.0, 2.0).is_err());
        assert!(GrowthExpr::power(1.0, 0.0).is_err());
        assert!(GrowthExpr::power_log(1.0, 1.0, -2.0).is_err());
        assert!(GrowthExpr::analytic(vec![]).is_err());
        assert!(GrowthExpr::power_log(1.0, 5.0, -1.0).is_ok());
    }

    #[test]
    fn signature_examples() {
        let e = GrowthExpr::analytic(vec![Term::new(1.0, 2.0, 0.0), Term::new(1.0, 1.0, 0.0)]).unwrap();
        assert_eq!(e.asymptotic_signature().unwrap(), Growth::new(2.0, 0.0));
        let p = 3.0;
        let e = GrowthExpr::power_log(1.0, p - 1.0, 2.0).unwrap();
        assert_eq!(e.asymptotic_signature().unwrap(), Growth::new(2.0, 2.0));
        let e = GrowthExpr::power(5.0, 3.0).unwrap();
        assert_eq!(e.asymptotic_signature().unwrap(), Growth::new(3.0, 0.0));
        let o = GrowthExpr::opaque("cube", |t| t * t * t).unwrap();
        assert!(matches!(o.asymptotic_signature(), Err(Error::Unsupported(_))));
    }

    #[test]
    fn ln_value_matches_value() {
        let e = GrowthExpr::analytic(vec![Term::new(2.0, 1.5, 1.0), Term::new(0.5, 3.0, -1.0)]).unwrap();
        for &t in &[1e-3, 0.5, 2.0, 70.0, 1e6] {
            let direct = e.value(t).ln();
            assert!((e.ln_value(t.ln()) - direct).abs() < 1e-12 * direct.abs().max(1.0));
        }
        // stays finite far beyond the f64 range of the value itself
        assert!(e.ln_value(5000.0).is_finite());
    }

    #[test]
    fn json_schema_round_trip() {
        let e: GrowthExpr = serde_json::from_str(r#"{"terms":[{"c":1.0,"a":2.0,"b":0.0}]}"#).unwrap();
        assert_eq!(e.as_pure_power(), Some((1.0, 2.0)));
        let back = serde_json::to_string(&e).unwrap();
        assert_eq!(back, r#"{"terms":[{"c":1.0,"a":2.0,"b":0.0}]}"#);
        let bad: std::result::Result<GrowthExpr, _> = serde_json::from_str(r#"{"terms":[{"c":-1.0,"a":2.0}]}"#);
        assert!(bad.is_err());
    }
}
