//! Exponent arithmetic for functions behaving like `s^power * (log s)^log`
//! as `s -> infinity`. Multiplicative constants are dropped throughout; only
//! the pair of exponents matters for integral convergence.

use serde::{Deserialize, Serialize};
use std::cmp::Ordering;

/// Tolerance used when deciding that two exponents coincide.
pub const EXPONENT_EPS: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Growth {
    pub power: f64,
    pub log: f64,
}

impl Growth {
    pub const fn new(power: f64, log: f64) -> Self {
        Self { power, log }
    }

    pub const fn power(power: f64) -> Self {
        Self { power, log: 0.0 }
    }

    /// Product of the two asymptotic forms.
    pub fn mul(self, other: Growth) -> Growth {
        Growth::new(self.power + other.power, self.log + other.log)
    }

    pub fn pow(self, k: f64) -> Growth {
        Growth::new(self.power * k, self.log * k)
    }

    pub fn recip(self) -> Growth {
        self.pow(-1.0)
    }

    /// `self(inner(s))` for an inner function tending to infinity like a
    /// positive power. `log(s^a (log s)^b) ~ a log s`, so the log exponent of
    /// the outer function survives unchanged.
    pub fn compose(self, inner: Growth) -> Growth {
        debug_assert!(inner.power > 0.0);
        Growth::new(self.power * inner.power, self.power * inner.log + self.log)
    }

    /// Asymptotic inverse of an increasing function with positive power.
    /// `y = t^a (log t)^b` gives `t ~ y^(1/a) (log y)^(-b/a)`.
    pub fn inverse(self) -> Growth {
        debug_assert!(self.power > 0.0);
        Growth::new(1.0 / self.power, -self.log / self.power)
    }

    /// Growth of `integral_0^s` of a function with `power > -1`.
    pub fn integrate(self) -> Growth {
        debug_assert!(self.power > -1.0);
        Growth::new(self.power + 1.0, self.log)
    }

    /// Lexicographic comparison on (power, log), powers equal within
    /// [`EXPONENT_EPS`].
    pub fn cmp_dominance(&self, other: &Growth) -> Ordering {
        if (self.power - other.power).abs() > EXPONENT_EPS {
            self.power.partial_cmp(&other.power).unwrap_or(Ordering::Equal)
        } else if (self.log - other.log).abs() > EXPONENT_EPS {
            self.log.partial_cmp(&other.log).unwrap_or(Ordering::Equal)
        } else {
            Ordering::Equal
        }
    }

    /// Growth of a sum: the dominant summand.
    pub fn dominant(self, other: Growth) -> Growth {
        if other.cmp_dominance(&self) == Ordering::Greater {
            other
        } else {
            self
        }
    }

    /// Bertrand rule for `integral_1^inf s^power (log s)^log ds`.
    pub fn tail_integral_diverges(&self) -> bool {
        let excess = self.power + 1.0;
        if excess > EXPONENT_EPS {
            true
        } else if excess < -EXPONENT_EPS {
            false
        } else {
            self.log >= -1.0 - EXPONENT_EPS
        }
    }
}
