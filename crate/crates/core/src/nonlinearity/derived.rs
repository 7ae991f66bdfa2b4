use super::expr::{log_add_exp, GrowthExpr};
use super::invert::{invert_monotone, invert_on_log_line, InvertOptions};
use super::primitive::Primitive;
use crate::error::{Error, Result};

/// Accuracy of inverses computed in log coordinates.
const LOG_INVERSE_TOL: f64 = 1e-13;

/// `F`, `g^{-1}`, `Gamma` and `Gamma^{-1}` for one `(f, g, p, n)`.
///
/// `Gamma(s) = integral_0^{2s} g + k s^p` with `k = ((p-1)/p) c` and
/// `c = (p/(p-1))^p n`, so `k = (p/(p-1))^(p-1) n`.
#[derive(Debug, Clone)]
pub struct DerivedFunctions {
    pub p: f64,
    pub n: u32,
    f: GrowthExpr,
    g: GrowthExpr,
    big_f: Primitive,
    big_g: Primitive,
    ln_k: f64,
}

impl DerivedFunctions {
    pub fn new(f: &GrowthExpr, g: &GrowthExpr, p: f64, n: u32) -> Result<Self> {
        if !(p > 1.0 && p.is_finite()) {
            return Err(Error::InvalidSpec(format!("p must exceed 1, got {p}")));
        }
        if n < 1 {
            return Err(Error::InvalidSpec("dimension must be at least 1".into()));
        }
        Ok(Self {
            p,
            n,
            f: f.clone(),
            g: g.clone(),
            big_f: Primitive::new(f)?,
            big_g: Primitive::new(g)?,
            ln_k: (p - 1.0) * (p / (p - 1.0)).ln() + (n as f64).ln(),
        })
    }

    pub fn f(&self) -> &GrowthExpr {
        &self.f
    }

    pub fn g(&self) -> &GrowthExpr {
        &self.g
    }

    /// The constant `c = (p/(p-1))^p n` of the Gamma transform.
    pub fn c_const(&self) -> f64 {
        (self.p / (self.p - 1.0)).powf(self.p) * self.n as f64
    }

    /// `k = ((p-1)/p) c`.
    pub fn k_const(&self) -> f64 {
        self.ln_k.exp()
    }

    pub fn primitive_f(&self) -> &Primitive {
        &self.big_f
    }

    pub fn primitive_g(&self) -> &Primitive {
        &self.big_g
    }

    pub fn big_f(&self, s: f64) -> Result<f64> {
        self.big_f.eval(s)
    }

    /// `ln F(e^u)`.
    pub fn ln_big_f(&self, u: f64) -> f64 {
        self.big_f.ln_value(u)
    }

    pub fn g_inv(&self, y: f64) -> Result<f64> {
        if self.g.is_zero() {
            return Err(Error::Domain("g is identically zero and has no inverse".into()));
        }
        invert_monotone(|t| self.g.value(t), y, None, InvertOptions::default())
    }

    /// `ln g^{-1}(e^ly)`.
    pub fn ln_g_inv(&self, ly: f64) -> Result<f64> {
        if self.g.is_zero() {
            return Err(Error::Domain("g is identically zero and has no inverse".into()));
        }
        invert_on_log_line(|x| self.g.ln_value(x), ly, initial_guess(&self.g, ly), LOG_INVERSE_TOL)
    }

    pub fn gamma(&self, s: f64) -> Result<f64> {
        if !(s >= 0.0) {
            return Err(Error::Domain(format!("Gamma evaluated at negative argument {s}")));
        }
        if s == 0.0 {
            return Ok(0.0);
        }
        Ok(self.ln_gamma(s.ln()).exp())
    }

    /// `ln Gamma(e^ls)`.
    pub fn ln_gamma(&self, ls: f64) -> f64 {
        let power_part = self.ln_k + self.p * ls;
        log_add_exp(self.big_g.ln_value(std::f64::consts::LN_2 + ls), power_part)
    }

    pub fn gamma_inv(&self, y: f64) -> Result<f64> {
        if !(y >= 0.0) {
            return Err(Error::Range { y, lo: 0.0, hi: f64::INFINITY });
        }
        if y == 0.0 {
            return Ok(0.0);
        }
        Ok(self.ln_gamma_inv(y.ln())?.exp())
    }

    /// `ln Gamma^{-1}(e^ly)`.
    pub fn ln_gamma_inv(&self, ly: f64) -> Result<f64> {
        // Gamma >= k s^p, so the root lies below (ly - ln k) / p.
        let guess = (ly - self.ln_k) / self.p;
        invert_on_log_line(|x| self.ln_gamma(x), ly, guess, LOG_INVERSE_TOL)
    }

    /// `Gamma'(s) = 2 g(2s) + p k s^(p-1)`.
    pub fn gamma_prime(&self, s: f64) -> f64 {
        2.0 * self.g.value(2.0 * s) + self.p * self.k_const() * s.powf(self.p - 1.0)
    }
}

/// Starting point for a log-line inverse of `g`: the inverse of the dominant
/// power, or zero for opaque functions.
fn initial_guess(g: &GrowthExpr, ly: f64) -> f64 {
    match g.terms() {
        Some(ts) if !ts.is_empty() => {
            let t = ts.iter().max_by(|a, b| a.a.total_cmp(&b.a)).unwrap();
            let x = (ly - t.c.ln()) / t.a;
            if x.is_finite() {
                x
            } else {
                0.0
            }
        }
        _ => 0.0,
    }
}
