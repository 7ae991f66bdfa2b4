//! The primitive `F(s) = integral_0^s f(t) dt`, kept in log space so that it
//! stays usable far beyond the f64 range of `F` itself.

use super::expr::{log_add_exp, log_sum_exp, GrowthExpr, Term};
use crate::error::{Error, Result};
use crate::integrals::quad::{gl10_points, quad_with, QuadOptions};

/// `ln s` of the first table anchor.
const U_FIRST: f64 = -13.815_510_557_964_274; // ln(1e-6)
/// `ln s` of the last table anchor; the asymptotic tail takes over from here.
const U_LAST: f64 = 60.0;
const DU: f64 = 0.05;
/// Panel width in `ln s` used for opaque functions past the table.
const DU_OPAQUE_TAIL: f64 = 0.25;

#[derive(Debug, Clone)]
enum Kind {
    Zero,
    /// `ln F(e^u) = logsumexp_i (ln(c_i / (a_i + 1)) + (a_i + 1) u)`.
    Closed(Vec<(f64, f64)>),
    Table(Table),
}

#[derive(Debug, Clone)]
struct Table {
    /// `ln F` at `u = U_FIRST + j * DU`.
    ln_anchor: Vec<f64>,
    tail: Option<AsymptoticTail>,
}

/// `F(s) = Phi(s) + rel_defect * Phi(s_last)` for `ln s >= U_LAST`, where
/// `Phi` is the termwise asymptotic antiderivative.
#[derive(Debug, Clone)]
struct AsymptoticTail {
    terms: Vec<Term>,
    ln_phi_last: f64,
    rel_defect: f64,
}

/// Primitive of a nonlinearity with cheap evaluation.
#[derive(Debug, Clone)]
pub struct Primitive {
    expr: GrowthExpr,
    kind: Kind,
}

impl Primitive {
    pub fn new(expr: &GrowthExpr) -> Result<Self> {
        let kind = match expr {
            GrowthExpr::Analytic(terms) if terms.is_empty() => Kind::Zero,
            GrowthExpr::Analytic(terms) if terms.iter().all(|t| t.b == 0.0) => Kind::Closed(
                terms.iter().map(|t| ((t.c / (t.a + 1.0)).ln(), t.a + 1.0)).collect(),
            ),
            _ => Kind::Table(Table::build(expr)?),
        };
        Ok(Self { expr: expr.clone(), kind })
    }

    pub fn expr(&self) -> &GrowthExpr {
        &self.expr
    }

    /// `F(s)`; may overflow to infinity for huge `s`.
    pub fn eval(&self, s: f64) -> Result<f64> {
        if !(s >= 0.0) {
            return Err(Error::Domain(format!("primitive evaluated at negative argument {s}")));
        }
        if s == 0.0 {
            return Ok(0.0);
        }
        Ok(self.ln_value(s.ln()).exp())
    }

    /// `ln F(e^u)`.
    pub fn ln_value(&self, u: f64) -> f64 {
        match &self.kind {
            Kind::Zero => f64::NEG_INFINITY,
            Kind::Closed(parts) => match parts.len() {
                1 => parts[0].0 + parts[0].1 * u,
                _ => log_sum_exp(parts.iter().map(|(lc, k)| lc + k * u)),
            },
            Kind::Table(t) => t.ln_value(&self.expr, u),
        }
    }
}

/// `ln integral_{u0}^{u1} f(e^x) e^x dx` by one 10-point Gauss panel.
fn ln_panel(expr: &GrowthExpr, u0: f64, u1: f64) -> f64 {
    if u1 <= u0 {
        return f64::NEG_INFINITY;
    }
    let pts = gl10_points(u0, u1);
    let vals: Vec<f64> = pts.iter().map(|&(x, w)| expr.ln_value(x) + x + w.ln()).collect();
    log_sum_exp(vals.into_iter())
}

fn direct_primitive(expr: &GrowthExpr, s: f64) -> Result<f64> {
    let opts = QuadOptions { abs_tol: 0.0, rel_tol: 1e-13, max_intervals: 2000 };
    quad_with(|t| expr.value(t), 0.0, s, opts).map(|r| r.value)
}

impl Table {
    fn build(expr: &GrowthExpr) -> Result<Self> {
        let count = ((U_LAST - U_FIRST) / DU).round() as usize + 1;
        let mut ln_anchor = Vec::with_capacity(count);
        let first = direct_primitive(expr, U_FIRST.exp())?;
        if !(first > 0.0) {
            return Err(Error::Domain("primitive vanishes at the first anchor".into()));
        }
        ln_anchor.push(first.ln());
        for j in 1..count {
            let u0 = U_FIRST + (j - 1) as f64 * DU;
            let inc = ln_panel(expr, u0, u0 + DU);
            if !inc.is_finite() {
                return Err(Error::NonFinite { at: (u0 + DU).exp() });
            }
            let prev = ln_anchor[j - 1];
            ln_anchor.push(log_add_exp(prev, inc));
        }
        let tail = match expr {
            GrowthExpr::Analytic(terms) => {
                let u_last = U_FIRST + (count - 1) as f64 * DU;
                let ln_phi_last = ln_asymptotic(terms, u_last);
                let rel_defect = (ln_anchor[count - 1] - ln_phi_last).exp_m1();
                Some(AsymptoticTail { terms: terms.clone(), ln_phi_last, rel_defect })
            }
            GrowthExpr::Opaque(_) => None,
        };
        Ok(Self { ln_anchor, tail })
    }

    fn u_last(&self) -> f64 {
        U_FIRST + (self.ln_anchor.len() - 1) as f64 * DU
    }

    fn ln_value(&self, expr: &GrowthExpr, u: f64) -> f64 {
        if u == f64::NEG_INFINITY {
            return f64::NEG_INFINITY;
        }
        if u < U_FIRST {
            return match direct_primitive(expr, u.exp()) {
                Ok(v) => v.ln(),
                Err(_) => f64::NAN,
            };
        }
        let u_last = self.u_last();
        if u <= u_last {
            let j = (((u - U_FIRST) / DU).floor() as usize).min(self.ln_anchor.len() - 1);
            let uj = U_FIRST + j as f64 * DU;
            return log_add_exp(self.ln_anchor[j], ln_panel(expr, uj, u));
        }
        match &self.tail {
            Some(t) => {
                let ln_phi = ln_asymptotic(&t.terms, u);
                ln_phi + (t.rel_defect * (t.ln_phi_last - ln_phi).exp()).ln_1p()
            }
            None => {
                let mut acc = *self.ln_anchor.last().unwrap();
                let mut x = u_last;
                while x < u {
                    let next = (x + DU_OPAQUE_TAIL).min(u);
                    acc = log_add_exp(acc, ln_panel(expr, x, next));
                    x = next;
                }
                acc
            }
        }
    }
}

/// `ln` of the termwise asymptotic antiderivative of `sum c t^a (ln t)^b` at
/// `t = e^u`, valid for large `u`:
/// `c t^(a+1) u^b / (a+1) * sum_k (-1)^k b(b-1)...(b-k+1) / ((a+1) u)^k`.
fn ln_asymptotic(terms: &[Term], u: f64) -> f64 {
    log_sum_exp(terms.iter().map(|t| {
        let k1 = t.a + 1.0;
        let mut series = 1.0;
        let mut term = 1.0;
        let mut prev = f64::INFINITY;
        for k in 0..40 {
            term *= -(t.b - k as f64) / (k1 * u);
            if term == 0.0 || term.abs() >= prev {
                break;
            }
            series += term;
            prev = term.abs();
            if prev < 1e-18 {
                break;
            }
        }
        t.c.ln() + k1 * u + t.b * u.ln() - k1.ln() + series.ln()
    }))
}
