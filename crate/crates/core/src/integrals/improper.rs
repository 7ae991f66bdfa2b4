//! Three-valued convergence test for `integral_lower^inf phi(s) ds` with a
//! positive, eventually monotone integrand.

use serde::{Deserialize, Serialize};

use super::quad::gl10_points;
use crate::error::{Error, Result};
use crate::nonlinearity::expr::log_sum_exp;
use crate::nonlinearity::Growth;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Verdict {
    Diverges,
    Converges,
    Inconclusive,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Method {
    Symbolic,
    NumericTrend,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Evidence {
    Symbolic {
        alpha: f64,
        beta: f64,
    },
    NumericTrend {
        cutoffs: Vec<f64>,
        partial_sums: Vec<f64>,
        /// Fitted `d ln D / d ln s` of the quarter-decade increments `D`.
        slope: f64,
        /// Fitted exponent of the `ln s` factor.
        log_exponent: f64,
        fitted_alpha: f64,
        fit_rms: f64,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConvergenceVerdict {
    pub verdict: Verdict,
    pub method: Method,
    pub evidence: Evidence,
}

impl ConvergenceVerdict {
    pub fn symbolic(sig: Growth) -> Self {
        let verdict = if sig.tail_integral_diverges() { Verdict::Diverges } else { Verdict::Converges };
        Self { verdict, method: Method::Symbolic, evidence: Evidence::Symbolic { alpha: sig.power, beta: sig.log } }
    }

    pub fn diverges(&self) -> bool {
        self.verdict == Verdict::Diverges
    }

    pub fn converges(&self) -> bool {
        self.verdict == Verdict::Converges
    }

    pub fn inconclusive(&self) -> bool {
        self.verdict == Verdict::Inconclusive
    }
}

/// An integrand known either by its tail exponent pair or only through
/// `ln_phi(u) = ln phi(e^u)`.
pub struct Integrand<'a> {
    pub signature: Option<Growth>,
    ln_phi: Box<dyn Fn(f64) -> f64 + 'a>,
}

impl<'a> Integrand<'a> {
    pub fn new(signature: Option<Growth>, ln_phi: impl Fn(f64) -> f64 + 'a) -> Self {
        Self { signature, ln_phi: Box::new(ln_phi) }
    }

    /// Evaluator-only integrand from `phi` itself.
    pub fn from_fn(phi: impl Fn(f64) -> f64 + 'a) -> Self {
        Self::new(None, move |u: f64| phi(u.exp()).ln())
    }

    pub fn ln_phi(&self, u: f64) -> f64 {
        (self.ln_phi)(u)
    }
}

/// Cutoffs at which partial integrals are reported.
pub const CUTOFFS: [f64; 4] = [1e3, 1e5, 1e7, 1e9];

/// Tail exponents within this distance of -1 are not decided by the slope.
pub const INDECISION_BAND: f64 = 0.02;

const PANELS_PER_DECADE: usize = 4;
/// `|slope|` below which the fit is treated as sitting on the boundary and
/// the log exponent decides.
const FLAT_SLOPE: f64 = 0.005;
const LOG_EXPONENT_MARGIN: f64 = 0.2;
const MAX_RMS_FOR_LOG_RULE: f64 = 1e-3;

/// Symbolic verdict when a signature is present, numeric trend otherwise.
pub fn classify_improper(phi: &Integrand<'_>, lower: f64) -> Result<ConvergenceVerdict> {
    match phi.signature {
        Some(sig) => Ok(ConvergenceVerdict::symbolic(sig)),
        None => classify_numeric(phi, lower),
    }
}

/// The numeric trend test, ignoring any signature.
pub fn classify_numeric(phi: &Integrand<'_>, lower: f64) -> Result<ConvergenceVerdict> {
    if !(lower > 0.0 && lower < CUTOFFS[0]) {
        return Err(Error::Domain(format!("lower limit must lie in (0, {}), got {lower}", CUTOFFS[0])));
    }
    let ln_term = |u: f64| -> Result<f64> {
        let v = phi.ln_phi(u) + u;
        if v.is_nan() || v == f64::INFINITY {
            Err(Error::NonFinite { at: u.exp() })
        } else {
            Ok(v)
        }
    };
    let ln_panel = |a: f64, b: f64| -> Result<f64> {
        let mut vals = Vec::with_capacity(10);
        for (x, w) in gl10_points(a, b) {
            vals.push(ln_term(x)? + w.ln());
        }
        Ok(log_sum_exp(vals.into_iter()))
    };

    // Head: lower .. first cutoff.
    let u_lo = lower.ln();
    let u_first = CUTOFFS[0].ln();
    let head_panels = ((u_first - u_lo) / 0.25).ceil().max(1.0) as usize;
    let mut ln_head = Vec::with_capacity(head_panels);
    for i in 0..head_panels {
        let a = u_lo + (u_first - u_lo) * i as f64 / head_panels as f64;
        let b = u_lo + (u_first - u_lo) * (i + 1) as f64 / head_panels as f64;
        ln_head.push(ln_panel(a, b)?);
    }
    let mut ln_partial = log_sum_exp(ln_head.into_iter());

    // Tail increments over quarter decades.
    let decades = (CUTOFFS[3] / CUTOFFS[0]).log10().round() as usize;
    let du = std::f64::consts::LN_10 / PANELS_PER_DECADE as f64;
    let mut mids = Vec::new();
    let mut ln_d = Vec::new();
    let mut partial_sums = vec![ln_partial.exp()];
    for k in 0..decades * PANELS_PER_DECADE {
        let a = u_first + k as f64 * du;
        let b = a + du;
        let d = ln_panel(a, b)?;
        ln_partial = log_sum_exp([ln_partial, d].into_iter());
        mids.push(0.5 * (a + b));
        ln_d.push(d);
        if (k + 1) % (2 * PANELS_PER_DECADE) == 0 {
            partial_sums.push(ln_partial.exp());
        }
    }

    let (slope, log_exponent, rms) = fit_power_log(&mids, &ln_d);
    let fitted_alpha = slope - 1.0;
    let verdict = if fitted_alpha >= -1.0 + INDECISION_BAND {
        Verdict::Diverges
    } else if fitted_alpha <= -1.0 - INDECISION_BAND {
        Verdict::Converges
    } else if slope.abs() <= FLAT_SLOPE
        && rms <= MAX_RMS_FOR_LOG_RULE
        && (log_exponent + 1.0).abs() >= LOG_EXPONENT_MARGIN
    {
        if log_exponent > -1.0 {
            Verdict::Diverges
        } else {
            Verdict::Converges
        }
    } else {
        Verdict::Inconclusive
    };
    Ok(ConvergenceVerdict {
        verdict,
        method: Method::NumericTrend,
        evidence: Evidence::NumericTrend {
            cutoffs: CUTOFFS.to_vec(),
            partial_sums,
            slope,
            log_exponent,
            fitted_alpha,
            fit_rms: rms,
        },
    })
}

/// Least squares for `y = kappa x + beta ln x + c`; returns `(kappa, beta, rms)`.
fn fit_power_log(x: &[f64], y: &[f64]) -> (f64, f64, f64) {
    let n = x.len() as f64;
    let cols: Vec<[f64; 3]> = x.iter().map(|&xi| [xi, xi.ln(), 1.0]).collect();
    let mut ata = [[0.0; 3]; 3];
    let mut aty = [0.0; 3];
    for (row, &yi) in cols.iter().zip(y) {
        for i in 0..3 {
            aty[i] += row[i] * yi;
            for j in 0..3 {
                ata[i][j] += row[i] * row[j];
            }
        }
    }
    let coef = solve3(ata, aty);
    let mut ss = 0.0;
    for (row, &yi) in cols.iter().zip(y) {
        let r = yi - (coef[0] * row[0] + coef[1] * row[1] + coef[2] * row[2]);
        ss += r * r;
    }
    (coef[0], coef[1], (ss / n).sqrt())
}

fn solve3(mut a: [[f64; 3]; 3], mut b: [f64; 3]) -> [f64; 3] {
    for col in 0..3 {
        let piv = (col..3).max_by(|&i, &j| a[i][col].abs().total_cmp(&a[j][col].abs())).unwrap();
        a.swap(col, piv);
        b.swap(col, piv);
        for row in col + 1..3 {
            let m = a[row][col] / a[col][col];
            for k in col..3 {
                a[row][k] -= m * a[col][k];
            }
            b[row] -= m * b[col];
        }
    }
    let mut x = [0.0; 3];
    for row in (0..3).rev() {
        let mut s = b[row];
        for k in row + 1..3 {
            s -= a[row][k] * x[k];
        }
        x[row] = s / a[row][row];
    }
    x
}
