//! Integral and growth conditions on `(f, g, p, n)`.
//!
//! Integral conditions return a [`ConvergenceVerdict`] for an integral over
//! `[1, inf)`; "Diverges" is the form in which most of them are stated as
//! hypotheses. Growth conditions return a [`GrowthConditionReport`].

use serde::ser::SerializeStruct;
use serde::{Deserialize, Serialize, Serializer};

use crate::error::{Error, Result};
use crate::integrals::{classify_improper, ConvergenceVerdict, Evidence, Integrand, Method, Verdict};
use crate::nonlinearity::{DerivedFunctions, Growth, GrowthExpr, Primitive, EXPONENT_EPS};

/// Verdict for an integral whose integrand is `+inf` (zero denominator).
fn trivially(verdict: Verdict, alpha: f64) -> ConvergenceVerdict {
    ConvergenceVerdict { verdict, method: Method::Symbolic, evidence: Evidence::Symbolic { alpha, beta: 0.0 } }
}

fn check_p(p: f64) -> Result<()> {
    if p > 1.0 && p.is_finite() {
        Ok(())
    } else {
        Err(Error::InvalidSpec(format!("p must exceed 1, got {p}")))
    }
}

/// Integrand of `integral F(s)^{-1/p} ds`.
pub fn ko_f_integrand<'a>(f: &GrowthExpr, prim: &'a Primitive, p: f64) -> Integrand<'a> {
    let sig = f.asymptotic_signature().ok().map(|s| s.integrate().pow(-1.0 / p));
    Integrand::new(sig, move |u| -prim.ln_value(u) / p)
}

/// Integrand `s^shift / g(s)`.
pub fn power_over_g_integrand(g: &GrowthExpr, shift: f64) -> Integrand<'_> {
    let sig = g.asymptotic_signature().ok().map(|s| Growth::new(shift - s.power, -s.log));
    Integrand::new(sig, move |u| shift * u - g.ln_value(u))
}

/// Integrand `1 / Gamma^{-1}(F(s))`.
pub fn gamma_integrand(d: &DerivedFunctions) -> Integrand<'_> {
    let p = d.p;
    let sig = match (d.f().asymptotic_signature(), d.g()) {
        (Ok(fs), g) if g.is_zero() => Some(Growth::power(p).inverse().compose(fs.integrate()).recip()),
        (Ok(fs), g) => g.asymptotic_signature().ok().map(|gs| {
            let gamma = gs.integrate().dominant(Growth::power(p));
            gamma.inverse().compose(fs.integrate()).recip()
        }),
        _ => None,
    };
    Integrand::new(sig, move |u| match d.ln_gamma_inv(d.ln_big_f(u)) {
        Ok(x) => -x,
        Err(_) => f64::NAN,
    })
}

/// Integrand `1 / g^{-1}(f(s))`.
pub fn ginv_f_integrand(d: &DerivedFunctions) -> Integrand<'_> {
    let sig = match (d.f().asymptotic_signature(), d.g().asymptotic_signature()) {
        (Ok(fs), Ok(gs)) => Some(gs.inverse().compose(fs).recip()),
        _ => None,
    };
    Integrand::new(sig, move |u| match d.ln_g_inv(d.f().ln_value(u)) {
        Ok(x) => -x,
        Err(_) => f64::NAN,
    })
}

/// `integral_1^inf F(s)^{-1/p} ds`.
pub fn ko_f(f: &GrowthExpr, p: f64) -> Result<ConvergenceVerdict> {
    check_p(p)?;
    if f.is_zero() {
        return Ok(trivially(Verdict::Diverges, f64::INFINITY));
    }
    let prim = Primitive::new(f)?;
    let phi = ko_f_integrand(f, &prim, p);
    classify_improper(&phi, 1.0)
}

fn power_over_g(g: &GrowthExpr, p: f64, shift: f64) -> Result<ConvergenceVerdict> {
    check_p(p)?;
    if g.is_zero() {
        return Ok(trivially(Verdict::Diverges, f64::INFINITY));
    }
    classify_improper(&power_over_g_integrand(g, shift), 1.0)
}

/// `integral_1^inf s^{p-2} / g(s) ds`.
pub fn ko_g(g: &GrowthExpr, p: f64) -> Result<ConvergenceVerdict> {
    power_over_g(g, p, p - 2.0)
}

/// `integral_1^inf s^{p-1} / g(s) ds`. Converges when `v` stays bounded at a
/// blow-up radius.
pub fn v_bounded_at_blowup(g: &GrowthExpr, p: f64) -> Result<ConvergenceVerdict> {
    power_over_g(g, p, p - 1.0)
}

/// `integral_1^inf s^{2(p-1)} / g(s) ds`.
pub fn sobolev_exclusion(g: &GrowthExpr, p: f64) -> Result<ConvergenceVerdict> {
    power_over_g(g, p, 2.0 * (p - 1.0))
}

/// `integral_1^inf ds / Gamma^{-1}(F(s))`.
pub fn gamma_condition(f: &GrowthExpr, g: &GrowthExpr, p: f64, n: u32) -> Result<ConvergenceVerdict> {
    check_p(p)?;
    if f.is_zero() {
        return Ok(trivially(Verdict::Diverges, f64::INFINITY));
    }
    let d = DerivedFunctions::new(f, g, p, n)?;
    let phi = gamma_integrand(&d);
    classify_improper(&phi, 1.0)
}

/// `(integral F^{-1/p}, integral ds / g^{-1}(f(s)))`.
pub fn pminus_existence(
    f: &GrowthExpr,
    g: &GrowthExpr,
    p: f64,
) -> Result<(ConvergenceVerdict, ConvergenceVerdict)> {
    let first = ko_f(f, p)?;
    let second = if g.is_zero() {
        trivially(Verdict::Converges, f64::NEG_INFINITY)
    } else if f.is_zero() {
        trivially(Verdict::Diverges, f64::INFINITY)
    } else {
        let d = DerivedFunctions::new(f, g, p, 1)?;
        let phi = ginv_f_integrand(&d);
        classify_improper(&phi, 1.0)?
    };
    Ok((first, second))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum GrowthKind {
    /// `liminf g(A F^{1/p}) / (A^p f) > 1/p` (for `p <= 2`).
    Liminf,
    /// `limsup g(A F^{1/p}) / (A^p f) < 1/p` (for `p >= 2`).
    Limsup,
    /// `limsup g(s) / s^{p-1} < inf`.
    GrowthCap,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum GrowthVerdict {
    Holds,
    Fails,
    Inconclusive,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GrowthConditionReport {
    pub kind: GrowthKind,
    pub method: Method,
    pub a_values: Vec<f64>,
    pub s_values: Vec<f64>,
    pub ratio_samples: Vec<Vec<f64>>,
    pub estimated_limit: Vec<f64>,
    pub per_a_verdict: Vec<GrowthVerdict>,
    pub eps0: f64,
    pub verdict: GrowthVerdict,
}

#[derive(Debug, Clone)]
pub struct GrowthRatioOptions {
    pub a_grid: Vec<f64>,
    pub s_grid: Vec<f64>,
    pub eps0: f64,
}

impl Default for GrowthRatioOptions {
    fn default() -> Self {
        Self { a_grid: vec![1.0, 2.0, 4.0, 8.0], s_grid: log_grid(1.0, 1e8, 10), eps0: 0.01 }
    }
}

/// `lo, ..., hi` with `per_decade` points per factor of ten.
pub fn log_grid(lo: f64, hi: f64, per_decade: usize) -> Vec<f64> {
    let decades = (hi / lo).log10();
    let n = (decades * per_decade as f64).round() as usize;
    (0..=n).map(|i| lo * 10f64.powf(decades * i as f64 / n as f64)).collect()
}

fn joint(verdicts: &[GrowthVerdict]) -> GrowthVerdict {
    if verdicts.iter().any(|v| *v == GrowthVerdict::Fails) {
        GrowthVerdict::Fails
    } else if verdicts.iter().all(|v| *v == GrowthVerdict::Holds) {
        GrowthVerdict::Holds
    } else {
        GrowthVerdict::Inconclusive
    }
}

/// Samples `g(A F(s)^{1/p}) / (A^p f(s))` and compares its tail extremum with
/// `1/p`. The tail is the last decade of the grid.
pub fn growth_ratio(
    f: &GrowthExpr,
    g: &GrowthExpr,
    p: f64,
    kind: GrowthKind,
    opts: &GrowthRatioOptions,
) -> Result<GrowthConditionReport> {
    check_p(p)?;
    if kind == GrowthKind::GrowthCap {
        return Err(Error::Precondition("growth_ratio handles the liminf and limsup conditions only".into()));
    }
    if opts.a_grid.is_empty() || opts.s_grid.is_empty() {
        return Err(Error::Precondition("A grid and s grid must be nonempty".into()));
    }
    if opts.s_grid.windows(2).any(|w| !(w[1] > w[0])) || !(opts.s_grid[0] > 0.0) {
        return Err(Error::Precondition("s grid must be positive and increasing".into()));
    }
    let s_max = *opts.s_grid.last().unwrap();
    if s_max < 1e8 * (1.0 - 1e-12) {
        return Err(Error::Precondition(format!("s grid must reach 1e8, ends at {s_max}")));
    }
    if opts.a_grid.iter().any(|a| !(*a > 0.0)) {
        return Err(Error::Precondition("A values must be positive".into()));
    }
    let prim = Primitive::new(f)?;
    let tail_start = s_max / 10.0 * (1.0 - 1e-12);
    let threshold = 1.0 / p;
    let mut ratio_samples = Vec::new();
    let mut estimated_limit = Vec::new();
    let mut per_a_verdict = Vec::new();
    for &a in &opts.a_grid {
        let la = a.ln();
        let series: Vec<f64> = opts
            .s_grid
            .iter()
            .map(|&s| {
                let u = s.ln();
                (g.ln_value(la + prim.ln_value(u) / p) - p * la - f.ln_value(u)).exp()
            })
            .collect();
        let tail = opts.s_grid.iter().zip(&series).filter(|(s, _)| **s >= tail_start).map(|(_, r)| *r);
        let est = match kind {
            GrowthKind::Liminf => tail.fold(f64::INFINITY, f64::min),
            _ => tail.fold(f64::NEG_INFINITY, f64::max),
        };
        let v = match kind {
            GrowthKind::Liminf if est > threshold + opts.eps0 => GrowthVerdict::Holds,
            GrowthKind::Liminf if est < threshold - opts.eps0 => GrowthVerdict::Fails,
            GrowthKind::Limsup if est < threshold - opts.eps0 => GrowthVerdict::Holds,
            GrowthKind::Limsup if est > threshold + opts.eps0 => GrowthVerdict::Fails,
            _ => GrowthVerdict::Inconclusive,
        };
        if est.is_nan() {
            return Err(Error::NonFinite { at: s_max });
        }
        ratio_samples.push(series);
        estimated_limit.push(est);
        per_a_verdict.push(v);
    }
    Ok(GrowthConditionReport {
        kind,
        method: Method::NumericTrend,
        a_values: opts.a_grid.clone(),
        s_values: opts.s_grid.clone(),
        ratio_samples,
        estimated_limit,
        verdict: joint(&per_a_verdict),
        per_a_verdict,
        eps0: opts.eps0,
    })
}

/// Slope of `ln(g(s) / s^{p-1})` against `ln s` above which the cap fails.
const CAP_FAIL_SLOPE: f64 = 0.03;
const CAP_HOLD_SLOPE: f64 = 0.01;

/// `limsup g(s) / s^{p-1} < inf`.
pub fn growth_cap(g: &GrowthExpr, p: f64) -> Result<GrowthConditionReport> {
    check_p(p)?;
    let s_values = log_grid(1e6, 1e8, 10);
    let ratio: Vec<f64> = s_values.iter().map(|&s| (g.ln_value(s.ln()) - (p - 1.0) * s.ln()).exp()).collect();
    let (method, verdict, estimate) = if g.is_zero() {
        (Method::Symbolic, GrowthVerdict::Holds, 0.0)
    } else if let Ok(sig) = g.asymptotic_signature() {
        let excess = sig.power - (p - 1.0);
        let holds = excess < -EXPONENT_EPS || (excess.abs() <= EXPONENT_EPS && sig.log <= EXPONENT_EPS);
        let v = if holds { GrowthVerdict::Holds } else { GrowthVerdict::Fails };
        (Method::Symbolic, v, excess)
    } else {
        let xs: Vec<f64> = s_values.iter().map(|s| s.ln()).collect();
        let ys: Vec<f64> = ratio.iter().map(|r| r.ln()).collect();
        if ys.iter().any(|y| y.is_nan()) {
            return Err(Error::NonFinite { at: 1e8 });
        }
        let slope = linear_slope(&xs, &ys);
        let v = if slope <= CAP_HOLD_SLOPE {
            GrowthVerdict::Holds
        } else if slope >= CAP_FAIL_SLOPE {
            GrowthVerdict::Fails
        } else {
            GrowthVerdict::Inconclusive
        };
        (Method::NumericTrend, v, slope)
    };
    Ok(GrowthConditionReport {
        kind: GrowthKind::GrowthCap,
        method,
        a_values: Vec::new(),
        s_values,
        ratio_samples: vec![ratio],
        estimated_limit: vec![estimate],
        per_a_verdict: vec![verdict],
        eps0: 0.0,
        verdict,
    })
}

pub(crate) fn linear_slope(x: &[f64], y: &[f64]) -> f64 {
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let sxy: f64 = x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).sum();
    let sxx: f64 = x.iter().map(|a| (a - mx) * (a - mx)).sum();
    sxy / sxx
}

/// One named entry of a condition battery.
#[derive(Debug, Clone, PartialEq)]
pub enum ConditionOutcome {
    Integral(ConvergenceVerdict),
    Growth(GrowthConditionReport),
}

#[derive(Debug, Clone, PartialEq)]
pub struct ConditionReport {
    pub condition: String,
    pub outcome: ConditionOutcome,
}

impl ConditionReport {
    pub fn integral(name: &str, v: ConvergenceVerdict) -> Self {
        Self { condition: name.to_string(), outcome: ConditionOutcome::Integral(v) }
    }

    pub fn growth(name: &str, r: GrowthConditionReport) -> Self {
        Self { condition: name.to_string(), outcome: ConditionOutcome::Growth(r) }
    }

    pub fn verdict_label(&self) -> &'static str {
        match &self.outcome {
            ConditionOutcome::Integral(v) => match v.verdict {
                Verdict::Diverges => "Diverges",
                Verdict::Converges => "Converges",
                Verdict::Inconclusive => "Inconclusive",
            },
            ConditionOutcome::Growth(r) => match r.verdict {
                GrowthVerdict::Holds => "Holds",
                GrowthVerdict::Fails => "Fails",
                GrowthVerdict::Inconclusive => "Inconclusive",
            },
        }
    }

    pub fn is_inconclusive(&self) -> bool {
        self.verdict_label() == "Inconclusive"
    }

    pub fn method(&self) -> Method {
        match &self.outcome {
            ConditionOutcome::Integral(v) => v.method,
            ConditionOutcome::Growth(r) => r.method,
        }
    }
}

impl Serialize for ConditionReport {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        let mut st = s.serialize_struct("ConditionReport", 4)?;
        st.serialize_field("condition", &self.condition)?;
        st.serialize_field("verdict", self.verdict_label())?;
        st.serialize_field("method", &self.method())?;
        match &self.outcome {
            ConditionOutcome::Integral(v) => st.serialize_field("evidence", &v.evidence)?,
            ConditionOutcome::Growth(r) => st.serialize_field("evidence", r)?,
        }
        st.end()
    }
}

/// Every condition, in a fixed order. The liminf condition is included for
/// `p <= 2`, the limsup condition for `p >= 2`.
pub fn check_all(
    f: &GrowthExpr,
    g: &GrowthExpr,
    p: f64,
    n: u32,
    ratio_opts: &GrowthRatioOptions,
) -> Result<Vec<ConditionReport>> {
    let mut out = vec![
        ConditionReport::integral("ko_f", ko_f(f, p)?),
        ConditionReport::integral("ko_g", ko_g(g, p)?),
    ];
    if p <= 2.0 {
        out.push(ConditionReport::growth("growth_liminf", growth_ratio(f, g, p, GrowthKind::Liminf, ratio_opts)?));
    }
    if p >= 2.0 {
        out.push(ConditionReport::growth("growth_limsup", growth_ratio(f, g, p, GrowthKind::Limsup, ratio_opts)?));
    }
    out.push(ConditionReport::integral("gamma_condition", gamma_condition(f, g, p, n)?));
    let (a, b) = pminus_existence(f, g, p)?;
    out.push(ConditionReport::integral("pminus_ko_f", a));
    out.push(ConditionReport::integral("pminus_ginv_f", b));
    out.push(ConditionReport::integral("v_bounded_at_blowup", v_bounded_at_blowup(g, p)?));
    out.push(ConditionReport::integral("sobolev_exclusion", sobolev_exclusion(g, p)?));
    out.push(ConditionReport::growth("growth_cap", growth_cap(g, p)?));
    Ok(out)
}
