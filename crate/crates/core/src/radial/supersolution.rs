//! Blow-up super-solution `vbar(r) = phi(R^{p/(p-1)} - r^{p/(p-1)})` for the
//! minus problem, where `phi` is defined implicitly by
//! `integral_{phi(t)}^inf ds / Gamma^{-1}(F(s)) = t`.

use serde::Serialize;

use super::spec::ProblemSpec;
use crate::conditions::gamma_condition;
use crate::error::{Error, Result};
use crate::integrals::quad::gl10_points;
use crate::nonlinearity::expr::{log_add_exp, log_sum_exp};
use crate::nonlinearity::{DerivedFunctions, GrowthExpr};

/// Table spacing in `ln phi`.
const DU: f64 = 0.019_802_627_296_179_712; // ln 1.02
/// The tail beyond the last panel must be below this fraction of the total.
const TAIL_REL: f64 = 1e-16;
/// Nodes are kept only where the tail bound is below this fraction of `t`.
const NODE_REL: f64 = 1e-10;
/// Panels inspected for geometric decay.
const DECAY_WINDOW: usize = 10;
/// Give up on the tail after this many units of `ln phi`.
const MAX_LOG_SPAN: f64 = 1500.0;
const ROUND_TRIP_TOL: f64 = 1e-14;

#[derive(Debug, Clone, Copy, Serialize)]
pub struct PhiNode {
    pub t: f64,
    pub phi: f64,
    /// `|phi'(t)| = Gamma^{-1}(F(phi))`.
    pub dphi_abs: f64,
    /// `phi''(t) = f(phi) |phi'| / Gamma'(|phi'|)`.
    pub d2phi: f64,
}

#[derive(Debug, Clone)]
pub struct Supersolution {
    pub p: f64,
    pub n: u32,
    /// Ball radius actually used.
    pub radius: f64,
    pub radius_requested: f64,
    /// Set when the requested radius exceeded `((p-1)/p)^{p-1}`.
    pub radius_clamped: bool,
    /// `vbar(0) = phi(R^{p/(p-1)})`.
    pub vbar0: f64,
    /// Nodes with increasing `phi` and decreasing `t`.
    pub nodes: Vec<PhiNode>,
    /// Bound on `integral` beyond the last panel.
    pub tail_bound: f64,
    /// Largest `|ln Gamma(|phi'|) - ln F(phi)|` over the nodes.
    pub gamma_identity_defect: f64,
    derived: DerivedFunctions,
}

/// Largest admissible ball radius, `((p-1)/p)^{p-1}`.
pub fn max_radius(p: f64) -> f64 {
    ((p - 1.0) / p).powf(p - 1.0)
}

fn ln_psi(d: &DerivedFunctions, u: f64) -> Result<f64> {
    Ok(u - d.ln_gamma_inv(d.ln_big_f(u))?)
}

/// `ln integral_{a}^{b} exp(ln_psi(u)) du` by one Gauss panel.
fn ln_panel(d: &DerivedFunctions, a: f64, b: f64) -> Result<f64> {
    if b <= a {
        return Ok(f64::NEG_INFINITY);
    }
    let mut vals = Vec::with_capacity(10);
    for (x, w) in gl10_points(a, b) {
        vals.push(ln_psi(d, x)? + w.ln());
    }
    Ok(log_sum_exp(vals.into_iter()))
}

/// Builds the profile table for ball radius `radius` (default and upper
/// limit `((p-1)/p)^{p-1}`).
pub fn build_supersolution(
    f: &GrowthExpr,
    g: &GrowthExpr,
    p: f64,
    n: u32,
    radius: Option<f64>,
) -> Result<Supersolution> {
    let verdict = gamma_condition(f, g, p, n)?;
    if !verdict.converges() {
        return Err(Error::ConditionNotMet(format!(
            "integral of 1/Gamma^{{-1}}(F(s)) is {:?}, a super-solution needs it to converge",
            verdict.verdict
        )));
    }
    let r_cap = max_radius(p);
    let radius_requested = radius.unwrap_or(r_cap);
    if !(radius_requested > 0.0) {
        return Err(Error::InvalidSpec(format!("ball radius must be positive, got {radius_requested}")));
    }
    let radius_clamped = radius_requested > r_cap;
    let r_ball = radius_requested.min(r_cap);
    let t_ball = r_ball.powf(p / (p - 1.0));
    let d = DerivedFunctions::new(f, g, p, n)?;

    // Panels upward from ln phi = 0 until the tail is negligible.
    let u_base = 0.0;
    let mut ln_panels: Vec<f64> = Vec::new();
    let mut ln_total = f64::NEG_INFINITY;
    let ln_tail;
    loop {
        let k = ln_panels.len();
        let a = u_base + k as f64 * DU;
        if a - u_base > MAX_LOG_SPAN {
            return Err(Error::TailError(format!("no geometric decay of the integrand up to ln phi = {a}")));
        }
        let lp = ln_panel(&d, a, a + DU)?;
        ln_panels.push(lp);
        ln_total = log_add_exp(ln_total, lp);
        if k >= DECAY_WINDOW {
            let recent = &ln_panels[k - DECAY_WINDOW..=k];
            let diffs: Vec<f64> = recent.windows(2).map(|w| w[1] - w[0]).collect();
            let hi = diffs.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
            let lo = diffs.iter().cloned().fold(f64::INFINITY, f64::min);
            // Ratio bound padded by its recent drift.
            let ln_q = hi + (hi - lo);
            if ln_q < 0.0 && hi - lo < 0.01 * hi.abs() {
                // sum_{i>=1} q^i P = P q / (1 - q)
                let lt = lp + ln_q - (-ln_q.exp_m1()).ln();
                if lt - ln_total < TAIL_REL.ln() {
                    ln_tail = lt;
                    break;
                }
            }
        }
    }

    // Extend downward until t covers the ball.
    let mut below: Vec<f64> = Vec::new();
    let mut ln_t_bottom = ln_total;
    while ln_t_bottom < t_ball.ln() {
        let k = below.len() + 1;
        let b = u_base - (k - 1) as f64 * DU;
        if b - u_base < -MAX_LOG_SPAN {
            return Err(Error::Precondition(format!(
                "integral from 0 is below t = {t_ball}; the ball radius is too large"
            )));
        }
        let lp = ln_panel(&d, b - DU, b)?;
        below.push(lp);
        ln_t_bottom = log_add_exp(ln_t_bottom, lp);
    }
    let u_lo = u_base - below.len() as f64 * DU;
    let mut all: Vec<f64> = below.into_iter().rev().collect();
    all.extend(ln_panels);

    // Suffix sums from the top: ln t at the left end of every panel.
    let mut ln_t = vec![0.0; all.len() + 1];
    ln_t[all.len()] = ln_tail;
    for j in (0..all.len()).rev() {
        ln_t[j] = log_add_exp(ln_t[j + 1], all[j]);
    }
    // Keep nodes from the last one with t >= t_ball, up to where the tail
    // is still negligible against t.
    let first = ln_t.iter().rposition(|&lt| lt >= t_ball.ln()).unwrap_or(0);
    let last = ln_t.iter().rposition(|&lt| ln_tail - lt < NODE_REL.ln()).unwrap_or(0);
    if last <= first + 2 {
        return Err(Error::TailError("tail bound leaves too few accurate nodes".into()));
    }
    let mut nodes = Vec::with_capacity(last - first + 1);
    let mut gamma_identity_defect: f64 = 0.0;
    for (j, &lt) in ln_t.iter().enumerate().take(last + 1).skip(first) {
        let u = u_lo + j as f64 * DU;
        let ln_big_f = d.ln_big_f(u);
        let ln_dphi = d.ln_gamma_inv(ln_big_f)?;
        gamma_identity_defect = gamma_identity_defect.max((d.ln_gamma(ln_dphi) - ln_big_f).abs());
        let phi = u.exp();
        let dphi_abs = ln_dphi.exp();
        let d2phi = f.value(phi) * dphi_abs / d.gamma_prime(dphi_abs);
        nodes.push(PhiNode { t: lt.exp(), phi, dphi_abs, d2phi });
    }

    let mut ss = Supersolution {
        p,
        n,
        radius: r_ball,
        radius_requested,
        radius_clamped,
        vbar0: f64::NAN,
        nodes,
        tail_bound: ln_tail.exp(),
        gamma_identity_defect,
        derived: d,
    };
    ss.vbar0 = ss.phi_of(t_ball)?;
    Ok(ss)
}

impl Supersolution {
    fn u_of_node(&self, j: usize) -> f64 {
        self.nodes[j].phi.ln()
    }

    /// `t(phi) = integral_phi^inf ds / Gamma^{-1}(F(s))` for `phi` within the table.
    pub fn t_of(&self, phi: f64) -> Result<f64> {
        let u = phi.ln();
        let (lo, hi) = (self.u_of_node(0), self.u_of_node(self.nodes.len() - 1));
        if !(u >= lo && u <= hi) {
            return Err(Error::Range { y: phi, lo: lo.exp(), hi: hi.exp() });
        }
        let j = self.nodes.partition_point(|nd| nd.phi <= phi).min(self.nodes.len() - 1).max(1);
        let partial = ln_panel(&self.derived, u, self.u_of_node(j))?;
        Ok(self.nodes[j].t + partial.exp())
    }

    /// Inverse of [`Supersolution::t_of`] on the table range.
    pub fn phi_of(&self, t: f64) -> Result<f64> {
        let last = self.nodes.len() - 1;
        if !(t <= self.nodes[0].t && t >= self.nodes[last].t) {
            return Err(Error::Range { y: t, lo: self.nodes[last].t, hi: self.nodes[0].t });
        }
        // nodes[j].t >= t > nodes[j+1].t
        let j = self.nodes.partition_point(|nd| nd.t >= t).saturating_sub(1).min(last - 1);
        let (mut a, mut b) = (self.u_of_node(j), self.u_of_node(j + 1));
        let mut x = a + (b - a) * (self.nodes[j].t - t) / (self.nodes[j].t - self.nodes[j + 1].t);
        for _ in 0..100 {
            let tx = self.t_of(x.exp())?;
            let diff = tx - t;
            if diff.abs() <= ROUND_TRIP_TOL * t {
                return Ok(x.exp());
            }
            if diff > 0.0 {
                a = x;
            } else {
                b = x;
            }
            // dt/du = -psi(u)
            let step = diff / ln_psi(&self.derived, x)?.exp();
            let next = x + step;
            x = if next > a && next < b { next } else { 0.5 * (a + b) };
            if b - a <= 4.0 * f64::EPSILON * x.abs().max(1.0) {
                return Ok(x.exp());
            }
        }
        Err(Error::NoConvergence { iterations: 100, distance: b - a })
    }

    /// `vbar(r)`; infinite at and beyond the ball radius.
    pub fn vbar(&self, r: f64) -> Result<f64> {
        if r >= self.radius {
            return Ok(f64::INFINITY);
        }
        let q = self.p / (self.p - 1.0);
        self.phi_of(self.radius.powf(q) - r.abs().powf(q))
    }

    /// Largest `|t(phi(t)) - t| / t` over `samples` log-spaced values of `t`
    /// across the table.
    pub fn round_trip_error(&self, samples: usize) -> Result<f64> {
        let t_hi = self.nodes[0].t;
        let t_lo = self.nodes[self.nodes.len() - 1].t;
        let mut worst: f64 = 0.0;
        for k in 0..samples {
            let frac = (k as f64 + 0.5) / samples as f64;
            let t = (t_lo.ln() + frac * (t_hi.ln() - t_lo.ln())).exp();
            let phi = self.phi_of(t)?;
            worst = worst.max((self.t_of(phi)? - t).abs() / t);
        }
        Ok(worst)
    }

    /// Index of the first node from which on `phi <= |phi'| / 2` holds.
    pub fn window_start(&self) -> Option<usize> {
        let last_bad = self.nodes.iter().rposition(|nd| nd.phi > 0.5 * nd.dphi_abs);
        match last_bad {
            None => Some(0),
            Some(j) if j + 1 < self.nodes.len() => Some(j + 1),
            Some(_) => None,
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct SupersolutionReport {
    /// Smallest `f(phi) - LHS` over the checked nodes.
    pub min_slack: f64,
    /// Smallest `(f(phi) - LHS) / f(phi)`.
    pub min_relative_slack: f64,
    pub at_phi: f64,
    pub nodes_checked: usize,
    /// Upper end of the validity window in `t`.
    pub window_eps: f64,
    /// Whether `R^{p/(p-1)}` lies inside the window.
    pub ball_inside_window: bool,
    /// `|phi'| / phi` at the first and last table node; it should grow.
    pub ratio_first: f64,
    pub ratio_last: f64,
    pub ratio_increasing: bool,
}

/// Checks `|phi'|^{p-2} phi'' + (p/(p-1))^{p-1} n |phi'|^{p-1} + g(|phi'|) <= f(phi)`
/// at interior table nodes inside the window where `phi <= |phi'| / 2`,
/// with `f` and `g` taken from `spec`.
pub fn verify_supersolution(ss: &Supersolution, spec: &ProblemSpec) -> Result<SupersolutionReport> {
    if spec.p != ss.p || spec.n != ss.n {
        return Err(Error::Precondition("super-solution was built for a different p or n".into()));
    }
    let start = ss.window_start().ok_or(Error::WindowEmpty)?;
    let last = ss.nodes.len() - 1;
    let p = ss.p;
    let coef = (p / (p - 1.0)).powf(p - 1.0) * ss.n as f64;
    let mut report = SupersolutionReport {
        min_slack: f64::INFINITY,
        min_relative_slack: f64::INFINITY,
        at_phi: f64::NAN,
        nodes_checked: 0,
        window_eps: ss.nodes[start].t,
        ball_inside_window: ss.radius.powf(p / (p - 1.0)) <= ss.nodes[start].t,
        ratio_first: ss.nodes[0].dphi_abs / ss.nodes[0].phi,
        ratio_last: ss.nodes[last].dphi_abs / ss.nodes[last].phi,
        ratio_increasing: ss.nodes.windows(2).all(|w| w[1].dphi_abs / w[1].phi > w[0].dphi_abs / w[0].phi),
    };
    for nd in &ss.nodes[start.max(1)..last] {
        let a = nd.dphi_abs;
        let lhs = a.powf(p - 2.0) * nd.d2phi + coef * a.powf(p - 1.0) + spec.g.value(a);
        let fv = spec.f.value(nd.phi);
        let slack = fv - lhs;
        report.nodes_checked += 1;
        report.min_relative_slack = report.min_relative_slack.min(slack / fv);
        if slack < report.min_slack {
            report.min_slack = slack;
            report.at_phi = nd.phi;
        }
    }
    if report.nodes_checked == 0 {
        return Err(Error::WindowEmpty);
    }
    Ok(report)
}
