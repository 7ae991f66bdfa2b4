//! Post-hoc checks on radial solutions: sign and convexity properties, the
//! residual of the radial operator, the identity for `A'`, and the
//! exponential test solution.

use serde::Serialize;

use super::spec::{ProblemSpec, Sign};
use super::trajectory::{Node, RadialTrajectory};
use crate::error::{Error, Result};
use crate::nonlinearity::Primitive;

/// Absolute slack for the affine bound.
const AFFINE_SLACK: f64 = 1e-8;
/// Relative slack for the second difference, against `max |v|`.
const CONVEXITY_SLACK: f64 = 1e-8;
/// Relative slack on `g(v') <= f(v)`; along a slow manifold the two agree to
/// rounding of their logarithms.
const SIGN_SLACK: f64 = 1e-10;

#[derive(Debug, Clone, Serialize)]
pub struct PropertyCheck {
    pub property: &'static str,
    pub passed: bool,
    /// Smallest margin seen; negative exactly when the property fails.
    pub worst_margin: f64,
    pub at_r: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct AprioriReport {
    pub checks: Vec<PropertyCheck>,
    pub passed: bool,
}

impl AprioriReport {
    pub fn get(&self, property: &str) -> Option<&PropertyCheck> {
        self.checks.iter().find(|c| c.property == property)
    }
}

struct Worst {
    margin: f64,
    at_r: f64,
}

impl Worst {
    fn new() -> Self {
        Self { margin: f64::INFINITY, at_r: f64::NAN }
    }

    fn see(&mut self, margin: f64, r: f64) {
        // NaN margins count as failures.
        if !(margin >= self.margin) {
            self.margin = if margin.is_nan() { f64::NEG_INFINITY } else { margin };
            self.at_r = r;
        }
    }

    fn into_check(self, property: &'static str, tolerance: f64) -> PropertyCheck {
        PropertyCheck { property, passed: self.margin >= -tolerance, worst_margin: self.margin, at_r: self.at_r }
    }
}

/// `v > 0`, `v' > 0` at interior nodes, nonnegative second differences and
/// `v(r) <= v0 + r_max v'(r)`; for the minus sign also `f(v) >= g(v')`.
///
/// Margins are relative where the quantities can overflow: the affine and
/// sign margins are `1 - lhs / rhs`, the convexity margin is the undivided
/// second difference over `max |v|`. Where consecutive radii agree to about
/// six digits the second difference is replaced by the increment of `ln v'`.
pub fn apriori_check(traj: &RadialTrajectory, spec: &ProblemSpec) -> AprioriReport {
    let nodes = &traj.nodes;
    let mut positive = Worst::new();
    let mut increasing = Worst::new();
    let mut convex = Worst::new();
    let mut affine = Worst::new();
    let mut sign = Worst::new();
    let ln_vmax = nodes.iter().map(|n| n.ln_v).fold(f64::NEG_INFINITY, f64::max);
    let scaled = |nd: &Node| (nd.ln_v - ln_vmax).exp();

    for (i, nd) in nodes.iter().enumerate() {
        positive.see(if nd.ln_v.is_nan() { f64::NAN } else { nd.v }, nd.r);
        if i > 0 {
            increasing.see(if nd.ln_dv.is_nan() { f64::NAN } else { nd.dv }, nd.r);
        }
        if i > 0 && i + 1 < nodes.len() {
            let (a, b) = (&nodes[i - 1], &nodes[i + 1]);
            if (nd.r / a.r).ln() >= MIN_LOG_SPACING && (b.r / nd.r).ln() >= MIN_LOG_SPACING {
                let ratio = (b.r - nd.r) / (nd.r - a.r);
                let d2 = (scaled(b) - scaled(nd)) - ratio * (scaled(nd) - scaled(a));
                convex.see(d2, nd.r);
            } else {
                // Too close in r for a second difference: v' must not decrease.
                convex.see((nd.ln_dv - a.ln_dv).min(b.ln_dv - nd.ln_dv), nd.r);
            }
        }
        // ln(v0 + r_max v' + slack) without overflow
        let ln_rhs = {
            let terms = [spec.v0.ln(), traj.r_max.ln() + nd.ln_dv, AFFINE_SLACK.ln()];
            let m = terms.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
            m + terms.iter().map(|t| (t - m).exp()).sum::<f64>().ln()
        };
        affine.see(-(nd.ln_v - ln_rhs).exp_m1(), nd.r);
        if spec.sign == Sign::Minus {
            let lnf = spec.f.ln_value(nd.ln_v);
            let lng = spec.g.ln_value(nd.ln_dv);
            sign.see(-(lng - lnf).exp_m1(), nd.r);
        }
    }
    let mut checks = vec![
        positive.into_check("v_positive", 0.0),
        increasing.into_check("dv_positive", 0.0),
        convex.into_check("convex", CONVEXITY_SLACK),
        affine.into_check("affine_bound", 0.0),
    ];
    // `> 0` is strict for the first two.
    for c in checks.iter_mut().take(2) {
        c.passed = c.worst_margin > 0.0;
    }
    if spec.sign == Sign::Minus {
        checks.push(sign.into_check("f_minus_g_nonnegative", SIGN_SLACK));
    }
    let passed = checks.iter().all(|c| c.passed);
    AprioriReport { checks, passed }
}

/// Largest `|(r^{n-1} |v'|^{p-2} v')' - r^{n-1} (f(v) +- g(|v'|))|` over
/// `r_grid`, with both derivatives taken by centered differences of step `h`.
pub fn residual<V: Fn(f64) -> f64>(spec: &ProblemSpec, v: V, r_grid: &[f64], h: f64) -> f64 {
    let p = spec.p;
    let nm1 = spec.n as f64 - 1.0;
    let dv = |r: f64| (v(r + h) - v(r - h)) / (2.0 * h);
    let flux = |r: f64| {
        let d = dv(r);
        r.powf(nm1) * d.signum() * d.abs().powf(p - 1.0)
    };
    r_grid
        .iter()
        .map(|&r| {
            let lhs = (flux(r + h) - flux(r - h)) / (2.0 * h);
            let rhs = r.powf(nm1) * spec.rhs(v(r), dv(r).abs());
            (lhs - rhs).abs()
        })
        .fold(0.0, f64::max)
}

/// Derivative at `xs[c]` of the interpolating polynomial through `(xs, ys)`.
fn lagrange_derivative(xs: &[f64], ys: &[f64], c: usize) -> f64 {
    let x0 = xs[c];
    let mut total = 0.0;
    for j in 0..xs.len() {
        let w = if j == c {
            (0..xs.len()).filter(|&k| k != c).map(|k| 1.0 / (x0 - xs[k])).sum::<f64>()
        } else {
            let mut w = 1.0 / (xs[j] - xs[c]);
            for k in 0..xs.len() {
                if k != j && k != c {
                    w *= (x0 - xs[k]) / (xs[j] - xs[k]);
                }
            }
            w
        };
        total += w * ys[j];
    }
    total
}

const STENCIL_HALF: usize = 3;
/// Stencils with a spacing in `ln r` below this are skipped: rounding of `r`
/// itself would dominate the difference quotients.
const MIN_LOG_SPACING: f64 = 1e-5;

fn resolved(nodes: &[Node], i: usize) -> bool {
    let win = &nodes[i - STENCIL_HALF..=i + STENCIL_HALF];
    win[0].r > 0.0 && win.windows(2).all(|w| (w[1].r / w[0].r).ln() >= MIN_LOG_SPACING)
}

/// `dq/ds` at interior node `i` by a seven-point stencil, differentiating in
/// `s = ln r` or in `z = ln w`, whichever varies more across the stencil, and
/// converting with the exact `dz/ds` at the node.
fn log_derivative<Q: Fn(&Node) -> f64>(nodes: &[Node], i: usize, pm1: f64, dz_ds: f64, q: Q) -> f64 {
    let win = &nodes[i - STENCIL_HALF..=i + STENCIL_HALF];
    let ss: Vec<f64> = win.iter().map(|n| n.r.ln()).collect();
    let zs: Vec<f64> = win.iter().map(|n| pm1 * n.ln_dv).collect();
    let qs: Vec<f64> = win.iter().map(&q).collect();
    let span_s = ss[ss.len() - 1] - ss[0];
    let span_z = zs[zs.len() - 1] - zs[0];
    if span_z > span_s && zs.windows(2).all(|w| w[1] > w[0]) {
        lagrange_derivative(&zs, &qs, STENCIL_HALF) * dz_ds
    } else {
        lagrange_derivative(&ss, &qs, STENCIL_HALF)
    }
}

/// `dz/ds` at interior node `i` from the neighbouring nodes alone, as the
/// reciprocal of `ds/dz` where `z` is the better-resolved variable.
fn fd_dz_ds(nodes: &[Node], i: usize, pm1: f64) -> f64 {
    let win = &nodes[i - STENCIL_HALF..=i + STENCIL_HALF];
    let ss: Vec<f64> = win.iter().map(|n| n.r.ln()).collect();
    let zs: Vec<f64> = win.iter().map(|n| pm1 * n.ln_dv).collect();
    let span_s = ss[ss.len() - 1] - ss[0];
    let span_z = zs[zs.len() - 1] - zs[0];
    if span_z > span_s && zs.windows(2).all(|w| w[1] > w[0]) {
        1.0 / lagrange_derivative(&zs, &ss, STENCIL_HALF)
    } else {
        lagrange_derivative(&ss, &zs, STENCIL_HALF)
    }
}

/// `dz/ds` at a node from the equation, where `z = ln w`.
fn node_dz_ds(nd: &Node, pm1: f64, lnf: f64, lng: f64, sign: Sign, nm1: f64) -> f64 {
    let s = nd.r.ln();
    let z = pm1 * nd.ln_dv;
    let f_part = (s + lnf - z).exp();
    let g_part = (s + lng - z).exp();
    match sign {
        Sign::Plus => f_part + g_part - nm1,
        Sign::Minus => f_part - g_part - nm1,
    }
}

#[derive(Debug, Clone, Copy, Serialize)]
pub struct DefectReport {
    pub max_defect: f64,
    pub at_r: f64,
    pub nodes_checked: usize,
    /// Interior nodes whose stencil is too tight in `r` to difference.
    pub nodes_skipped: usize,
}

/// Residual of the radial equation along a trajectory, relative to
/// `r^{n-1} (f(v) + g(v'))`, at interior nodes. The flux derivative is taken
/// by finite differences of the stored nodes.
pub fn trajectory_residual(traj: &RadialTrajectory, spec: &ProblemSpec) -> Result<DefectReport> {
    let nodes = &traj.nodes;
    if nodes.len() < 2 * STENCIL_HALF + 1 {
        return Err(Error::Precondition("trajectory too short for the residual stencil".into()));
    }
    let pm1 = spec.p - 1.0;
    let nm1 = spec.n as f64 - 1.0;
    let mut worst = DefectReport { max_defect: 0.0, at_r: f64::NAN, nodes_checked: 0, nodes_skipped: 0 };
    for i in STENCIL_HALF..nodes.len() - STENCIL_HALF {
        let nd = &nodes[i];
        if !resolved(nodes, i) {
            worst.nodes_skipped += 1;
            continue;
        }
        let s = nd.r.ln();
        let z = pm1 * nd.ln_dv;
        let lnf = spec.f.ln_value(nd.ln_v);
        let lng = spec.g.ln_value(nd.ln_dv);
        let dz_ds = node_dz_ds(nd, pm1, lnf, lng, spec.sign, nm1);
        let fd = fd_dz_ds(nodes, i, pm1);
        // (r^{n-1} w)' r / (r^{n-1} w) = n - 1 + dz/ds
        let scale = (s + lnf - z).exp() + (s + lng - z).exp();
        let defect = (fd - dz_ds).abs() / scale;
        worst.nodes_checked += 1;
        if !(defect <= worst.max_defect) {
            worst.max_defect = defect;
            worst.at_r = nd.r;
        }
    }
    Ok(worst)
}

/// Checks `A'(v')^{p-2} = r^{n-1} f W / F^{1/p} - (p-2) r^{n-1} (v')^{p-2} v'' / F^{1/p}`
/// at interior nodes, with `A'` from finite differences of `ln A`.
///
/// Both sides are divided by `(v')^{p-1} / r` times `r^{n-1} / F^{1/p}`, so
/// the defect is relative to `|r f W / w| + |(p-2) r v'' / v'|`.
pub fn diagnostics_identity_check(traj: &RadialTrajectory, spec: &ProblemSpec) -> Result<DefectReport> {
    if spec.sign != Sign::Plus {
        return Err(Error::Precondition("the identity for A' is stated for the plus sign".into()));
    }
    let nodes = &traj.nodes;
    if nodes.len() < 2 * STENCIL_HALF + 1 {
        return Err(Error::Precondition("trajectory too short for the identity stencil".into()));
    }
    let p = spec.p;
    let pm1 = p - 1.0;
    let nm1 = spec.n as f64 - 1.0;
    let prim = Primitive::new(&spec.f)?;
    let ln_a = |nd: &Node| nm1 * nd.r.ln() + nd.ln_dv - prim.ln_value(nd.ln_v) / p;
    let mut worst = DefectReport { max_defect: 0.0, at_r: f64::NAN, nodes_checked: 0, nodes_skipped: 0 };
    for i in STENCIL_HALF..nodes.len() - STENCIL_HALF {
        let nd = &nodes[i];
        if !resolved(nodes, i) {
            worst.nodes_skipped += 1;
            continue;
        }
        let s = nd.r.ln();
        let z = pm1 * nd.ln_dv;
        let lnf = spec.f.ln_value(nd.ln_v);
        let lng = spec.g.ln_value(nd.ln_dv);
        let dz_ds = node_dz_ds(nd, pm1, lnf, lng, spec.sign, nm1);
        let lhs = log_derivative(nodes, i, pm1, dz_ds, ln_a);
        let first = (s + lnf - z).exp() * nd.w;
        // r v'' / v' = (dz/ds) / (p - 1)
        let second = (p - 2.0) * dz_ds / pm1;
        let rhs = first - second;
        let defect = (lhs - rhs).abs() / (first.abs() + second.abs());
        worst.nodes_checked += 1;
        if !(defect <= worst.max_defect) {
            worst.max_defect = defect;
            worst.at_r = nd.r;
        }
    }
    Ok(worst)
}

#[derive(Debug, Clone, Copy, Serialize)]
pub struct ExpInequalityReport {
    pub holds: bool,
    /// Largest `|defect - e^{p x}| / e^{p x}` over the grid.
    pub max_rel_error: f64,
    /// Smallest defect seen.
    pub min_defect: f64,
}

/// For `u = exp(x1)`: `Delta_p u - [(p-1) u^{p-1} - |grad u|^p] = e^{p x1} >= 0`,
/// using `Delta_p u = (p-1) e^{(p-1) x1}` and `|grad u|^p = e^{p x1}`.
pub fn exp_inequality_check(p: f64, x1_grid: &[f64]) -> Result<ExpInequalityReport> {
    if !(p > 1.0) {
        return Err(Error::InvalidSpec(format!("p must exceed 1, got {p}")));
    }
    let mut report = ExpInequalityReport { holds: true, max_rel_error: 0.0, min_defect: f64::INFINITY };
    for &x in x1_grid {
        let u = x.exp();
        // div(|u'|^{p-2} u') with u' = u: derivative of u^{p-1}
        let lap = (p - 1.0) * u.powf(p - 2.0) * u;
        let rhs = (p - 1.0) * u.powf(p - 1.0) - u.powf(p);
        let defect = lap - rhs;
        let exact = (p * x).exp();
        report.max_rel_error = report.max_rel_error.max((defect - exact).abs() / exact);
        report.min_defect = report.min_defect.min(defect);
        report.holds &= defect >= 0.0;
    }
    Ok(report)
}

/// `(r, integral_{r_0}^r (v')^p dr)` at every node. Each interval is
/// integrated in `ln v'` as `integral (v')^{p+1} / v'' d ln v'` with the log of
/// the integrand taken linear, which is exact for power-law growth near
/// blow-up; intervals where `v''` is unusable fall back to the trapezoid rule
/// in `r`.
pub fn running_power_integral(traj: &RadialTrajectory) -> Vec<(f64, f64)> {
    let p = traj.p;
    let mut acc = 0.0;
    let mut out = Vec::with_capacity(traj.nodes.len());
    for (i, nd) in traj.nodes.iter().enumerate() {
        if i > 0 {
            let a = &traj.nodes[i - 1];
            let du = nd.ln_dv - a.ln_dv;
            let usable = |x: &Node| x.d2v > 0.0 && x.d2v.is_finite();
            acc += if du > 0.0 && usable(a) && usable(nd) {
                let pa = (p + 1.0) * a.ln_dv - a.d2v.ln();
                let pb = (p + 1.0) * nd.ln_dv - nd.d2v.ln();
                let dp = pb - pa;
                if dp.abs() < 1e-8 {
                    du * (0.5 * (pa + pb)).exp()
                } else {
                    du * pa.exp() * dp.exp_m1() / dp
                }
            } else {
                0.5 * (nd.r - a.r) * (a.dv.powf(p) + nd.dv.powf(p))
            };
        }
        out.push((nd.r, acc));
    }
    out
}

/// Increments of the running `(v')^p` integral over consecutive bins of
/// `ln v'` covering the last `decades` decades of `v'` before termination,
/// `bins_per_decade` bins each.
pub fn power_integral_increments(traj: &RadialTrajectory, decades: f64, bins_per_decade: usize) -> Vec<f64> {
    let running = running_power_integral(traj);
    let ln_dv: Vec<f64> = traj.nodes.iter().map(|n| n.ln_dv).collect();
    let top = ln_dv[ln_dv.len() - 1];
    let width = std::f64::consts::LN_10 / bins_per_decade as f64;
    let bins = (decades * bins_per_decade as f64).round() as usize;
    // Running integral as a function of ln v', which is increasing.
    let at = |x: f64| -> Option<f64> {
        let j = ln_dv.partition_point(|&l| l < x);
        if j == 0 || j >= ln_dv.len() {
            return None;
        }
        let t = (x - ln_dv[j - 1]) / (ln_dv[j] - ln_dv[j - 1]);
        Some(running[j - 1].1 + t * (running[j].1 - running[j - 1].1))
    };
    let edges: Vec<Option<f64>> = (0..=bins).map(|k| at(top - (bins - k) as f64 * width)).collect();
    edges.windows(2).filter_map(|w| Some(w[1]? - w[0]?)).collect()
}
