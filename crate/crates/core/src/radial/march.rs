//! Adaptive integration of the radial initial-value problem
//! `(r^{n-1} (v')^{p-1})' = r^{n-1} (f(v) +- g(v'))`, `v(0) = v0`, `v'(0) = 0`.
//!
//! With `w = (v')^{p-1}` the unknowns are `y = ln v` and `z = ln w`, and the
//! independent variable is `s = ln r`:
//!
//! ```text
//! dy/ds = exp(s + z/(p-1) - y)
//! dz/ds = exp(s - z) (f(v) +- g(v')) - (n - 1)
//! ```
//!
//! When `dz/ds` becomes large (fast growth or approach to blow-up) the roles
//! of `s` and `z` are swapped and `(s, y)` are integrated against `z`, which
//! turns a finite-radius blow-up into an infinite interval in `z`.

use super::integrator::{sdirk4_step, step_factor, State, StepOutcome, StepTolerance};
use super::spec::{ProblemSpec, Sign};
use super::trajectory::{BlowUpInfo, BoundednessSource, Node, RadialTrajectory, Termination};
use crate::conditions::v_bounded_at_blowup;
use crate::error::{Error, Result};
use crate::integrals::Verdict;
use crate::nonlinearity::Primitive;

#[derive(Debug, Clone)]
pub struct MarchControls {
    /// Relative and absolute tolerance on `(ln v, ln w)`.
    pub tol: f64,
    /// Starting radius; chosen automatically when `None`.
    pub r_start: Option<f64>,
    /// Upper bound on the ratio of consecutive node radii, and on the ratio of
    /// `d ln w / d ln r` between nodes.
    pub max_step_ratio: f64,
    pub max_steps: usize,
    /// `v'` above which a blow-up may be declared.
    pub blowup_dv: f64,
    /// Relative distance `(R_est - r) / r` below which blow-up is declared.
    pub blowup_gap: f64,
}

impl Default for MarchControls {
    fn default() -> Self {
        Self { tol: 1e-10, r_start: None, max_step_ratio: 1.05, max_steps: 1_000_000, blowup_dv: 1e12, blowup_gap: 1e-8 }
    }
}

const DEFAULT_R_START: f64 = 1e-6;
const MIN_R_START: f64 = 1e-30;
/// Swap to `z` as independent variable above this `dz/ds`, back below the
/// lower value.
const PHASE2_ENTER: f64 = 20.0;
const PHASE2_LEAVE: f64 = 5.0;
const MAX_LN_DV: f64 = 1e5;
const SIGN_SLACK: f64 = 1e-8;
const TREND_BOUNDED: f64 = -0.05;
const TREND_UNBOUNDED: f64 = -0.01;

struct System<'a> {
    spec: &'a ProblemSpec,
    pm1: f64,
    nm1: f64,
}

impl System<'_> {
    /// `dy/ds`.
    fn e(&self, s: f64, y: f64, z: f64) -> f64 {
        (s + z / self.pm1 - y).exp()
    }

    /// `dz/ds`.
    fn d(&self, s: f64, y: f64, z: f64) -> f64 {
        let lnf = self.spec.f.ln_value(y);
        let lng = self.spec.g.ln_value(z / self.pm1);
        let forcing = match self.spec.sign {
            Sign::Plus => (s + lnf - z).exp() + (s + lng - z).exp(),
            Sign::Minus => {
                if lnf == f64::NEG_INFINITY {
                    -(s + lng - z).exp()
                } else {
                    -(s + lnf - z).exp() * (lng - lnf).exp_m1()
                }
            }
        };
        forcing - self.nm1
    }
}

#[derive(Clone, Copy, PartialEq)]
enum Phase {
    /// Independent variable `s = ln r`, state `(y, z)`.
    Radius,
    /// Independent variable `z = ln w`, state `(s, y)`.
    Slope,
}

struct Point {
    s: f64,
    y: f64,
    z: f64,
    d: f64,
    phase: Phase,
}

/// Integrates from a series start near the origin to `r_max` or blow-up.
pub fn march(spec: &ProblemSpec, r_max: f64, controls: &MarchControls) -> Result<RadialTrajectory> {
    spec.validate()?;
    if !(r_max > 0.0 && r_max.is_finite()) {
        return Err(Error::InvalidSpec(format!("r_max must be positive, got {r_max}")));
    }
    if !(controls.tol > 0.0 && controls.max_step_ratio > 1.0) {
        return Err(Error::InvalidSpec("tolerance must be positive and the step ratio above 1".into()));
    }
    let f_v0 = spec.f.value(spec.v0);
    if !(f_v0 > 0.0) {
        return Err(Error::Precondition("march needs f(v0) > 0 to leave the origin".into()));
    }
    let p = spec.p;
    let pm1 = p - 1.0;
    let sys = System { spec, pm1, nm1: spec.n as f64 - 1.0 };
    let prim = Primitive::new(&spec.f)?;

    let (r0, w0) = series_start(spec, f_v0, controls.r_start);
    if r0 >= r_max {
        return Err(Error::InvalidSpec(format!("r_max = {r_max} is below the starting radius {r0}")));
    }
    let v_start = spec.v0 + (pm1 / p) * (w0 / r0).powf(1.0 / pm1) * r0.powf(p / pm1);

    let s_end = r_max.ln();
    let ds_max = controls.max_step_ratio.ln();
    let tol = StepTolerance { atol: controls.tol, rtol: 1e-2 * controls.tol };
    let ln_blowup_dv = controls.blowup_dv.ln();

    let rhs_radius = |s: f64, st: &State| -> State {
        let (y, z) = (st[0], st[1]);
        [sys.e(s, y, z), sys.d(s, y, z)]
    };
    let rhs_slope = |z: f64, st: &State| -> State {
        let (s, y) = (st[0], st[1]);
        let d = sys.d(s, y, z);
        if !(d > 0.0) {
            return [f64::NAN, f64::NAN];
        }
        [1.0 / d, sys.e(s, y, z) / d]
    };

    let mut pts: Vec<Point> = Vec::new();
    let mut nodes: Vec<Node> = Vec::new();
    let (mut s, mut y, mut z) = (r0.ln(), v_start.ln(), w0.ln());
    let d0 = sys.d(s, y, z);
    push_node(&sys, &prim, &mut nodes, r0, s, y, z, d0)?;
    pts.push(Point { s, y, z, d: d0, phase: Phase::Radius });

    let mut phase = Phase::Radius;
    let mut h = ds_max.min(0.01);
    let mut steps = 0usize;
    // Rate of change of ln(dz/ds) per unit z over the last slope step.
    let mut dlnd_dz: Option<f64> = None;
    // Raised after a failed slope step so that a slow manifold near
    // `f = g` is crossed in `s`.
    let mut enter_slope = PHASE2_ENTER;

    loop {
        steps += 1;
        if steps > controls.max_steps {
            return Err(Error::NoConvergence { iterations: controls.max_steps, distance: r_max - s.exp() });
        }
        let d = sys.d(s, y, z);
        // Phase selection, with the final approach to r_max always in s.
        let landing = phase == Phase::Slope && s + 1.5 * h / d.max(1e-300) >= s_end;
        if phase == Phase::Radius && d > enter_slope && s_end - s > 2.0 * ds_max {
            phase = Phase::Slope;
            h *= d;
        } else if phase == Phase::Slope && (d < PHASE2_LEAVE || landing) {
            phase = Phase::Radius;
            h /= d.max(1e-300);
        }

        let (accepted, err) = match phase {
            Phase::Radius => {
                h = h.min(s_end - s).min(ds_max);
                match sdirk4_step(&rhs_radius, s, &[y, z], h, &tol) {
                    StepOutcome::Done { y: st, err } if err <= 1.0 => {
                        let s_new = if s_end - (s + h) <= 1e-15 * s_end.abs().max(1.0) { s_end } else { s + h };
                        (Some((s_new, st[0], st[1])), err)
                    }
                    StepOutcome::Done { err, .. } => (None, err),
                    StepOutcome::Failed => (None, f64::INFINITY),
                }
            }
            Phase::Slope => {
                h = h.min(ds_max * d);
                if let Some(rate) = dlnd_dz {
                    h = h.min(ds_max / rate);
                }
                match sdirk4_step(&rhs_slope, z, &[s, y], h, &tol) {
                    StepOutcome::Done { y: st, err } if err <= 1.0 => {
                        let ds = st[0] - s;
                        let dlnd = (sys.d(st[0], st[1], z + h) / d).ln().abs();
                        if ds > ds_max * 1.0001 || st[0] > s_end || !(ds >= 0.0) || !(dlnd <= ds_max * 1.0001) {
                            // Too long in r or in the scale of dz/ds: retry shorter.
                            (None, 16.0)
                        } else {
                            (Some((st[0], st[1], z + h)), err)
                        }
                    }
                    StepOutcome::Done { err, .. } => (None, err),
                    StepOutcome::Failed => {
                        phase = Phase::Radius;
                        enter_slope = enter_slope.max(2.0 * d);
                        h /= d;
                        continue;
                    }
                }
            }
        };

        let Some((s_new, y_new, z_new)) = accepted else {
            h *= if err.is_finite() { step_factor(err).min(0.9) } else { 0.25 };
            let ds_equiv = match phase {
                Phase::Radius => h,
                Phase::Slope => h / d.max(1e-300),
            };
            let collapsed = match phase {
                Phase::Radius => ds_equiv < 1e-14,
                Phase::Slope => h < 1e-12 * z.abs().max(1.0),
            };
            if collapsed {
                let ln_dv = z / pm1;
                if ln_dv > ln_blowup_dv {
                    let info = blow_up_info(spec, &pts, &nodes, s.exp())?;
                    return Ok(finish(spec, r_max, nodes, Termination::BlowUp(info)));
                }
                return Ok(finish(spec, r_max, nodes, Termination::StepCollapse { r_last: s.exp() }));
            }
            continue;
        };

        h *= step_factor(err);
        let d_new = sys.d(s_new, y_new, z_new);
        dlnd_dz = match phase {
            Phase::Slope if z_new > z => Some(((d_new / d).ln().abs() / (z_new - z)).max(1e-3)),
            _ => None,
        };
        if s_new - s < 1e-14 {
            // r no longer resolves the approach to the singularity.
            pts.push(Point { s: s_new, y: y_new, z: z_new, d: d_new, phase });
            let r = s.exp();
            let r_est = extrapolate_radius(&pts).map(|(r_est, _)| r_est).unwrap_or(r);
            let mut info = blow_up_info(spec, &pts, &nodes, r_est)?;
            info.r_est_uncertainty = (r_est - r).max(r - nodes[nodes.len().saturating_sub(2)].r);
            return Ok(finish(spec, r_max, nodes, Termination::BlowUp(info)));
        }
        s = s_new;
        y = y_new;
        z = z_new;
        let r = if s >= s_end { r_max } else { s.exp() };
        push_node(&sys, &prim, &mut nodes, r, s, y, z, d_new)?;
        pts.push(Point { s, y, z, d: d_new, phase });

        if s >= s_end {
            return Ok(finish(spec, r_max, nodes, Termination::ReachedRmax));
        }
        let ln_dv = z / pm1;
        if ln_dv > ln_blowup_dv {
            if let Some((r_est, gap)) = extrapolate_radius(&pts) {
                let r = s.exp();
                if gap <= controls.blowup_gap * r || ln_dv > MAX_LN_DV {
                    let mut info = blow_up_info(spec, &pts, &nodes, r_est)?;
                    info.r_est_uncertainty = r - (pts[pts.len() - 2].s).exp();
                    return Ok(finish(spec, r_max, nodes, Termination::BlowUp(info)));
                }
            } else if ln_dv > MAX_LN_DV {
                let info = blow_up_info(spec, &pts, &nodes, s.exp())?;
                return Ok(finish(spec, r_max, nodes, Termination::BlowUp(info)));
            }
        }
    }
}

fn finish(spec: &ProblemSpec, r_max: f64, nodes: Vec<Node>, termination: Termination) -> RadialTrajectory {
    RadialTrajectory { p: spec.p, n: spec.n, sign: spec.sign, v0: spec.v0, r_max, nodes, termination }
}

/// Starting radius and `w(r0)` from the leading-order balance
/// `w = (f(v0) +- g(v')) r / n`, with `r0` lowered until `g` is negligible
/// against `f(v0)`.
fn series_start(spec: &ProblemSpec, f_v0: f64, r_start: Option<f64>) -> (f64, f64) {
    let pm1 = spec.p - 1.0;
    let n = spec.n as f64;
    let w_of = |r: f64| {
        let mut w = f_v0 * r / n;
        for _ in 0..4 {
            let forcing = spec.rhs(spec.v0, w.powf(1.0 / pm1));
            w = (forcing.max(0.5 * f_v0)) * r / n;
        }
        w
    };
    if let Some(r0) = r_start {
        return (r0, w_of(r0));
    }
    let mut r0 = DEFAULT_R_START;
    while r0 > MIN_R_START && spec.g.value((f_v0 * r0 / n).powf(1.0 / pm1)) > 1e-6 * f_v0 {
        r0 *= 0.1;
    }
    (r0, w_of(r0))
}

#[allow(clippy::too_many_arguments)]
fn push_node(
    sys: &System<'_>,
    prim: &Primitive,
    nodes: &mut Vec<Node>,
    r: f64,
    s: f64,
    y: f64,
    z: f64,
    d: f64,
) -> Result<()> {
    let spec = sys.spec;
    let p = spec.p;
    let ln_dv = z / sys.pm1;
    let lnf = spec.f.ln_value(y);
    let lng = spec.g.ln_value(ln_dv);
    if spec.sign == Sign::Minus && lng - lnf > SIGN_SLACK.ln_1p() {
        return Err(Error::SignViolation { r, f: lnf.exp(), g: lng.exp() });
    }
    let ln_big_f = prim.ln_value(y);
    let dv = ln_dv.exp();
    let a = ((spec.n as f64 - 1.0) * s + ln_dv - ln_big_f / p).exp();
    let w = 1.0 + (lng - lnf).exp() - (p * ln_dv - ln_big_f).exp() / p;
    nodes.push(Node { r, v: y.exp(), dv, d2v: dv * d / (sys.pm1 * r), ln_v: y, ln_dv, a, w });
    Ok(())
}

/// `(R_est, R_est - r)` assuming `ds/dz` decays exponentially in `z`, from
/// the last two points.
fn extrapolate_radius(pts: &[Point]) -> Option<(f64, f64)> {
    if pts.len() < 2 {
        return None;
    }
    let (a, b) = (&pts[pts.len() - 2], &pts[pts.len() - 1]);
    if !(a.d > 0.0 && b.d > 0.0 && b.z > a.z) {
        return None;
    }
    let rate = (b.d / a.d).ln() / (b.z - a.z);
    if !(rate > 0.0) {
        return None;
    }
    let remaining = (1.0 / b.d) / rate;
    let r = b.s.exp();
    let gap = r * remaining.exp_m1();
    Some((r + gap, gap))
}

/// Slope of `ln(dv/dz)` against `z` over the last part of the slope phase.
pub(crate) fn boundedness_trend(pts_y: &[f64], pts_z: &[f64]) -> Option<f64> {
    let n = pts_z.len();
    if n < 6 {
        return None;
    }
    let z_first = pts_z[0];
    let z_last = pts_z[n - 1];
    let start = z_last - 0.4 * (z_last - z_first);
    let mut xs = Vec::new();
    let mut ys = Vec::new();
    for i in 0..n - 1 {
        if pts_z[i] < start {
            continue;
        }
        let dz = pts_z[i + 1] - pts_z[i];
        let dy = pts_y[i + 1] - pts_y[i];
        if !(dz > 0.0 && dy > 0.0) {
            continue;
        }
        xs.push(0.5 * (pts_z[i] + pts_z[i + 1]));
        ys.push(pts_y[i] + dy.exp_m1().ln() - dz.ln());
    }
    if xs.len() < 5 || xs[xs.len() - 1] - xs[0] < 2.0 {
        return None;
    }
    Some(crate::conditions::linear_slope(&xs, &ys))
}

fn blow_up_info(spec: &ProblemSpec, pts: &[Point], nodes: &[Node], r_est: f64) -> Result<BlowUpInfo> {
    let slope_pts: Vec<&Point> = pts.iter().filter(|pt| pt.phase == Phase::Slope).collect();
    let trend = boundedness_trend(
        &slope_pts.iter().map(|pt| pt.y).collect::<Vec<_>>(),
        &slope_pts.iter().map(|pt| pt.z).collect::<Vec<_>>(),
    );
    let trend_verdict = trend.and_then(|k| {
        if k < TREND_BOUNDED {
            Some(true)
        } else if k > TREND_UNBOUNDED {
            Some(false)
        } else {
            None
        }
    });
    let cond = v_bounded_at_blowup(&spec.g, spec.p)?;
    let cond_verdict = match cond.verdict {
        Verdict::Converges => Some(true),
        Verdict::Diverges => Some(false),
        Verdict::Inconclusive => None,
    };
    let (v_bounded, source) = match (trend_verdict, cond_verdict) {
        (Some(t), _) => (t, BoundednessSource::Trend),
        (None, Some(c)) => (c, BoundednessSource::Condition),
        // Neither is decisive: fall back to the sign of the trend.
        (None, None) => (trend.map(|k| k < 0.5 * (TREND_BOUNDED + TREND_UNBOUNDED)).unwrap_or(false), BoundednessSource::Trend),
    };
    let trend_agrees = match (trend_verdict, cond_verdict) {
        (Some(t), Some(c)) => Some(t == c),
        _ => None,
    };
    let r_last = nodes.last().map(|n| n.r).unwrap_or(r_est);
    Ok(BlowUpInfo {
        r_est: r_est.max(r_last),
        r_est_uncertainty: 0.0,
        v_bounded,
        v_bounded_source: source,
        trend_slope: trend,
        trend_agrees,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::nonlinearity::GrowthExpr;

    fn pw(a: f64) -> GrowthExpr {
        GrowthExpr::power(1.0, a).unwrap()
    }

    #[test]
    fn linear_case_matches_sinh() {
        let spec = ProblemSpec::new_test_mode(2.0, 3, Sign::Plus, pw(1.0), GrowthExpr::zero(), 1.0).unwrap();
        let traj = march(&spec, 5.0, &MarchControls::default()).unwrap();
        assert_eq!(traj.termination, Termination::ReachedRmax);
        assert_eq!(traj.r_last(), 5.0);
        for &r in &[0.5, 1.0, 2.0, 5.0] {
            let (v, _) = traj.sample(r).unwrap();
            let exact = f64::sinh(r) / r;
            assert!((v / exact - 1.0).abs() < 1e-8, "r={r}: {v} vs {exact}");
        }
    }

    #[test]
    fn blow_up_with_unbounded_v() {
        let spec = ProblemSpec::new(2.0, 3, Sign::Plus, pw(3.0), pw(2.0), 1.0).unwrap();
        let traj = march(&spec, 100.0, &MarchControls::default()).unwrap();
        match traj.termination {
            Termination::BlowUp(info) => {
                assert!(info.r_est.is_finite());
                assert!(!info.v_bounded);
            }
            other => panic!("expected blow-up, got {other:?}"),
        }
    }

    #[test]
    fn blow_up_with_bounded_v() {
        let spec = ProblemSpec::new(2.0, 3, Sign::Plus, pw(1.0), pw(3.0), 1.0).unwrap();
        let traj = march(&spec, 100.0, &MarchControls::default()).unwrap();
        match traj.termination {
            Termination::BlowUp(info) => {
                assert!(info.v_bounded);
                assert_eq!(info.v_bounded_source, BoundednessSource::Trend);
            }
            other => panic!("expected blow-up, got {other:?}"),
        }
    }

    #[test]
    fn r_est_is_stable_under_tighter_tolerance() {
        let spec = ProblemSpec::new(2.0, 3, Sign::Plus, pw(3.0), pw(2.0), 1.0).unwrap();
        let est = |tol: f64| match march(&spec, 100.0, &MarchControls { tol, ..Default::default() }).unwrap().termination {
            Termination::BlowUp(info) => info.r_est,
            _ => f64::NAN,
        };
        let (coarse, fine) = (est(1e-8), est(1e-9));
        assert!((coarse - fine).abs() < 1e-6 * fine, "{coarse} vs {fine}");
    }

    #[test]
    fn rejects_non_positive_rmax() {
        let spec = ProblemSpec::new(2.0, 3, Sign::Plus, pw(1.0), pw(1.0), 1.0).unwrap();
        assert!(march(&spec, 0.0, &MarchControls::default()).is_err());
    }
}
