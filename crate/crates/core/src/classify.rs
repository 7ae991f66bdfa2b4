//! Existence / nonexistence decisions for entire positive solutions, built
//! from the integral and growth conditions, with a closed-form path for
//! pure powers `f = t^m`, `g = t^q` and a cross-check against the radial
//! solver.

use serde::Serialize;

use crate::conditions::{
    gamma_condition, growth_cap, growth_ratio, ko_f, ko_g, pminus_existence, sobolev_exclusion, ConditionReport,
    GrowthKind, GrowthRatioOptions, GrowthVerdict,
};
use crate::error::{Error, Result};
use crate::integrals::Verdict;
use crate::nonlinearity::EXPONENT_EPS;
use crate::radial::{march, MarchControls, ProblemSpec, Sign, Termination};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Outcome {
    Existence,
    Nonexistence,
    Inconclusive,
}

#[derive(Debug, Clone, Serialize)]
pub struct Classification {
    pub outcome: Outcome,
    /// Which statement decided the outcome, e.g. `plus-nonexistence-ko-f`.
    pub clause: String,
    pub caveats: Vec<String>,
    /// The reports the outcome rests on.
    pub reports: Vec<ConditionReport>,
    /// Other reports evaluated along the way, for diagnostics only.
    pub consulted: Vec<ConditionReport>,
}

#[derive(Debug, Clone, Default)]
pub struct ClassifyOptions {
    /// Use [`power_case`] directly when `f` and `g` are single powers.
    pub power_fast_path: bool,
    pub ratio: GrowthRatioOptions,
}

const CAVEAT_LIPSCHITZ_SPACE: &str =
    "nonexistence is established for nonnegative weak subsolutions in W^{1,inf}_loc";
const CAVEAT_SOBOLEV: &str = "the gradient-power integral diverges, so blow-up profiles have v' outside L^p near the \
     blow-up radius; nonexistence would extend to W^{1,p}_loc subsolutions given a comparison principle there";
const CAVEAT_PLUS_GAP: &str = "both integral conditions diverge but no growth comparison between g(A F^{1/p}) and f \
     holds; no criterion decides this case";
const CAVEAT_MINUS_GAP: &str =
    "neither existence integral diverges and the Gamma integral does not converge; no criterion decides this case";
const CAVEAT_EQUAL_EXPONENTS: &str = "m = q lies on the boundary: both integrals diverge at exponent -1, so existence \
     follows from the integral test; a strict m < q reading would exclude it";
const CAVEAT_SUBLINEAR_GRADIENT: &str = "for q <= p-1 existence is decided by the f-integral alone (existence iff m <= p-1); \
     an 'existence iff m > q' rule would disagree and is not used";
const CAVEAT_NON_LIPSCHITZ_G: &str =
    "g is not Lipschitz at 0; radial solutions exist but need not be unique";

fn is_integral(r: &ConditionReport, v: Verdict) -> bool {
    matches!(&r.outcome, crate::conditions::ConditionOutcome::Integral(c) if c.verdict == v)
}

fn is_growth(r: &ConditionReport, v: GrowthVerdict) -> bool {
    matches!(&r.outcome, crate::conditions::ConditionOutcome::Growth(g) if g.verdict == v)
}

fn decided(outcome: Outcome, clause: &str, reports: Vec<ConditionReport>) -> Classification {
    Classification { outcome, clause: clause.to_string(), caveats: Vec::new(), reports, consulted: Vec::new() }
}

/// Decision tree over the condition battery.
pub fn classify(spec: &ProblemSpec, opts: &ClassifyOptions) -> Result<Classification> {
    spec.validate()?;
    if opts.power_fast_path {
        if let (Some((_, m)), Some((_, q))) = (spec.f.as_pure_power(), spec.g.as_pure_power()) {
            return power_case(m, q, spec.p, spec.sign);
        }
    }
    let mut c = match spec.sign {
        Sign::Plus => classify_plus(spec, opts)?,
        Sign::Minus => classify_minus(spec)?,
    };
    if spec.g.non_lipschitz_at_zero() {
        c.caveats.push(CAVEAT_NON_LIPSCHITZ_G.into());
    }
    Ok(c)
}

fn classify_plus(spec: &ProblemSpec, opts: &ClassifyOptions) -> Result<Classification> {
    let (f, g, p) = (&spec.f, &spec.g, spec.p);
    let rf = ConditionReport::integral("ko_f", ko_f(f, p)?);
    let rg = ConditionReport::integral("ko_g", ko_g(g, p)?);
    for (r, clause) in [(&rf, "plus-nonexistence-ko-f"), (&rg, "plus-nonexistence-ko-g")] {
        if is_integral(r, Verdict::Converges) {
            let mut c = decided(Outcome::Nonexistence, clause, vec![r.clone()]);
            c.caveats.push(CAVEAT_LIPSCHITZ_SPACE.into());
            let sob = ConditionReport::integral("sobolev_exclusion", sobolev_exclusion(g, p)?);
            if is_integral(&sob, Verdict::Diverges) {
                c.caveats.push(CAVEAT_SOBOLEV.into());
            }
            c.consulted.push(sob);
            return Ok(c);
        }
    }
    if !(is_integral(&rf, Verdict::Diverges) && is_integral(&rg, Verdict::Diverges)) {
        return Ok(decided(Outcome::Inconclusive, "plus-undecided-ko", vec![rf, rg]));
    }
    let mut sides = Vec::new();
    if p <= 2.0 {
        sides.push((GrowthKind::Liminf, "growth_liminf", "plus-existence-growth-liminf"));
    }
    if p >= 2.0 {
        sides.push((GrowthKind::Limsup, "growth_limsup", "plus-existence-growth-limsup"));
    }
    let mut tried = Vec::new();
    for (kind, name, clause) in sides {
        let r = ConditionReport::growth(name, growth_ratio(f, g, p, kind, &opts.ratio)?);
        if is_growth(&r, GrowthVerdict::Holds) {
            let mut c = decided(Outcome::Existence, clause, vec![rf, rg, r]);
            c.consulted = tried;
            return Ok(c);
        }
        tried.push(r);
    }
    let cap = ConditionReport::growth("growth_cap", growth_cap(g, p)?);
    if is_growth(&cap, GrowthVerdict::Holds) {
        let mut c = decided(Outcome::Existence, "plus-existence-growth-cap", vec![rf, rg, cap]);
        c.consulted = tried;
        return Ok(c);
    }
    tried.push(cap);
    let mut c = decided(Outcome::Inconclusive, "plus-undecided-growth", vec![rf, rg]);
    c.consulted = tried;
    c.caveats.push(CAVEAT_PLUS_GAP.into());
    Ok(c)
}

fn classify_minus(spec: &ProblemSpec) -> Result<Classification> {
    let (f, g, p, n) = (&spec.f, &spec.g, spec.p, spec.n);
    let rgamma = ConditionReport::integral("gamma_condition", gamma_condition(f, g, p, n)?);
    if is_integral(&rgamma, Verdict::Converges) {
        return Ok(decided(Outcome::Nonexistence, "minus-nonexistence-gamma", vec![rgamma]));
    }
    let (a, b) = pminus_existence(f, g, p)?;
    let mut tried = vec![rgamma];
    for (r, clause) in [
        (ConditionReport::integral("pminus_ko_f", a), "minus-existence-ko-f"),
        (ConditionReport::integral("pminus_ginv_f", b), "minus-existence-ginv-f"),
    ] {
        if is_integral(&r, Verdict::Diverges) {
            let mut c = decided(Outcome::Existence, clause, vec![r]);
            c.consulted = tried;
            return Ok(c);
        }
        tried.push(r);
    }
    let mut c = decided(Outcome::Inconclusive, "minus-undecided", tried);
    c.caveats.push(CAVEAT_MINUS_GAP.into());
    Ok(c)
}

fn le(a: f64, b: f64) -> bool {
    a <= b + EXPONENT_EPS
}

/// Closed-form decision for `f = t^m`, `g = t^q`.
pub fn power_case(m: f64, q: f64, p: f64, sign: Sign) -> Result<Classification> {
    if !(m > 0.0 && q > 0.0 && p > 1.0) || !(m.is_finite() && q.is_finite() && p.is_finite()) {
        return Err(Error::InvalidSpec(format!("power case needs m, q > 0 and p > 1 (m={m}, q={q}, p={p})")));
    }
    let pm1 = p - 1.0;
    let mut c = match sign {
        Sign::Plus => {
            if !le(q, pm1) {
                let mut c = decided(Outcome::Nonexistence, "power-plus-nonexistence-gradient", Vec::new());
                c.caveats.push(CAVEAT_LIPSCHITZ_SPACE.into());
                c
            } else if !le(m, pm1) {
                let mut c = decided(Outcome::Nonexistence, "power-plus-nonexistence-ko-f", Vec::new());
                c.caveats.push(CAVEAT_LIPSCHITZ_SPACE.into());
                c
            } else {
                decided(Outcome::Existence, "power-plus-existence-growth-cap", Vec::new())
            }
        }
        Sign::Minus => {
            if le(q, pm1) {
                let mut c = if le(m, pm1) {
                    decided(Outcome::Existence, "power-minus-existence-ko-f", Vec::new())
                } else {
                    decided(Outcome::Nonexistence, "power-minus-nonexistence-gamma", Vec::new())
                };
                c.caveats.push(CAVEAT_SUBLINEAR_GRADIENT.into());
                c
            } else if le(m, q) {
                let mut c = decided(Outcome::Existence, "power-minus-existence-ginv-f", Vec::new());
                if (m - q).abs() <= EXPONENT_EPS {
                    c.caveats.push(CAVEAT_EQUAL_EXPONENTS.into());
                }
                c
            } else {
                decided(Outcome::Nonexistence, "power-minus-nonexistence-gamma", Vec::new())
            }
        }
    };
    if q < 1.0 {
        c.caveats.push(CAVEAT_NON_LIPSCHITZ_G.into());
    }
    Ok(c)
}

#[derive(Debug, Clone)]
pub struct CrossValidateOptions {
    pub v0_set: Vec<f64>,
    pub r_max: f64,
    pub controls: MarchControls,
}

impl Default for CrossValidateOptions {
    fn default() -> Self {
        Self { v0_set: vec![0.5, 1.0, 2.0], r_max: 1e3, controls: MarchControls { tol: 1e-9, ..Default::default() } }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct CrossRun {
    pub v0: f64,
    pub termination: String,
    pub r_last: f64,
    pub r_est: Option<f64>,
    pub v_bounded: Option<bool>,
    pub error: Option<String>,
    pub consistent: bool,
}

#[derive(Debug, Clone, Serialize)]
pub struct CrossValidation {
    /// What the classification predicts for the radial problem.
    pub expectation: String,
    pub runs: Vec<CrossRun>,
    pub consistent: bool,
}

/// Runs the radial solver for every `v0` and compares with the
/// classification: nonexistence predicts a finite blow-up radius, existence
/// predicts reaching `r_max`. Mismatches are reported as they are.
pub fn cross_validate(
    spec: &ProblemSpec,
    classification: &Classification,
    opts: &CrossValidateOptions,
) -> Result<CrossValidation> {
    let expect_blow_up = match classification.outcome {
        Outcome::Nonexistence => true,
        Outcome::Existence => false,
        Outcome::Inconclusive => {
            return Err(Error::Precondition("cannot cross-validate an inconclusive classification".into()))
        }
    };
    let mut runs = Vec::with_capacity(opts.v0_set.len());
    for &v0 in &opts.v0_set {
        let s = spec.with_v0(v0)?;
        let run = match march(&s, opts.r_max, &opts.controls) {
            Ok(traj) => {
                let (r_est, v_bounded) = match &traj.termination {
                    Termination::BlowUp(info) => (Some(info.r_est), Some(info.v_bounded)),
                    _ => (None, None),
                };
                let consistent = match traj.termination {
                    Termination::BlowUp(_) => expect_blow_up,
                    Termination::ReachedRmax => !expect_blow_up,
                    Termination::StepCollapse { .. } => false,
                };
                CrossRun {
                    v0,
                    termination: traj.termination.label().to_string(),
                    r_last: traj.r_last(),
                    r_est,
                    v_bounded,
                    error: None,
                    consistent,
                }
            }
            Err(e) => CrossRun {
                v0,
                termination: "Error".into(),
                r_last: f64::NAN,
                r_est: None,
                v_bounded: None,
                error: Some(e.to_string()),
                consistent: false,
            },
        };
        runs.push(run);
    }
    let consistent = runs.iter().all(|r| r.consistent);
    let expectation = if expect_blow_up {
        "BlowUp at a finite radius for every v0".to_string()
    } else {
        format!("ReachedRmax (r_max = {}) for every v0", opts.r_max)
    };
    Ok(CrossValidation { expectation, runs, consistent })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::nonlinearity::GrowthExpr;

    fn pw(a: f64) -> GrowthExpr {
        GrowthExpr::power(1.0, a).unwrap()
    }

    fn classify_pair(p: f64, sign: Sign, m: f64, q: f64) -> Classification {
        let spec = ProblemSpec::new(p, 3, sign, pw(m), pw(q), 1.0).unwrap();
        classify(&spec, &ClassifyOptions::default()).unwrap()
    }

    #[test]
    fn plus_examples() {
        let c = classify_pair(2.0, Sign::Plus, 3.0, 1.0);
        assert_eq!((c.outcome, c.clause.as_str()), (Outcome::Nonexistence, "plus-nonexistence-ko-f"));
        let c = classify_pair(3.0, Sign::Plus, 1.0, 4.0);
        assert_eq!((c.outcome, c.clause.as_str()), (Outcome::Nonexistence, "plus-nonexistence-ko-g"));
        let c = classify_pair(2.0, Sign::Plus, 1.0, 1.0);
        assert_eq!((c.outcome, c.clause.as_str()), (Outcome::Existence, "plus-existence-growth-cap"));
    }

    #[test]
    fn minus_examples() {
        let c = classify_pair(2.0, Sign::Minus, 2.0, 3.0);
        assert_eq!((c.outcome, c.clause.as_str()), (Outcome::Existence, "minus-existence-ginv-f"));
        let c = classify_pair(2.0, Sign::Minus, 5.0, 2.0);
        assert_eq!((c.outcome, c.clause.as_str()), (Outcome::Nonexistence, "minus-nonexistence-gamma"));
    }

    #[test]
    fn power_case_examples() {
        for m in [0.5, 1.0, 7.0] {
            assert_eq!(power_case(m, 2.0, 2.0, Sign::Plus).unwrap().outcome, Outcome::Nonexistence);
        }
        assert_eq!(power_case(2.0, 3.0, 2.0, Sign::Minus).unwrap().outcome, Outcome::Existence);
        assert_eq!(power_case(5.0, 2.0, 2.0, Sign::Minus).unwrap().outcome, Outcome::Nonexistence);
        let c = power_case(3.0, 3.0, 2.0, Sign::Minus).unwrap();
        assert_eq!(c.outcome, Outcome::Existence);
        assert!(c.caveats.iter().any(|s| s.contains("boundary")));
    }

    #[test]
    fn inconclusive_cannot_be_cross_validated() {
        let spec = ProblemSpec::new(2.0, 3, Sign::Plus, pw(1.0), pw(1.0), 1.0).unwrap();
        let c = decided(Outcome::Inconclusive, "x", Vec::new());
        assert!(cross_validate(&spec, &c, &CrossValidateOptions::default()).is_err());
    }
}
