use koradial::classify::{classify, power_case, ClassifyOptions, Outcome};
use koradial::conditions::{
    gamma_condition, growth_cap, ko_g, pminus_existence, v_bounded_at_blowup, GrowthVerdict,
};
use koradial::integrals::{classify_numeric, ConvergenceVerdict, Integrand, Verdict};
use koradial::nonlinearity::{invert_monotone, DerivedFunctions, Growth, GrowthExpr, InvertOptions, Primitive, Term};
use koradial::radial::{ProblemSpec, Sign};
use proptest::prelude::*;

fn term() -> impl Strategy<Value = Term> {
    (0.1f64..10.0, 0.1f64..4.0, 0.0f64..2.0).prop_map(|(c, a, b)| Term::new(c, a, b))
}

fn expr() -> impl Strategy<Value = GrowthExpr> {
    prop::collection::vec(term(), 1..4).prop_map(|t| GrowthExpr::analytic(t).unwrap())
}

/// `t^a (log(e+t))^b` with a single term, as used by the condition battery.
fn single() -> impl Strategy<Value = GrowthExpr> {
    (0.2f64..5.0, prop_oneof![Just(0.0), -1.0f64..2.0])
        .prop_filter_map("increasing", |(a, b)| GrowthExpr::power_log(1.0, a, b).ok())
}

fn p_value() -> impl Strategy<Value = f64> {
    prop_oneof![Just(1.5), Just(2.0), Just(3.0), 1.2f64..4.0]
}

fn ln_bertrand(alpha: f64, beta: f64) -> impl Fn(f64) -> f64 {
    move |u: f64| alpha * u + beta * u.ln()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn growth_expr_is_increasing(f in expr(), pairs in prop::collection::vec((0.0f64..1.0, 1e-6f64..1.0), 200)) {
        prop_assert_eq!(f.eval(0.0).unwrap(), 0.0);
        for (x, d) in pairs {
            let t1 = 1e6 * x * x + 1e-9;
            let t2 = t1 * (1.0 + d);
            prop_assert!(f.eval(t1).unwrap() < f.eval(t2).unwrap(), "t1={t1} t2={t2}");
        }
    }

    #[test]
    fn primitive_differentiates_to_f(f in expr(), xs in prop::collection::vec(-3.0f64..4.0, 50)) {
        let prim = Primitive::new(&f).unwrap();
        for x in xs {
            let s = 10f64.powf(x);
            let h = 1e-4 * s;
            let fd = (prim.eval(s + h).unwrap() - prim.eval(s - h).unwrap()) / (2.0 * h);
            let exact = f.eval(s).unwrap();
            prop_assert!(((fd - exact) / exact).abs() <= 1e-6, "s={s} fd={fd} f={exact}");
        }
    }

    #[test]
    fn inversion_round_trip(f in expr(), xs in prop::collection::vec(-4.0f64..6.0, 50)) {
        for x in xs {
            let t = 10f64.powf(x);
            let opts = InvertOptions::default();
            let y = f.value(t);
            let back = invert_monotone(|s| f.value(s), y, None, opts).unwrap();
            let tol = opts.abs_tol.max(opts.rel_tol * y.abs()).max(4.0 * f64::EPSILON * y.abs());
            prop_assert!((f.value(back) - y).abs() <= tol, "t={t} back={back}");
            // Away from the absolute floor the argument comes back too; every
            // term has exponent >= 0.1, so relative errors grow at most tenfold.
            if y > 1e3 * opts.abs_tol {
                prop_assert!(((back - t) / t).abs() <= 20.0 * opts.rel_tol.max(opts.abs_tol / y), "t={t} back={back}");
            }
        }
    }

    #[test]
    fn gamma_dominates_its_lower_bound(g in expr(), p in p_value(), n in 1u32..5, xs in prop::collection::vec(-3.0f64..4.0, 20)) {
        let f = GrowthExpr::power(1.0, 1.0).unwrap();
        let d = DerivedFunctions::new(&f, &g, p, n).unwrap();
        for x in xs {
            let t = 10f64.powf(x);
            let lower = t * g.value(t) + (p - 1.0) / p * d.c_const() * t.powf(p);
            prop_assert!(d.gamma(t).unwrap() >= lower * (1.0 - 1e-12), "t={t}");
        }
    }

    #[test]
    fn numeric_trend_agrees_with_exponents(
        alpha in (-3.0f64..1.0).prop_filter("off the boundary", |a| (a + 1.0).abs() >= 0.05),
        beta in -2.0f64..2.0,
    ) {
        let symbolic = ConvergenceVerdict::symbolic(Growth::new(alpha, beta));
        let numeric = classify_numeric(&Integrand::new(None, ln_bertrand(alpha, beta)), 2.0).unwrap();
        prop_assert_eq!(numeric.verdict, symbolic.verdict);
    }

    #[test]
    fn larger_integrand_never_converges_when_smaller_diverges(
        alpha in -1.0f64..1.0,
        beta in -1.0f64..2.0,
        d_alpha in 0.0f64..1.0,
        d_beta in 0.0f64..2.0,
    ) {
        // Off the exponent boundary, or exactly on it with a divergent log.
        let alpha = if alpha + 1.0 < 0.05 { -1.0 } else { alpha };
        prop_assume!(ConvergenceVerdict::symbolic(Growth::new(alpha, beta)).diverges());
        let numeric = classify_numeric(&Integrand::new(None, ln_bertrand(alpha + d_alpha, beta + d_beta)), 3.0).unwrap();
        prop_assert_ne!(numeric.verdict, Verdict::Converges);
    }

    #[test]
    fn gamma_convergence_excludes_minus_existence(f in single(), g in single(), p in p_value(), n in 1u32..5) {
        let gamma = gamma_condition(&f, &g, p, n).unwrap();
        if gamma.converges() {
            let (a, b) = pminus_existence(&f, &g, p).unwrap();
            prop_assert!(!a.diverges() && !b.diverges());
        }
    }

    #[test]
    fn fast_gradient_growth_fails_both_divergence_tests(p in p_value(), extra in 0.01f64..3.0) {
        let g = GrowthExpr::power(1.0, p + extra).unwrap();
        prop_assert!(ko_g(&g, p).unwrap().converges());
        prop_assert!(v_bounded_at_blowup(&g, p).unwrap().converges());
    }

    #[test]
    fn growth_cap_implies_ko_g_diverges(g in single(), p in p_value()) {
        if growth_cap(&g, p).unwrap().verdict == GrowthVerdict::Holds {
            prop_assert!(ko_g(&g, p).unwrap().diverges());
        }
    }

    #[test]
    fn power_case_ignores_common_scaling(m in 0.1f64..5.0, q in 0.1f64..5.0, p in p_value(), k in 0.01f64..100.0, plus in any::<bool>()) {
        let sign = if plus { Sign::Plus } else { Sign::Minus };
        let f = GrowthExpr::power(k, m).unwrap();
        let g = GrowthExpr::power(k, q).unwrap();
        let (_, m2) = f.as_pure_power().unwrap();
        let (_, q2) = g.as_pure_power().unwrap();
        prop_assert_eq!(power_case(m, q, p, sign).unwrap().outcome, power_case(m2, q2, p, sign).unwrap().outcome);
        let spec = ProblemSpec::new(p, 3, sign, f, g, 1.0).unwrap();
        let scaled = classify(&spec, &ClassifyOptions { power_fast_path: true, ..Default::default() }).unwrap();
        prop_assert_eq!(scaled.outcome, power_case(m, q, p, sign).unwrap().outcome);
    }

    #[test]
    fn no_verdict_laundering(f in single(), g in single(), p in p_value(), plus in any::<bool>()) {
        let sign = if plus { Sign::Plus } else { Sign::Minus };
        let spec = ProblemSpec::new(p, 3, sign, f, g, 1.0).unwrap();
        let c = classify(&spec, &ClassifyOptions::default()).unwrap();
        if c.outcome != Outcome::Inconclusive {
            prop_assert!(!c.reports.is_empty());
            prop_assert!(c.reports.iter().all(|r| !r.is_inconclusive()), "{:?}", c.reports);
        }
    }
}

#[test]
fn classify_agrees_with_power_case_on_grid() {
    let mut decided = 0;
    for p in [1.5, 2.0, 3.0] {
        for m in [0.5, 1.0, p - 1.0, p, p + 1.0] {
            for q in [0.5, 1.0, p - 1.0, p, p + 1.0] {
                for sign in [Sign::Plus, Sign::Minus] {
                    let spec = ProblemSpec::new(
                        p,
                        3,
                        sign,
                        GrowthExpr::power(1.0, m).unwrap(),
                        GrowthExpr::power(1.0, q).unwrap(),
                        1.0,
                    )
                    .unwrap();
                    let c = classify(&spec, &ClassifyOptions::default()).unwrap();
                    let pc = power_case(m, q, p, sign).unwrap();
                    if c.outcome != Outcome::Inconclusive {
                        decided += 1;
                        assert_eq!(c.outcome, pc.outcome, "p={p} m={m} q={q} {sign}: {} vs {}", c.clause, pc.clause);
                    }
                }
            }
        }
    }
    assert!(decided > 0);
}
