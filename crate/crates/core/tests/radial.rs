use koradial::conditions::{ko_f, ko_g, sobolev_exclusion, v_bounded_at_blowup};
use koradial::nonlinearity::GrowthExpr;
use koradial::radial::checks::power_integral_increments;
use koradial::radial::{
    apriori_check, contraction_radius, march, picard_solve, trajectory_residual, MarchControls, PicardOptions,
    ProblemSpec, Sign, Termination,
};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

const TOL: f64 = 1e-9;

fn controls() -> MarchControls {
    MarchControls { tol: TOL, ..Default::default() }
}

fn fine_controls() -> MarchControls {
    MarchControls { tol: TOL, max_step_ratio: 1.01, ..Default::default() }
}

fn random_spec(rng: &mut ChaCha8Rng) -> ProblemSpec {
    let p = rng.gen_range(1.5..3.0);
    let sign = if rng.gen_bool(0.5) { Sign::Plus } else { Sign::Minus };
    let f = GrowthExpr::power(rng.gen_range(0.5..2.0), rng.gen_range(0.5..4.0)).unwrap();
    let g = GrowthExpr::power(rng.gen_range(0.5..2.0), rng.gen_range(0.5..4.0)).unwrap();
    ProblemSpec::new(p, rng.gen_range(1..5), sign, f, g, rng.gen_range(0.5..2.0)).unwrap()
}

fn pw(a: f64) -> GrowthExpr {
    GrowthExpr::power(1.0, a).unwrap()
}

#[test]
fn random_trajectories_pass_apriori_checks() {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    for _ in 0..20 {
        let spec = random_spec(&mut rng);
        let traj = march(&spec, 1e3, &controls()).unwrap();
        assert!(!matches!(traj.termination, Termination::StepCollapse { .. }), "{spec:?}");
        let rep = apriori_check(&traj, &spec);
        assert!(rep.passed, "{spec:?}\n{rep:?}");
    }
}

#[test]
fn picard_trajectories_pass_apriori_checks() {
    let mut rng = ChaCha8Rng::seed_from_u64(12);
    for _ in 0..10 {
        let spec = random_spec(&mut rng);
        let r1 = contraction_radius(&spec, 0.5 * spec.v0, 1.0);
        let traj = picard_solve(&spec, r1, &PicardOptions::default()).unwrap();
        let rep = apriori_check(&traj, &spec);
        assert!(rep.passed, "{spec:?}\n{rep:?}");
    }
}

#[test]
fn residual_stays_within_ten_tolerances() {
    let mut rng = ChaCha8Rng::seed_from_u64(13);
    for _ in 0..20 {
        let spec = random_spec(&mut rng);
        let traj = march(&spec, 1e3, &fine_controls()).unwrap();
        let d = trajectory_residual(&traj, &spec).unwrap();
        assert!(d.max_defect <= 10.0 * TOL, "{spec:?} defect {d:?}");
    }
}

#[test]
fn picard_and_march_agree_on_the_contraction_ball() {
    let mut rng = ChaCha8Rng::seed_from_u64(14);
    for _ in 0..20 {
        let spec = random_spec(&mut rng);
        let r1 = rng.gen_range(0.1..1.0f64).min(contraction_radius(&spec, 0.5 * spec.v0, 1.0));
        let pic = picard_solve(&spec, r1, &PicardOptions::default()).unwrap();
        let mar = march(&spec, r1, &MarchControls { tol: 1e-11, ..Default::default() }).unwrap();
        let mut worst = 0.0f64;
        for nd in &pic.nodes {
            let v = mar.sample(nd.r).map_or(spec.v0, |s| s.0);
            worst = worst.max((v - nd.v).abs());
        }
        assert!(worst <= 1e-6, "{spec:?} r1={r1} sup={worst}");
    }
}

fn analytic_family() -> Vec<ProblemSpec> {
    let mut out = Vec::new();
    for p in [1.5, 2.0, 3.0] {
        for (m, b, q) in [(p + 1.0, 0.0, 1.0), (1.0, 0.0, p + 0.5), (p - 1.0, 2.0 * p, p - 0.5), (p + 0.5, 0.0, p)] {
            let f = GrowthExpr::power_log(1.0, m, b).unwrap();
            out.push(ProblemSpec::new(p, 3, Sign::Plus, f, pw(q), 1.0).unwrap());
        }
    }
    out
}

#[test]
fn blow_up_boundedness_matches_the_integral_test() {
    let mut seen = 0;
    for spec in analytic_family() {
        let traj = march(&spec, 1e3, &controls()).unwrap();
        if let Termination::BlowUp(info) = traj.termination {
            seen += 1;
            let expected = v_bounded_at_blowup(&spec.g, spec.p).unwrap().converges();
            assert_eq!(info.v_bounded, expected, "{spec:?} {info:?}");
        }
    }
    assert!(seen >= 8);
}

#[test]
fn nonexistence_side_always_blows_up() {
    for spec in analytic_family() {
        let nonexist = ko_f(&spec.f, spec.p).unwrap().converges() || ko_g(&spec.g, spec.p).unwrap().converges();
        if !nonexist {
            continue;
        }
        for v0 in [0.5, 1.0, 2.0] {
            let traj = march(&spec.with_v0(v0).unwrap(), 1e3, &controls()).unwrap();
            match traj.termination {
                Termination::BlowUp(info) => assert!(info.r_est.is_finite() && info.r_est >= traj.r_last()),
                other => panic!("{spec:?} v0={v0}: {other:?}"),
            }
        }
    }
}

#[test]
fn gradient_power_integral_keeps_growing_at_blow_up() {
    let mut checked = 0;
    for spec in analytic_family() {
        if !sobolev_exclusion(&spec.g, spec.p).unwrap().diverges() {
            continue;
        }
        let traj = march(&spec, 1e3, &controls()).unwrap();
        if !traj.termination.is_blow_up() {
            continue;
        }
        let inc = power_integral_increments(&traj, 1.0, 5);
        assert_eq!(inc.len(), 5, "{spec:?}");
        // Log-divergent cases give equal increments; allow rounding there.
        for w in inc.windows(2) {
            assert!(w[1] >= w[0] * (1.0 - 1e-9), "{spec:?} increments {inc:?}");
        }
        checked += 1;
    }
    assert!(checked > 0);
}
