//! Acceptance suite. Runs every criterion, prints one line each, and exits
//! non-zero if any fails. Run with `cargo test --release --test acceptance`.

use std::process::{Command, ExitCode};
use std::time::{Duration, Instant};

use koradial::classify::{classify, ClassifyOptions, Outcome};
use koradial::conditions::{ko_f, ko_g, v_bounded_at_blowup};
use koradial::integrals::Method;
use koradial::nonlinearity::GrowthExpr;
use koradial::radial::{
    apriori_check, build_supersolution, contraction_radius, diagnostics_identity_check, exp_inequality_check, march,
    picard_solve, residual, verify_supersolution, MarchControls, PicardOptions, ProblemSpec, RadialTrajectory, Sign,
    Termination,
};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde_json::Value;

type Check = Result<String, String>;

fn pw(a: f64) -> GrowthExpr {
    GrowthExpr::power(1.0, a).unwrap()
}

fn controls(tol: f64) -> MarchControls {
    MarchControls { tol, ..Default::default() }
}

fn random_spec(rng: &mut ChaCha8Rng) -> ProblemSpec {
    let p = rng.gen_range(1.5..3.0);
    let sign = if rng.gen_bool(0.5) { Sign::Plus } else { Sign::Minus };
    let f = GrowthExpr::power(rng.gen_range(0.5..2.0), rng.gen_range(0.5..4.0)).unwrap();
    let g = GrowthExpr::power(rng.gen_range(0.5..2.0), rng.gen_range(0.5..4.0)).unwrap();
    ProblemSpec::new(p, rng.gen_range(1..5), sign, f, g, rng.gen_range(0.5..2.0)).unwrap()
}

fn err<E: std::fmt::Debug>(e: E) -> String {
    format!("{e:?}")
}

/// v = (1 - r^2)/8 solves Delta_4 v + |v'|^2 = 0 in the plane.
fn exact_residual() -> Check {
    let spec = ProblemSpec::new_test_mode(4.0, 2, Sign::Minus, GrowthExpr::zero(), pw(2.0), 0.125).map_err(err)?;
    let grid: Vec<f64> = (0..=80).map(|i| 0.1 + 0.01 * i as f64).collect();
    let res = residual(&spec, |r| (1.0 - r * r) / 8.0, &grid, 1e-4);
    let msg = format!("max residual {res:.3e} (limit 1e-8)");
    if res <= 1e-8 {
        Ok(msg)
    } else {
        Err(msg)
    }
}

fn exp_inequality() -> Check {
    let grid: Vec<f64> = (0..=100).map(|i| -5.0 + 0.1 * i as f64).collect();
    let mut worst_ulps = 0.0f64;
    for p in [1.5, 2.0, 3.0] {
        let rep = exp_inequality_check(p, &grid).map_err(err)?;
        if !rep.holds {
            return Err(format!("p={p}: defect negative ({:.3e})", rep.min_defect));
        }
        // Independent evaluation; errors are measured in ulps of the largest
        // term involved.
        let mut allowed = 0.0f64;
        for &x in &grid {
            let u = x.exp();
            let lap = (p - 1.0) * u.powf(p - 1.0);
            let bracket = (p - 1.0) * u.powf(p - 1.0) - u.powf(p);
            let exact = (p * x).exp();
            let scale = lap.abs().max(bracket.abs()).max(exact);
            worst_ulps = worst_ulps.max(((lap - bracket) - exact).abs() / (scale * f64::EPSILON));
            allowed = allowed.max(8.0 * f64::EPSILON * scale / exact);
        }
        if !(rep.max_rel_error <= allowed) {
            return Err(format!("p={p}: library relative error {:.3e} exceeds {allowed:.3e}", rep.max_rel_error));
        }
    }
    let msg = format!("worst error {worst_ulps:.1} ulp of the term scale (limit 8)");
    if worst_ulps <= 8.0 {
        Ok(msg)
    } else {
        Err(msg)
    }
}

fn linear_oracle() -> Check {
    let spec = ProblemSpec::new_test_mode(2.0, 3, Sign::Plus, pw(1.0), GrowthExpr::zero(), 1.0).map_err(err)?;
    let traj = march(&spec, 6.0, &controls(1e-9)).map_err(err)?;
    let mut worst = 0.0f64;
    for r in [0.5f64, 1.0, 2.0, 5.0] {
        let (v, _) = traj.sample(r).ok_or(format!("no sample at r={r}"))?;
        let exact = r.sinh() / r;
        worst = worst.max(((v - exact) / exact).abs());
    }
    let msg = format!("max relative error {worst:.3e} vs sinh(r)/r (limit 1e-6)");
    if worst <= 1e-6 {
        Ok(msg)
    } else {
        Err(msg)
    }
}

/// Hand-derived truth: for `t^q`, both tests diverge iff `q <= p-1`; for
/// `t^{p-1} (log t)^b` the f-test diverges iff `b <= p` and the g-test iff
/// `b <= 1`.
fn ko_truth_table() -> Check {
    let mut total = 0;
    let mut wrong = Vec::new();
    for p in [1.5f64, 2.0, 3.0] {
        let mut cases: Vec<(String, GrowthExpr, bool, bool)> = Vec::new();
        for q in [(p - 2.0).max(0.1), p - 1.0, p] {
            let div = q <= p - 1.0 + 1e-12;
            cases.push((format!("t^{q}"), pw(q), div, div));
        }
        for b in [0.5, 1.0, p] {
            let e = GrowthExpr::power_log(1.0, p - 1.0, b).map_err(err)?;
            cases.push((format!("t^{}(log)^{b}", p - 1.0), e, b <= p, b <= 1.0));
        }
        for (name, e, f_div, g_div) in cases {
            for (role, verdict, truth) in
                [("f", ko_f(&e, p).map_err(err)?, f_div), ("g", ko_g(&e, p).map_err(err)?, g_div)]
            {
                total += 1;
                if verdict.method != Method::Symbolic || verdict.diverges() != truth {
                    wrong.push(format!("p={p} {role}={name}: {:?} via {:?}", verdict.verdict, verdict.method));
                }
            }
        }
    }
    let msg = format!("{}/{total} symbolic verdicts match", total - wrong.len());
    if wrong.is_empty() {
        Ok(msg)
    } else {
        Err(format!("{msg}; {}", wrong.join(", ")))
    }
}

fn blow_up_consistency() -> Check {
    let mut count = 0;
    let v0s = [0.5, 1.0, 2.0];
    for p in [1.5, 2.0, 3.0] {
        let family = [
            (pw(p + 1.0), pw(1.0)),
            (pw(1.0), pw(p + 0.5)),
            (GrowthExpr::power_log(1.0, p - 1.0, 2.0 * p).map_err(err)?, pw(p - 0.5)),
            (pw(p + 0.5), pw(p)),
        ];
        for (k, (f, g)) in family.into_iter().enumerate() {
            let v0 = v0s[(k + count) % 3];
            if !(ko_f(&f, p).map_err(err)?.converges() || ko_g(&g, p).map_err(err)?.converges()) {
                return Err(format!("p={p} instance {k} does not satisfy the blow-up premise"));
            }
            let expected = v_bounded_at_blowup(&g, p).map_err(err)?.converges();
            let spec = ProblemSpec::new(p, 3, Sign::Plus, f, g, v0).map_err(err)?;
            let traj = march(&spec, 1e3, &controls(1e-9)).map_err(err)?;
            match traj.termination {
                Termination::BlowUp(info) if info.r_est.is_finite() => {
                    if info.v_bounded != expected {
                        return Err(format!("p={p} instance {k} v0={v0}: v_bounded {} expected {expected}", info.v_bounded));
                    }
                }
                other => return Err(format!("p={p} instance {k} v0={v0}: {other:?}")),
            }
            count += 1;
        }
    }
    Ok(format!("{count}/12 blow up with matching boundedness"))
}

/// Direct checks on raw node values, independent of `apriori_check`.
fn raw_invariants(traj: &RadialTrajectory, spec: &ProblemSpec) -> Result<(), String> {
    let finite: Vec<_> = traj.nodes.iter().filter(|n| n.v.is_finite() && n.dv.is_finite()).collect();
    let vmax = finite.iter().map(|n| n.v).fold(0.0, f64::max);
    for (i, nd) in finite.iter().enumerate() {
        if !(nd.v > 0.0) || (i > 0 && !(nd.dv > 0.0)) {
            return Err(format!("sign violated at r={}", nd.r));
        }
        let bound = spec.v0 + traj.r_max * nd.dv + 1e-8;
        if nd.v > bound * (1.0 + 1e-12) {
            return Err(format!("affine bound violated at r={}", nd.r));
        }
    }
    for w in finite.windows(3) {
        let (h1, h2) = (w[1].r - w[0].r, w[2].r - w[1].r);
        if h1 <= 1e-6 * w[1].r || h2 <= 1e-6 * w[1].r {
            continue;
        }
        let d2 = (w[2].v - w[1].v) - h2 / h1 * (w[1].v - w[0].v);
        if d2 < -1e-8 * vmax {
            return Err(format!("second difference {d2:.3e} at r={}", w[1].r));
        }
    }
    Ok(())
}

fn apriori_invariants() -> Check {
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    let (mut plus, mut minus) = (0, 0);
    for i in 0..20 {
        let spec = random_spec(&mut rng);
        let traj = march(&spec, 1e3, &controls(1e-9)).map_err(err)?;
        let rep = apriori_check(&traj, &spec);
        if !rep.passed {
            return Err(format!("spec {i}: {:?}", rep.checks.iter().filter(|c| !c.passed).collect::<Vec<_>>()));
        }
        raw_invariants(&traj, &spec).map_err(|e| format!("spec {i}: {e}"))?;
        match spec.sign {
            Sign::Plus => plus += 1,
            Sign::Minus => minus += 1,
        }
    }
    Ok(format!("20/20 trajectories ({plus} plus, {minus} minus)"))
}

fn method_cross_check() -> Check {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let mut worst = 0.0f64;
    for i in 0..20 {
        let spec = random_spec(&mut rng);
        let r1 = contraction_radius(&spec, 0.5 * spec.v0, 1.0);
        let pic = picard_solve(&spec, r1, &PicardOptions::default()).map_err(err)?;
        let mar = march(&spec, r1, &controls(1e-11)).map_err(err)?;
        for nd in &pic.nodes {
            let v = mar.sample(nd.r).map_or(spec.v0, |s| s.0);
            let d = (v - nd.v).abs();
            if !(d <= 1e-6) {
                return Err(format!("spec {i}: |picard - march| = {d:.3e} at r={}", nd.r));
            }
            worst = worst.max(d);
        }
    }
    Ok(format!("sup distance {worst:.3e} over 20 specs (limit 1e-6)"))
}

fn identity_check() -> Check {
    let fine = MarchControls { tol: 1e-9, max_step_ratio: 1.01, ..Default::default() };
    let mut worst = 0.0f64;
    let mut runs = 0;
    for p in [1.5, 2.0, 3.0] {
        for (f, g) in [(pw(2.0), pw(1.0)), (pw(1.0), pw(1.0)), (pw(p - 1.0), pw(0.5))] {
            let spec = ProblemSpec::new(p, 3, Sign::Plus, f, g, 1.0).map_err(err)?;
            let traj = march(&spec, 1e3, &fine).map_err(err)?;
            let d = diagnostics_identity_check(&traj, &spec).map_err(err)?;
            if d.nodes_checked == 0 || !(d.max_defect <= 1e-4) {
                return Err(format!("p={p}: {d:?}"));
            }
            worst = worst.max(d.max_defect);
            runs += 1;
        }
    }
    Ok(format!("max relative defect {worst:.3e} over {runs} trajectories (limit 1e-4)"))
}

fn supersolution() -> Check {
    let (f, g) = (pw(5.0), pw(2.0));
    let spec = ProblemSpec::new(2.0, 3, Sign::Minus, f.clone(), g.clone(), 1.0).map_err(err)?;
    let ss = build_supersolution(&f, &g, 2.0, 3, None).map_err(err)?;
    let rt = ss.round_trip_error(200).map_err(err)?;
    let rep = verify_supersolution(&ss, &spec).map_err(err)?;
    let msg = format!("round trip {rt:.3e} (limit 1e-8), min slack {:.3e} on {} nodes", rep.min_slack, rep.nodes_checked);
    if rt <= 1e-8 && rep.min_slack >= 0.0 && rep.nodes_checked > 0 {
        Ok(msg)
    } else {
        Err(msg)
    }
}

/// Exponent oracle for pure powers `f = t^m`, `g = t^q`.
fn expected_outcome(p: f64, sign: &str, m: f64, q: f64) -> &'static str {
    let eps = 1e-9;
    let nonexistence = match sign {
        "plus" => m > p - 1.0 + eps || q > p - 1.0 + eps,
        // Gamma converges iff m + 1 > max(q + 1, p); otherwise one of the
        // existence integrals diverges.
        _ => m > q + eps && m > p - 1.0 + eps,
    };
    if nonexistence {
        "Nonexistence"
    } else {
        "Existence"
    }
}

fn phase_diagram() -> Check {
    let dir = tempfile::tempdir().map_err(err)?;
    let grid = dir.path().join("grid.json");
    std::fs::write(&grid, r#"{"p": [1.5, 2, 3], "sign": ["plus", "minus"], "m": [0.3, "p-1", "p", "p+1"], "q": [0.3, "p-1", "p", "p+1"]}"#)
        .map_err(err)?;
    let out = Command::new(env!("CARGO_BIN_EXE_koradial"))
        .args(["sweep", "--grid"])
        .arg(&grid)
        .args(["--format", "json", "--jobs", "4"])
        .output()
        .map_err(err)?;
    if !out.status.success() {
        return Err(format!("sweep exited with {:?}: {}", out.status.code(), String::from_utf8_lossy(&out.stderr)));
    }
    let rows: Vec<Value> = serde_json::from_slice(&out.stdout).map_err(err)?;
    let (mut decided, mut agree) = (0, 0);
    for row in &rows {
        let p = row["p"].as_f64().unwrap_or(f64::NAN);
        let m = row["m"].as_f64().unwrap_or(f64::NAN);
        let q = row["q"].as_f64().unwrap_or(f64::NAN);
        let sign = row["sign"].as_str().unwrap_or("");
        let truth = expected_outcome(p, sign, m, q);
        let outcome = row["outcome"].as_str().unwrap_or("");
        let power = row["power_case"].as_str().unwrap_or("");
        if power != truth {
            return Err(format!("p={p} {sign} m={m} q={q}: power_case {power}, expected {truth}"));
        }
        if outcome != "Inconclusive" {
            decided += 1;
            if outcome == power && outcome == truth {
                agree += 1;
            }
        }
    }
    let msg = format!("{} rows; classify decided {decided}, agreeing {agree}/{decided}", rows.len());
    if rows.len() == 96 && decided > 0 && agree == decided {
        Ok(msg)
    } else {
        Err(msg)
    }
}

fn long_existence() -> Check {
    let cases = [
        (2.0, Sign::Plus, pw(1.0), pw(1.0)),
        (3.0, Sign::Plus, pw(2.0), pw(2.0)),
        (1.5, Sign::Plus, pw(0.5), pw(0.5)),
        (2.0, Sign::Minus, pw(1.0), pw(1.0)),
        (3.0, Sign::Minus, pw(2.0), pw(3.0)),
        (2.0, Sign::Minus, pw(2.0), pw(3.0)),
    ];
    for (p, sign, f, g) in cases {
        let spec = ProblemSpec::new(p, 3, sign, f, g, 1.0).map_err(err)?;
        let cls = classify(&spec, &ClassifyOptions::default()).map_err(err)?;
        if cls.outcome != Outcome::Existence {
            return Err(format!("p={p} {sign}: classified {:?} ({})", cls.outcome, cls.clause));
        }
        let traj = march(&spec, 1e3, &controls(1e-9)).map_err(err)?;
        if !matches!(traj.termination, Termination::ReachedRmax) {
            return Err(format!("p={p} {sign}: {:?} at r={}", traj.termination, traj.r_last()));
        }
    }
    Ok("6/6 existence instances reach r = 1e3".into())
}

fn main() -> ExitCode {
    let criteria: [(&str, u64, fn() -> Check); 11] = [
        ("exact-solution residual", 1, exact_residual),
        ("exponential inequality", 1, exp_inequality),
        ("linear-case oracle", 1, linear_oracle),
        ("KO truth table", 5, ko_truth_table),
        ("blow-up consistency", 30, blow_up_consistency),
        ("a priori invariants", 30, apriori_invariants),
        ("Picard vs march", 60, method_cross_check),
        ("A' identity", 10, identity_check),
        ("super-solution", 10, supersolution),
        ("power-case phase diagram", 60, phase_diagram),
        ("existence-side long integration", 60, long_existence),
    ];
    let mut failed = 0;
    for (i, (name, budget, check)) in criteria.iter().enumerate() {
        let start = Instant::now();
        let result = check();
        let elapsed = start.elapsed();
        let over = elapsed > Duration::from_secs(*budget);
        let (status, detail) = match (&result, over) {
            (Ok(d), false) => ("PASS", d.clone()),
            (Ok(d), true) => ("FAIL", format!("{d}; over the {budget} s budget")),
            (Err(d), _) => ("FAIL", d.clone()),
        };
        if status == "FAIL" {
            failed += 1;
        }
        println!("criterion {:>2} {status} {name}: {detail} [{:.2} s]", i + 1, elapsed.as_secs_f64());
    }
    println!("{} of {} criteria passed", criteria.len() - failed, criteria.len());
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
