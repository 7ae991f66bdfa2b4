use std::path::Path;

use koradial::classify::{classify, cross_validate, power_case, Classification, ClassifyOptions, CrossValidateOptions};
use koradial::conditions::check_all;
use koradial::radial::{
    apriori_check, build_supersolution, march, trajectory_residual, verify_supersolution, MarchControls, Sign,
    Termination,
};
use serde::Serialize;
use serde_json::{json, Map, Value};

use crate::config::{Format, RunConfig};
use crate::error::{CliError, CliResult, EXIT_STEP_COLLAPSE};
use crate::output::{csv_table, emit, num, to_json, write_file};

fn out_dir(cfg: &RunConfig) -> CliResult<Option<&Path>> {
    match cfg.out.as_deref() {
        Some(dir) => {
            std::fs::create_dir_all(dir).map_err(|source| CliError::Write { path: dir.to_path_buf(), source })?;
            Ok(Some(dir))
        }
        None => Ok(None),
    }
}

pub fn cmd_check(cfg: &RunConfig) -> CliResult<u8> {
    let spec = cfg.problem()?;
    let reports = check_all(&spec.f, &spec.g, spec.p, spec.n, &cfg.ratio)?;
    let content = match cfg.format {
        Format::Json => {
            let verdicts: Map<String, Value> =
                reports.iter().map(|r| (r.condition.clone(), Value::from(r.verdict_label()))).collect();
            to_json(&json!({ "problem": spec, "verdicts": verdicts, "reports": reports }))?
        }
        Format::Csv => {
            let rows = reports.iter().map(|r| {
                let method = serde_json::to_value(r.method()).ok().and_then(|v| v.as_str().map(String::from));
                vec![r.condition.clone(), r.verdict_label().to_string(), method.unwrap_or_default()]
            });
            csv_table(&["condition", "verdict", "method"], rows)?
        }
    };
    emit(cfg.out.as_deref(), &content)?;
    Ok(0)
}

#[derive(Serialize)]
struct Sample {
    r: f64,
    v: Option<f64>,
    dv: Option<f64>,
}

pub fn cmd_solve(cfg: &RunConfig, at: &[f64]) -> CliResult<u8> {
    let spec = cfg.problem()?;
    let controls = MarchControls { tol: cfg.tol, ..Default::default() };
    let traj = march(&spec, cfg.r_max, &controls)?;
    let last = traj.last();
    let (blow_up, collapse_r) = match traj.termination {
        Termination::BlowUp(info) => (Some(info), None),
        Termination::StepCollapse { r_last } => (None, Some(r_last)),
        Termination::ReachedRmax => (None, None),
    };
    let samples: Vec<Sample> = at
        .iter()
        .map(|&r| {
            let s = traj.sample(r);
            Sample { r, v: s.map(|x| x.0), dv: s.map(|x| x.1) }
        })
        .collect();
    let summary = json!({
        "problem": spec,
        "r_max": cfg.r_max,
        "tol": cfg.tol,
        "termination": traj.termination.label(),
        "blow_up": blow_up,
        "step_collapse_r": collapse_r,
        "nodes": traj.nodes.len(),
        "r_last": last.r,
        "v_last": last.v,
        "dv_last": last.dv,
        "ln_v_last": last.ln_v,
        "ln_dv_last": last.ln_dv,
        "samples": samples,
        "apriori": apriori_check(&traj, &spec),
        "residual": trajectory_residual(&traj, &spec).ok(),
    });
    let summary = to_json(&summary)?;
    let table = || {
        csv_table(
            &["r", "v", "dv", "A", "W"],
            traj.nodes.iter().map(|nd| vec![num(nd.r), num(nd.v), num(nd.dv), num(nd.a), num(nd.w)]),
        )
    };
    match out_dir(cfg)? {
        Some(dir) => {
            write_file(&dir.join("summary.json"), &summary)?;
            write_file(&dir.join("trajectory.csv"), &table()?)?;
        }
        None => match cfg.format {
            Format::Json => emit(None, &summary)?,
            Format::Csv => emit(None, &table()?)?,
        },
    }
    if collapse_r.is_some() {
        eprintln!("warning: step size collapsed at r = {} without a blow-up signature", last.r);
        return Ok(EXIT_STEP_COLLAPSE);
    }
    Ok(0)
}

fn outcome_row(c: &Classification) -> Vec<String> {
    vec![format!("{:?}", c.outcome), c.clause.clone(), c.caveats.join("; ")]
}

pub fn cmd_classify(cfg: &RunConfig, power_fast_path: bool) -> CliResult<u8> {
    let spec = cfg.problem()?;
    let opts = ClassifyOptions { power_fast_path, ratio: cfg.ratio.clone() };
    let cls = classify(&spec, &opts)?;
    let power = match (spec.f.as_pure_power(), spec.g.as_pure_power()) {
        (Some((_, m)), Some((_, q))) => Some(power_case(m, q, spec.p, spec.sign)?),
        _ => None,
    };
    let cross = if cfg.cross_validate {
        if cls.outcome == koradial::classify::Outcome::Inconclusive {
            eprintln!("warning: classification is inconclusive, cross-validation skipped");
            None
        } else {
            let cv_opts = CrossValidateOptions {
                v0_set: cfg.v0_set.clone(),
                r_max: cfg.r_max,
                controls: MarchControls { tol: cfg.tol, ..Default::default() },
            };
            Some(cross_validate(&spec, &cls, &cv_opts)?)
        }
    } else {
        None
    };
    let content = match cfg.format {
        Format::Json => {
            let mut doc = Map::new();
            doc.insert("problem".into(), serde_json::to_value(&spec).unwrap_or(Value::Null));
            doc.insert("classification".into(), serde_json::to_value(&cls).unwrap_or(Value::Null));
            if let Some(pc) = &power {
                doc.insert("power_case".into(), json!({ "outcome": pc.outcome, "clause": pc.clause }));
            }
            if cfg.cross_validate {
                doc.insert("cross_validation".into(), serde_json::to_value(&cross).unwrap_or(Value::Null));
            }
            to_json(&Value::Object(doc))?
        }
        Format::Csv => {
            let mut row = outcome_row(&cls);
            row.push(cross.as_ref().map(|c| c.consistent.to_string()).unwrap_or_default());
            csv_table(&["outcome", "clause", "caveats", "cross_validation_consistent"], [row])?
        }
    };
    emit(cfg.out.as_deref(), &content)?;
    Ok(0)
}

/// Number of `v̄` samples written on `[0, R)`.
const VBAR_SAMPLES: usize = 100;

pub fn cmd_supersolution(cfg: &RunConfig, radius: Option<f64>) -> CliResult<u8> {
    let spec = cfg.problem()?;
    if spec.sign != Sign::Minus {
        return Err(CliError::Config("supersolution needs a problem with sign \"minus\"".into()));
    }
    let ss = build_supersolution(&spec.f, &spec.g, spec.p, spec.n, radius)?;
    if ss.radius_clamped {
        eprintln!(
            "warning: radius {} exceeds ((p-1)/p)^(p-1) = {}; clamped",
            ss.radius_requested, ss.radius
        );
    }
    let verification = verify_supersolution(&ss, &spec)?;
    let round_trip = ss.round_trip_error(200)?;
    let report = to_json(&json!({
        "problem": spec,
        "radius": ss.radius,
        "radius_requested": ss.radius_requested,
        "radius_clamped": ss.radius_clamped,
        "vbar0": ss.vbar0,
        "table_nodes": ss.nodes.len(),
        "tail_bound": ss.tail_bound,
        "gamma_identity_defect": ss.gamma_identity_defect,
        "round_trip_error": round_trip,
        "verification": verification,
    }))?;
    let phi_table = || {
        csv_table(
            &["t", "phi", "dphi_abs", "d2phi"],
            ss.nodes.iter().map(|nd| vec![num(nd.t), num(nd.phi), num(nd.dphi_abs), num(nd.d2phi)]),
        )
    };
    match out_dir(cfg)? {
        Some(dir) => {
            write_file(&dir.join("report.json"), &report)?;
            write_file(&dir.join("phi.csv"), &phi_table()?)?;
            let mut rows = Vec::with_capacity(VBAR_SAMPLES);
            for i in 0..VBAR_SAMPLES {
                let r = ss.radius * i as f64 / VBAR_SAMPLES as f64;
                rows.push(vec![num(r), num(ss.vbar(r)?)]);
            }
            write_file(&dir.join("vbar.csv"), &csv_table(&["r", "vbar"], rows)?)?;
        }
        None => match cfg.format {
            Format::Json => emit(None, &report)?,
            Format::Csv => emit(None, &phi_table()?)?,
        },
    }
    Ok(0)
}
