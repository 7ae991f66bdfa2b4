//! Power-case sweeps over `f = t^m`, `g = t^q`.
//!
//! Grid files are JSON, either a list of rows
//! `[{"p": 2, "m": 1, "q": 3, "sign": "minus"}, ...]` (optionally wrapped as
//! `{"rows": [...]}`), or axes `{"p": [...], "m": [...], "q": [...],
//! "sign": [...]}` expanded in the order p, sign, m, q. Entries of `m` and `q`
//! may be numbers or strings `"p"`, `"p+k"`, `"p-k"`. Optional top-level
//! `n` (default 3) and `v0` (default 1) apply to every row.

use std::path::Path;

use koradial::classify::{classify, cross_validate, power_case, ClassifyOptions, CrossValidateOptions, Outcome};
use koradial::nonlinearity::GrowthExpr;
use koradial::radial::{MarchControls, ProblemSpec, Sign};
use rayon::prelude::*;
use serde::Serialize;
use serde_json::Value;

use crate::config::{read_json, Format, RunConfig};
use crate::error::{CliError, CliResult, EXIT_NUMERIC};
use crate::output::{csv_table, emit, num, opt_num, to_json};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GridPoint {
    pub p: f64,
    pub n: u32,
    pub v0: f64,
    pub sign: Sign,
    pub m: f64,
    pub q: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct SweepRow {
    pub index: usize,
    pub p: f64,
    pub n: u32,
    pub sign: Sign,
    pub m: f64,
    pub q: f64,
    pub outcome: Option<Outcome>,
    pub clause: String,
    pub power_case: Option<Outcome>,
    /// Equal outcomes, or `classify` inconclusive.
    pub agree: Option<bool>,
    pub cv_consistent: Option<bool>,
    /// Smallest blow-up radius among the cross-validation runs.
    pub r_est_min: Option<f64>,
    pub error: Option<String>,
}

const HEADER: [&str; 13] =
    ["index", "p", "n", "sign", "m", "q", "outcome", "clause", "power_case", "agree", "cv_consistent", "r_est_min", "error"];

fn bad(msg: impl Into<String>) -> CliError {
    CliError::Config(format!("grid: {}", msg.into()))
}

/// A number, or `p`, `p+k`, `p-k`.
fn exponent(v: &Value, p: f64) -> CliResult<f64> {
    if let Some(x) = v.as_f64() {
        return Ok(x);
    }
    let s: String = v.as_str().ok_or_else(|| bad(format!("expected number or p-expression, got {v}")))?.chars().filter(|c| !c.is_whitespace()).collect();
    let rest = s.strip_prefix('p').ok_or_else(|| bad(format!("cannot parse '{s}'")))?;
    if rest.is_empty() {
        return Ok(p);
    }
    let (sign, k) = match rest.split_at(1) {
        ("+", k) => (1.0, k),
        ("-", k) => (-1.0, k),
        _ => return Err(bad(format!("cannot parse '{s}'"))),
    };
    let k: f64 = k.parse().map_err(|_| bad(format!("cannot parse '{s}'")))?;
    Ok(p + sign * k)
}

fn number(v: &Value, what: &str) -> CliResult<f64> {
    v.as_f64().ok_or_else(|| bad(format!("{what} must be a number, got {v}")))
}

fn sign_of(v: &Value) -> CliResult<Sign> {
    v.as_str().ok_or_else(|| bad(format!("sign must be a string, got {v}")))?.parse().map_err(|e| bad(format!("{e}")))
}

fn axis<'a>(obj: &'a serde_json::Map<String, Value>, key: &str) -> CliResult<&'a [Value]> {
    match obj.get(key) {
        Some(Value::Array(a)) => Ok(a),
        Some(other) => Ok(std::slice::from_ref(other)),
        None => Err(bad(format!("missing axis '{key}'"))),
    }
}

pub fn parse_grid(v: &Value) -> CliResult<Vec<GridPoint>> {
    let empty = serde_json::Map::new();
    let obj = v.as_object().unwrap_or(&empty);
    let n = match obj.get("n") {
        Some(x) => x.as_u64().and_then(|k| u32::try_from(k).ok()).ok_or_else(|| bad("n must be a positive integer"))?,
        None => 3,
    };
    let v0 = obj.get("v0").map(|x| number(x, "v0")).transpose()?.unwrap_or(1.0);
    let row_list = match v {
        Value::Array(a) => Some(a),
        Value::Object(o) => match o.get("rows") {
            Some(Value::Array(a)) => Some(a),
            Some(_) => return Err(bad("'rows' must be a list")),
            None => None,
        },
        _ => return Err(bad("expected a list of rows or an object")),
    };
    let mut points = Vec::new();
    if let Some(rows) = row_list {
        for row in rows {
            let r = row.as_object().ok_or_else(|| bad("each row must be an object"))?;
            let get = |k: &str| r.get(k).ok_or_else(|| bad(format!("row is missing '{k}'")));
            let p = number(get("p")?, "p")?;
            points.push(GridPoint {
                p,
                n,
                v0,
                sign: sign_of(get("sign")?)?,
                m: exponent(get("m")?, p)?,
                q: exponent(get("q")?, p)?,
            });
        }
        return Ok(points);
    }
    let (ps, signs, ms, qs) = (axis(obj, "p")?, axis(obj, "sign")?, axis(obj, "m")?, axis(obj, "q")?);
    for pv in ps {
        let p = number(pv, "p")?;
        for sv in signs {
            let sign = sign_of(sv)?;
            for mv in ms {
                for qv in qs {
                    points.push(GridPoint { p, n, v0, sign, m: exponent(mv, p)?, q: exponent(qv, p)? });
                }
            }
        }
    }
    Ok(points)
}

fn power_spec(pt: &GridPoint) -> koradial::Result<ProblemSpec> {
    ProblemSpec::new(pt.p, pt.n, pt.sign, GrowthExpr::power(1.0, pt.m)?, GrowthExpr::power(1.0, pt.q)?, pt.v0)
}

pub fn sweep_row(index: usize, pt: &GridPoint, cfg: &RunConfig) -> SweepRow {
    let mut row = SweepRow {
        index,
        p: pt.p,
        n: pt.n,
        sign: pt.sign,
        m: pt.m,
        q: pt.q,
        outcome: None,
        clause: String::new(),
        power_case: None,
        agree: None,
        cv_consistent: None,
        r_est_min: None,
        error: None,
    };
    let result = (|| -> koradial::Result<()> {
        let spec = power_spec(pt)?;
        let cls = classify(&spec, &ClassifyOptions { power_fast_path: false, ratio: cfg.ratio.clone() })?;
        let pc = power_case(pt.m, pt.q, pt.p, pt.sign)?;
        row.outcome = Some(cls.outcome);
        row.clause = cls.clause.clone();
        row.power_case = Some(pc.outcome);
        row.agree = Some(cls.outcome == Outcome::Inconclusive || cls.outcome == pc.outcome);
        if cfg.cross_validate && cls.outcome != Outcome::Inconclusive {
            let opts = CrossValidateOptions {
                v0_set: cfg.v0_set.clone(),
                r_max: cfg.r_max,
                controls: MarchControls { tol: cfg.tol, ..Default::default() },
            };
            let cv = cross_validate(&spec, &cls, &opts)?;
            row.cv_consistent = Some(cv.consistent);
            row.r_est_min = cv.runs.iter().filter_map(|r| r.r_est).reduce(f64::min);
        }
        Ok(())
    })();
    if let Err(e) = result {
        row.error = Some(e.to_string());
    }
    row
}

fn bool_field(b: Option<bool>) -> String {
    b.map(|x| x.to_string()).unwrap_or_default()
}

fn csv_rows(rows: &[SweepRow]) -> CliResult<String> {
    csv_table(
        &HEADER,
        rows.iter().map(|r| {
            vec![
                r.index.to_string(),
                num(r.p),
                r.n.to_string(),
                r.sign.to_string(),
                num(r.m),
                num(r.q),
                r.outcome.map(|o| format!("{o:?}")).unwrap_or_default(),
                r.clause.clone(),
                r.power_case.map(|o| format!("{o:?}")).unwrap_or_default(),
                bool_field(r.agree),
                bool_field(r.cv_consistent),
                opt_num(r.r_est_min),
                r.error.clone().unwrap_or_default(),
            ]
        }),
    )
}

/// Rows in input order, computed on `cfg.jobs` worker threads.
pub fn run_sweep(points: &[GridPoint], cfg: &RunConfig) -> CliResult<Vec<SweepRow>> {
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(cfg.jobs)
        .build()
        .map_err(|e| CliError::Numeric(format!("cannot start worker pool: {e}")))?;
    Ok(pool.install(|| points.par_iter().enumerate().map(|(i, pt)| sweep_row(i, pt, cfg)).collect()))
}

pub fn cmd_sweep(cfg: &RunConfig, grid: &Path) -> CliResult<u8> {
    let points = parse_grid(&read_json(grid)?)?;
    let rows = run_sweep(&points, cfg)?;
    let content = match cfg.format {
        Format::Csv => csv_rows(&rows)?,
        Format::Json => to_json(&rows)?,
    };
    emit(cfg.out.as_deref(), &content)?;
    let failed = rows.iter().filter(|r| r.error.is_some()).count();
    if failed > 0 {
        eprintln!("error: {failed} of {} rows failed", rows.len());
        return Ok(EXIT_NUMERIC);
    }
    Ok(0)
}
