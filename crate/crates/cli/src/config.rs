use std::path::{Path, PathBuf};

use clap::ValueEnum;
use koradial::conditions::GrowthRatioOptions;
use koradial::radial::ProblemSpec;
use serde_json::{json, Value};

use crate::error::{CliError, CliResult};

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Json,
    Csv,
}

/// Validated settings shared by every subcommand.
#[derive(Debug, Clone)]
pub struct RunConfig {
    pub problem: Option<PathBuf>,
    pub out: Option<PathBuf>,
    pub format: Format,
    pub tol: f64,
    pub r_max: f64,
    pub v0_set: Vec<f64>,
    pub ratio: GrowthRatioOptions,
    pub jobs: usize,
    pub cross_validate: bool,
    pub test_mode_zero_g: bool,
}

pub fn positive(name: &str, x: f64) -> CliResult<f64> {
    if x > 0.0 && x.is_finite() {
        Ok(x)
    } else {
        Err(CliError::Config(format!("{name} must be positive and finite, got {x}")))
    }
}

impl RunConfig {
    pub fn validate(self) -> CliResult<Self> {
        positive("--tol", self.tol)?;
        positive("--rmax", self.r_max)?;
        if self.jobs == 0 {
            return Err(CliError::Config("--jobs must be at least 1".into()));
        }
        if self.v0_set.is_empty() {
            return Err(CliError::Config("--v0-set must list at least one value".into()));
        }
        for &v in &self.v0_set {
            positive("--v0-set entry", v)?;
        }
        for &a in &self.ratio.a_grid {
            positive("--a-grid entry", a)?;
        }
        positive("--eps0", self.ratio.eps0)?;
        Ok(self)
    }

    pub fn problem(&self) -> CliResult<ProblemSpec> {
        let path = self.problem.as_deref().ok_or_else(|| CliError::Config("--problem PATH is required".into()))?;
        load_problem(path, self.test_mode_zero_g)
    }
}

pub fn read_json(path: &Path) -> CliResult<Value> {
    let text = std::fs::read_to_string(path).map_err(|source| CliError::Read { path: path.to_path_buf(), source })?;
    serde_json::from_str(&text).map_err(|e| CliError::Config(format!("{}: malformed JSON: {e}", path.display())))
}

/// Reads `{p, n, sign, v0, f: {terms}, g: {terms}}`. With `zero_g` the `g`
/// entry is replaced by the zero function and may be omitted.
pub fn load_problem(path: &Path, zero_g: bool) -> CliResult<ProblemSpec> {
    let mut v = read_json(path)?;
    if zero_g {
        match v.as_object_mut() {
            Some(obj) => {
                obj.insert("g".into(), json!({ "terms": [] }));
            }
            None => return Err(CliError::Config(format!("{}: expected a JSON object", path.display()))),
        }
    }
    ProblemSpec::from_json_value(v, zero_g)
        .map_err(|e| CliError::Config(format!("{}: {e}", path.display())))
}
