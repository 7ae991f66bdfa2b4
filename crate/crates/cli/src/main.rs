//! `koradial`: condition checks, radial solves, classification and power-case
//! sweeps for `Delta_p u = f(u) +- g(|grad u|)`.

mod commands;
mod config;
mod error;
mod output;
mod sweep;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use koradial::conditions::GrowthRatioOptions;

use config::{Format, RunConfig};
use error::CliResult;

const EXIT_CODES: &str = "\
Exit codes:
  0  success (for solve: reached r_max or a clean blow-up)
  2  malformed problem file, grid file or option
  3  numerical failure
  4  solve: step size collapsed without a blow-up signature
  5  supersolution: the Gamma integral does not converge";

#[derive(Parser, Debug)]
#[command(name = "koradial", version, about = "Existence and blow-up of positive solutions to p-Laplacian equations with gradient terms", after_help = EXIT_CODES)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Evaluate every integral and growth condition.
    Check {
        #[command(flatten)]
        common: Common,
        #[command(flatten)]
        ratio: RatioArgs,
    },
    /// Integrate the radial problem from r = 0.
    Solve {
        #[command(flatten)]
        common: Common,
        /// Radii at which to report interpolated v and v'.
        #[arg(long, value_delimiter = ',')]
        at: Vec<f64>,
    },
    /// Decide existence or nonexistence of entire positive solutions.
    Classify {
        #[command(flatten)]
        common: Common,
        #[command(flatten)]
        ratio: RatioArgs,
        #[command(flatten)]
        cross: CrossArgs,
        /// Decide pure powers by exponent arithmetic alone.
        #[arg(long)]
        power_fast_path: bool,
    },
    /// Build and verify the explicit super-solution on a ball (sign minus).
    Supersolution {
        #[command(flatten)]
        common: Common,
        /// Ball radius; defaults to, and is clamped at, ((p-1)/p)^(p-1).
        #[arg(long)]
        radius: Option<f64>,
    },
    /// Classify a grid of power nonlinearities f = t^m, g = t^q.
    Sweep {
        /// JSON grid file.
        #[arg(long)]
        grid: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long, value_enum, default_value = "csv")]
        format: Format,
        #[arg(long, default_value_t = 1e3)]
        rmax: f64,
        #[arg(long, default_value_t = 1e-9)]
        tol: f64,
        /// Worker threads.
        #[arg(long, default_value_t = 1)]
        jobs: usize,
        #[command(flatten)]
        ratio: RatioArgs,
        #[command(flatten)]
        cross: CrossArgs,
    },
}

#[derive(Args, Debug)]
struct Common {
    /// Problem file: {p, n, sign, v0, f: {terms: [...]}, g: {terms: [...]}}.
    #[arg(long)]
    problem: PathBuf,
    /// Output file (check, classify) or directory (solve, supersolution).
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long, value_enum, default_value = "json")]
    format: Format,
    /// Radius at which a solve stops.
    #[arg(long, default_value_t = 1e3)]
    rmax: f64,
    /// Integration tolerance.
    #[arg(long, default_value_t = 1e-9)]
    tol: f64,
    /// Replace g by the zero function (validation runs only).
    #[arg(long)]
    test_mode_zero_g: bool,
}

#[derive(Args, Debug)]
struct RatioArgs {
    /// Values of A probed by the growth-ratio conditions.
    #[arg(long, value_delimiter = ',')]
    a_grid: Option<Vec<f64>>,
    /// Margin below (liminf) or above (limsup) 1/p.
    #[arg(long)]
    eps0: Option<f64>,
}

#[derive(Args, Debug)]
struct CrossArgs {
    /// Confirm the classification with radial solves from each v0.
    #[arg(long)]
    cross_validate: bool,
    #[arg(long, value_delimiter = ',', default_value = "0.5,1,2")]
    v0_set: Vec<f64>,
}

fn ratio_options(r: Option<&RatioArgs>) -> GrowthRatioOptions {
    let mut opts = GrowthRatioOptions::default();
    if let Some(r) = r {
        if let Some(a) = &r.a_grid {
            opts.a_grid = a.clone();
        }
        if let Some(e) = r.eps0 {
            opts.eps0 = e;
        }
    }
    opts
}

fn config(common: &Common, ratio: Option<&RatioArgs>, cross: Option<&CrossArgs>) -> CliResult<RunConfig> {
    RunConfig {
        problem: Some(common.problem.clone()),
        out: common.out.clone(),
        format: common.format,
        tol: common.tol,
        r_max: common.rmax,
        v0_set: cross.map_or_else(|| vec![0.5, 1.0, 2.0], |c| c.v0_set.clone()),
        ratio: ratio_options(ratio),
        jobs: 1,
        cross_validate: cross.is_some_and(|c| c.cross_validate),
        test_mode_zero_g: common.test_mode_zero_g,
    }
    .validate()
}

fn run(cmd: Command) -> CliResult<u8> {
    match cmd {
        Command::Check { common, ratio } => commands::cmd_check(&config(&common, Some(&ratio), None)?),
        Command::Solve { common, at } => commands::cmd_solve(&config(&common, None, None)?, &at),
        Command::Classify { common, ratio, cross, power_fast_path } => {
            commands::cmd_classify(&config(&common, Some(&ratio), Some(&cross))?, power_fast_path)
        }
        Command::Supersolution { common, radius } => {
            if let Some(r) = radius {
                config::positive("--radius", r)?;
            }
            commands::cmd_supersolution(&config(&common, None, None)?, radius)
        }
        Command::Sweep { grid, out, format, rmax, tol, jobs, ratio, cross } => {
            let cfg = RunConfig {
                problem: None,
                out,
                format,
                tol,
                r_max: rmax,
                v0_set: cross.v0_set.clone(),
                ratio: ratio_options(Some(&ratio)),
                jobs,
                cross_validate: cross.cross_validate,
                test_mode_zero_g: false,
            }
            .validate()?;
            sweep::cmd_sweep(&cfg, &grid)
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli.command) {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
