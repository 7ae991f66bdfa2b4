//! Existence and nonexistence tests for positive entire solutions of
//! `Delta_p u = f(u) +- g(|grad u|)`, together with a solver for the
//! associated radial initial-value problem.
//!
//! The crate is organised bottom-up:
//!
//! * [`nonlinearity`] represents `f`, `g` and the derived `F`, `g^{-1}`,
//!   `Gamma`.
//! * [`integrals`] holds adaptive quadrature and the improper-integral
//!   convergence classifier.
//! * [`conditions`] evaluates the individual integral and growth conditions.
//! * [`radial`] integrates the radial ODE and checks its solutions.
//! * [`classify`] combines condition verdicts into an existence verdict.

pub mod classify;
pub mod conditions;
pub mod error;
pub mod integrals;
pub mod nonlinearity;
pub mod radial;

pub use error::{Error, Result};
