//! Monotone nonlinearities and the functions derived from them.

pub mod asymptotic;
pub mod derived;
pub mod expr;
pub mod invert;
pub mod primitive;

pub use asymptotic::{Growth, EXPONENT_EPS};
pub use derived::DerivedFunctions;
pub use expr::{GrowthExpr, OpaqueMonotone, Term};
pub use invert::{invert_monotone, invert_on_log_line, InvertOptions};
pub use primitive::Primitive;

use crate::error::Result;

pub fn eval(expr: &GrowthExpr, t: f64) -> Result<f64> {
    expr.eval(t)
}

/// `F(s) = integral_0^s f(t) dt`.
pub fn primitive(f: &GrowthExpr, s: f64) -> Result<f64> {
    Primitive::new(f)?.eval(s)
}

pub fn asymptotic_signature(expr: &GrowthExpr) -> Result<Growth> {
    expr.asymptotic_signature()
}
