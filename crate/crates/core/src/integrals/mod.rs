pub mod improper;
pub mod quad;

pub use improper::{
    classify_improper, classify_numeric, ConvergenceVerdict, Evidence, Integrand, Method, Verdict,
};
pub use quad::{gauss_legendre10, quad, quad_with, QuadOptions, QuadResult};
