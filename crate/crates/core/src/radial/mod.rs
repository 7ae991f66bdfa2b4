//! The radial initial-value problem and checks on its solutions.

pub mod checks;
pub mod integrator;
pub mod march;
pub mod picard;
pub mod spec;
pub mod supersolution;
pub mod trajectory;

pub use checks::{
    apriori_check, diagnostics_identity_check, exp_inequality_check, residual, running_power_integral,
    trajectory_residual, AprioriReport, DefectReport, ExpInequalityReport, PropertyCheck,
};
pub use march::{march, MarchControls};
pub use picard::{contraction_radius, picard_solve, PicardOptions};
pub use spec::{ProblemSpec, Sign};
pub use supersolution::{
    build_supersolution, max_radius, verify_supersolution, PhiNode, Supersolution, SupersolutionReport,
};
pub use trajectory::{BlowUpInfo, BoundednessSource, Node, RadialTrajectory, Termination};
