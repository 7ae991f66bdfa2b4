use serde::{Deserialize, Serialize};

use super::spec::Sign;

/// One sample of the radial solution. `ln_v` and `ln_dv` are authoritative;
/// `v` and `dv` are their exponentials and may overflow to infinity on long
/// runs.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Node {
    pub r: f64,
    pub v: f64,
    pub dv: f64,
    /// `v''(r)` from the differential equation.
    pub d2v: f64,
    pub ln_v: f64,
    pub ln_dv: f64,
    /// `r^{n-1} v' / F(v)^{1/p}`.
    pub a: f64,
    /// `1 + g(v')/f(v) - (v')^p / (p F(v))`.
    pub w: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum BoundednessSource {
    /// Decided by the decay of `dv/d ln w` over the last part of the run.
    Trend,
    /// The trend was not decisive; taken from the integral test.
    Condition,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BlowUpInfo {
    pub r_est: f64,
    /// Width of the last accepted step in `r`.
    pub r_est_uncertainty: f64,
    pub v_bounded: bool,
    pub v_bounded_source: BoundednessSource,
    /// Fitted slope of `ln(dv/dz)` against `z = ln w`, if enough nodes exist.
    pub trend_slope: Option<f64>,
    /// Whether the trend and the integral test agree, when both are decisive.
    pub trend_agrees: Option<bool>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum Termination {
    ReachedRmax,
    BlowUp(BlowUpInfo),
    /// The step size collapsed without the blow-up signature.
    StepCollapse { r_last: f64 },
}

impl Termination {
    pub fn label(&self) -> &'static str {
        match self {
            Termination::ReachedRmax => "ReachedRmax",
            Termination::BlowUp(_) => "BlowUp",
            Termination::StepCollapse { .. } => "StepCollapse",
        }
    }

    pub fn is_blow_up(&self) -> bool {
        matches!(self, Termination::BlowUp(_))
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RadialTrajectory {
    pub p: f64,
    pub n: u32,
    pub sign: Sign,
    pub v0: f64,
    /// Radius the run was asked to reach.
    pub r_max: f64,
    pub nodes: Vec<Node>,
    pub termination: Termination,
}

impl RadialTrajectory {
    pub fn last(&self) -> &Node {
        self.nodes.last().expect("trajectory has nodes")
    }

    pub fn r_last(&self) -> f64 {
        self.last().r
    }

    /// `(v(r), v'(r))` by quintic Hermite interpolation on `v, v', v''`.
    /// Returns `None` outside the sampled range.
    pub fn sample(&self, r: f64) -> Option<(f64, f64)> {
        let nodes = &self.nodes;
        if nodes.is_empty() || r < nodes[0].r || r > nodes[nodes.len() - 1].r {
            return None;
        }
        let i = match nodes.binary_search_by(|nd| nd.r.total_cmp(&r)) {
            Ok(i) => return Some((nodes[i].v, nodes[i].dv)),
            Err(i) => i - 1,
        };
        let (a, b) = (&nodes[i], &nodes[i + 1]);
        let h = b.r - a.r;
        let t = (r - a.r) / h;
        Some(quintic_hermite(a, b, h, t))
    }
}

/// Value and derivative of the quintic Hermite interpolant at `t in [0, 1]`.
fn quintic_hermite(a: &Node, b: &Node, h: f64, t: f64) -> (f64, f64) {
    let t2 = t * t;
    let t3 = t2 * t;
    let t4 = t3 * t;
    let t5 = t4 * t;
    let h0 = 1.0 - 10.0 * t3 + 15.0 * t4 - 6.0 * t5;
    let h1 = t - 6.0 * t3 + 8.0 * t4 - 3.0 * t5;
    let h2 = 0.5 * (t2 - 3.0 * t3 + 3.0 * t4 - t5);
    let h3 = 0.5 * (t3 - 2.0 * t4 + t5);
    let h4 = -4.0 * t3 + 7.0 * t4 - 3.0 * t5;
    let h5 = 10.0 * t3 - 15.0 * t4 + 6.0 * t5;
    let d0 = -30.0 * t2 + 60.0 * t3 - 30.0 * t4;
    let d1 = 1.0 - 18.0 * t2 + 32.0 * t3 - 15.0 * t4;
    let d2 = 0.5 * (2.0 * t - 9.0 * t2 + 12.0 * t3 - 5.0 * t4);
    let d3 = 0.5 * (3.0 * t2 - 8.0 * t3 + 5.0 * t4);
    let d4 = -12.0 * t2 + 28.0 * t3 - 15.0 * t4;
    let d5 = 30.0 * t2 - 60.0 * t3 + 30.0 * t4;
    let v = h0 * a.v + h1 * h * a.dv + h2 * h * h * a.d2v + h3 * h * h * b.d2v + h4 * h * b.dv + h5 * b.v;
    let dv = (d0 * a.v + d1 * h * a.dv + d2 * h * h * a.d2v + d3 * h * h * b.d2v + d4 * h * b.dv + d5 * b.v) / h;
    (v, dv)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn node(r: f64) -> Node {
        let v = r.exp();
        Node { r, v, dv: v, d2v: v, ln_v: r, ln_dv: r, a: 0.0, w: 0.0 }
    }

    #[test]
    fn hermite_reproduces_exponential() {
        let traj = RadialTrajectory {
            p: 2.0,
            n: 1,
            sign: Sign::Plus,
            v0: 1.0,
            r_max: 1.0,
            nodes: vec![node(0.0), node(0.1), node(0.2)],
            termination: Termination::ReachedRmax,
        };
        for &r in &[0.0, 0.03, 0.1, 0.17, 0.2] {
            let (v, dv) = traj.sample(r).unwrap();
            assert!((v - r.exp()).abs() < 5e-11, "{r} {v} {dv}");
            assert!((dv - r.exp()).abs() < 1e-9, "{r}");
        }
        assert!(traj.sample(0.3).is_none());
    }
}
