//! Fixed-point iteration of the integral form of the radial problem,
//!
//! ```text
//! T v(r) = v0 + integral_0^r H^{-1}( integral_0^s (t/s)^{n-1} (f(v) +- g(|v'|)) dt ) ds,
//! ```
//!
//! with `H(t) = |t|^{p-2} t`, on a fixed grid over `[0, r1]`.

use super::spec::{ProblemSpec, Sign};
use super::trajectory::{Node, RadialTrajectory, Termination};
use crate::error::{Error, Result};
use crate::integrals::quad::gl10_points;
use crate::nonlinearity::Primitive;

#[derive(Debug, Clone)]
pub struct PicardOptions {
    /// Number of grid nodes, including both ends.
    pub nodes: usize,
    /// Node `i` sits at `r1 (i / (nodes-1))^grading`; `1` gives a uniform grid.
    pub grading: f64,
    pub max_iter: usize,
    /// Stop when the C^1 grid distance between iterates drops below this.
    pub tol: f64,
    /// Bound on `|v - v0|` in the invariant ball; `v0 / 2` when `None`.
    pub m2: Option<f64>,
    /// Bound on `|v'|` in the invariant ball.
    pub m3: f64,
}

impl Default for PicardOptions {
    fn default() -> Self {
        Self { nodes: 512, grading: 3.0, max_iter: 500, tol: 1e-13, m2: None, m3: 1.0 }
    }
}

/// Radius on which `T` maps the ball `|v - v0| <= m2, |v'| <= m3` into
/// itself. Both bounds have to hold, so the smaller radius is taken; the
/// result is capped at 1.
pub fn contraction_radius(spec: &ProblemSpec, m2: f64, m3: f64) -> f64 {
    let p = spec.p;
    let n = spec.n as f64;
    let top = match spec.sign {
        Sign::Plus => spec.f.value(spec.v0 + m2) + spec.g.value(m3),
        Sign::Minus => spec.f.value(spec.v0 + m2),
    };
    if !(top > 0.0) {
        return 1.0;
    }
    let by_value = (m2 * p / (p - 1.0)).powf((p - 1.0) / p) * (n / top).powf(1.0 / p);
    let by_slope = n * m3.powf(p - 1.0) / top;
    by_value.min(by_slope).min(1.0)
}

fn h_inv(x: f64, p: f64) -> f64 {
    x.signum() * x.abs().powf(1.0 / (p - 1.0))
}

/// Product-integration weights on a node set `xs`: over cell
/// `[x_c, x_{c+1}]`, `integral weight(x) phi(x) dx` is replaced by
/// `sum_j w[c][j] phi(x_{start[c] + j})`, the exact weighted integral (up to
/// 10-point Gauss) of the cubic interpolant through four neighbouring nodes.
struct CellWeights {
    start: Vec<usize>,
    w: Vec<[f64; 4]>,
}

impl CellWeights {
    fn new(xs: &[f64], weight: impl Fn(f64) -> f64) -> Self {
        let n = xs.len();
        let mut start = Vec::with_capacity(n - 1);
        let mut w = Vec::with_capacity(n - 1);
        for c in 0..n - 1 {
            let s = c.saturating_sub(1).min(n - 4);
            let nodes = [xs[s], xs[s + 1], xs[s + 2], xs[s + 3]];
            let mut wc = [0.0; 4];
            for (x, gw) in gl10_points(xs[c], xs[c + 1]) {
                let wx = gw * weight(x);
                for (j, wj) in wc.iter_mut().enumerate() {
                    let mut l = 1.0;
                    for (k, xk) in nodes.iter().enumerate() {
                        if k != j {
                            l *= (x - xk) / (nodes[j] - xk);
                        }
                    }
                    *wj += wx * l;
                }
            }
            start.push(s);
            w.push(wc);
        }
        Self { start, w }
    }

    /// Running integral from the first node.
    fn cumulate(&self, phi: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; phi.len()];
        for (c, (s, w)) in self.start.iter().zip(&self.w).enumerate() {
            let cell: f64 = w.iter().zip(&phi[*s..*s + 4]).map(|(a, b)| a * b).sum();
            out[c + 1] = out[c] + cell;
        }
        out
    }
}

struct Grid {
    r: Vec<f64>,
    /// Weight `r^{n-1} dr/dx` for the inner integral.
    inner: CellWeights,
    /// Weight `dr/dx` for the outer integral.
    outer: CellWeights,
}

impl Grid {
    /// Node `i` at `r1 (i/(nodes-1))^grading`; both integrals are taken in
    /// the uniform parameter `x`.
    fn new(r1: f64, nodes: usize, grading: f64, n: u32) -> Self {
        let m = (nodes - 1) as f64;
        let xs: Vec<f64> = (0..nodes).map(|i| i as f64 / m).collect();
        let nm1 = n as f64 - 1.0;
        let dr = move |x: f64| r1 * grading * x.powf(grading - 1.0);
        Self {
            r: xs.iter().map(|x| r1 * x.powf(grading)).collect(),
            inner: CellWeights::new(&xs, |x| (r1 * x.powf(grading)).powf(nm1) * dr(x)),
            outer: CellWeights::new(&xs, dr),
        }
    }
}

/// One application of `T`; returns `(T v, (T v)')` at the nodes.
fn apply_t(spec: &ProblemSpec, grid: &Grid, v: &[f64], dv: &[f64]) -> (Vec<f64>, Vec<f64>) {
    let p = spec.p;
    let nm1 = spec.n as f64 - 1.0;
    let forcing: Vec<f64> = v.iter().zip(dv).map(|(a, b)| spec.rhs(*a, b.abs())).collect();
    let inner = grid.inner.cumulate(&forcing);
    let dv_new: Vec<f64> = (0..v.len())
        .map(|i| if i == 0 { 0.0 } else { h_inv(inner[i] / grid.r[i].powf(nm1), p) })
        .collect();
    let v_new = grid.outer.cumulate(&dv_new).into_iter().map(|x| spec.v0 + x).collect();
    (v_new, dv_new)
}

/// Picard iteration from `v = v0` on `[0, r1]`.
pub fn picard_solve(spec: &ProblemSpec, r1: f64, opts: &PicardOptions) -> Result<RadialTrajectory> {
    spec.validate()?;
    if !(r1 > 0.0 && r1.is_finite()) {
        return Err(Error::InvalidSpec(format!("r1 must be positive, got {r1}")));
    }
    if opts.nodes < 4 || !(opts.grading >= 1.0) || !(opts.tol > 0.0) {
        return Err(Error::InvalidSpec("Picard grid needs at least 4 nodes, grading >= 1 and tol > 0".into()));
    }
    let m2 = opts.m2.unwrap_or(0.5 * spec.v0);
    let r_alpha = contraction_radius(spec, m2, opts.m3);
    if r1 > r_alpha * (1.0 + 1e-12) {
        return Err(Error::Precondition(format!("r1 = {r1} exceeds the contraction radius {r_alpha}")));
    }
    let grid = Grid::new(r1, opts.nodes, opts.grading, spec.n);
    let mut v = vec![spec.v0; opts.nodes];
    let mut dv = vec![0.0; opts.nodes];
    let mut distance = f64::INFINITY;
    for _ in 0..opts.max_iter {
        let (v_new, dv_new) = apply_t(spec, &grid, &v, &dv);
        distance = v
            .iter()
            .zip(&v_new)
            .map(|(a, b)| (a - b).abs())
            .chain(dv.iter().zip(&dv_new).map(|(a, b)| (a - b).abs()))
            .fold(0.0, f64::max);
        if !distance.is_finite() {
            return Err(Error::NonFinite { at: r1 });
        }
        v = v_new;
        dv = dv_new;
        if distance < opts.tol {
            return build_trajectory(spec, &grid.r, &v, &dv, r1);
        }
    }
    Err(Error::NoConvergence { iterations: opts.max_iter, distance })
}

fn build_trajectory(spec: &ProblemSpec, r: &[f64], v: &[f64], dv: &[f64], r1: f64) -> Result<RadialTrajectory> {
    let prim = Primitive::new(&spec.f)?;
    let p = spec.p;
    let nm1 = spec.n as f64 - 1.0;
    let mut nodes = Vec::with_capacity(r.len());
    for i in 0..r.len() {
        let fv = spec.f.value(v[i]);
        let gv = spec.g.value(dv[i]);
        let big_f = prim.eval(v[i])?;
        let d2v = if i == 0 {
            // One-sided limit at the origin.
            match p {
                _ if p == 2.0 => fv / spec.n as f64,
                _ if p < 2.0 => 0.0,
                _ => f64::INFINITY,
            }
        } else {
            let w = dv[i].powf(p - 1.0);
            let dw = spec.rhs(v[i], dv[i]) - nm1 * w / r[i];
            dv[i] * dw / ((p - 1.0) * w)
        };
        nodes.push(Node {
            r: r[i],
            v: v[i],
            dv: dv[i],
            d2v,
            ln_v: v[i].ln(),
            ln_dv: dv[i].ln(),
            a: r[i].powf(nm1) * dv[i] / big_f.powf(1.0 / p),
            w: 1.0 + gv / fv - dv[i].powf(p) / (p * big_f),
        });
    }
    Ok(RadialTrajectory {
        p,
        n: spec.n,
        sign: spec.sign,
        v0: spec.v0,
        r_max: r1,
        nodes,
        termination: Termination::ReachedRmax,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::nonlinearity::GrowthExpr;

    #[test]
    fn product_rule_is_exact_for_cubics() {
        let xs: Vec<f64> = (0..20).map(|i| i as f64 / 19.0).collect();
        let cw = CellWeights::new(&xs, |x| x.powi(5));
        let phi: Vec<f64> = xs.iter().map(|x| 1.0 + x - x.powi(3)).collect();
        for (x, got) in xs.iter().zip(cw.cumulate(&phi)) {
            let exact = x.powi(6) / 6.0 + x.powi(7) / 7.0 - x.powi(9) / 9.0;
            assert!((got - exact).abs() < 1e-15, "{x}");
        }
    }

    #[test]
    fn linear_case_matches_sinh() {
        let f = GrowthExpr::power(1.0, 1.0).unwrap();
        let spec = ProblemSpec::new_test_mode(2.0, 3, Sign::Plus, f, GrowthExpr::zero(), 1.0).unwrap();
        let opts = PicardOptions { grading: 1.0, ..Default::default() };
        let traj = picard_solve(&spec, 0.3, &opts).unwrap();
        for nd in &traj.nodes[1..] {
            let exact = nd.r.sinh() / nd.r;
            assert!((nd.v - exact).abs() < 1e-8, "r={} {} {}", nd.r, nd.v, exact);
        }
        assert_eq!(traj.nodes[0].v, 1.0);
    }

    #[test]
    fn first_iterate_keeps_v0_at_origin() {
        let spec = ProblemSpec::new(2.5, 2, Sign::Plus, GrowthExpr::power(1.0, 2.0).unwrap(), GrowthExpr::power(1.0, 1.0).unwrap(), 1.3).unwrap();
        let grid = Grid::new(0.1, 64, 3.0, spec.n);
        let (v, dv) = apply_t(&spec, &grid, &[1.3; 64], &[0.0; 64]);
        assert_eq!(v[0], 1.3);
        assert_eq!(dv[0], 0.0);
        assert!(v[63] > 1.3);
    }

    #[test]
    fn rejects_radius_beyond_contraction() {
        let f = GrowthExpr::power(10.0, 2.0).unwrap();
        let spec = ProblemSpec::new(2.0, 1, Sign::Plus, f.clone(), f, 1.0).unwrap();
        let ra = contraction_radius(&spec, 0.5, 1.0);
        assert!(ra < 1.0);
        assert!(matches!(picard_solve(&spec, 2.0 * ra, &PicardOptions::default()), Err(Error::Precondition(_))));
    }
}
