//! Five-stage, L-stable SDIRK method of order 4 with an embedded order-3
//! estimate (Hairer and Wanner, gamma = 1/4), specialised to two unknowns.
//! Stages are solved by simplified Newton iteration with a finite-difference
//! Jacobian refreshed every step.

pub type State = [f64; 2];

const GAMMA: f64 = 0.25;
const C: [f64; 5] = [0.25, 0.75, 11.0 / 20.0, 0.5, 1.0];
const A: [[f64; 5]; 5] = [
    [0.25, 0.0, 0.0, 0.0, 0.0],
    [0.5, 0.25, 0.0, 0.0, 0.0],
    [17.0 / 50.0, -1.0 / 25.0, 0.25, 0.0, 0.0],
    [371.0 / 1360.0, -137.0 / 2720.0, 15.0 / 544.0, 0.25, 0.0],
    [25.0 / 24.0, -49.0 / 48.0, 125.0 / 16.0, -85.0 / 12.0, 0.25],
];
/// Weights of the order-3 embedded solution; the order-4 weights are the
/// last row of `A`.
const BHAT: [f64; 5] = [59.0 / 48.0, -17.0 / 96.0, 225.0 / 32.0, -85.0 / 12.0, 0.0];

const NEWTON_MAX_ITER: usize = 10;

#[derive(Debug, Clone, Copy)]
pub struct StepTolerance {
    pub atol: f64,
    pub rtol: f64,
}

impl StepTolerance {
    fn scale(&self, y: &State, i: usize) -> f64 {
        self.atol + self.rtol * y[i].abs()
    }

    pub fn norm(&self, e: &State, y: &State) -> f64 {
        (e[0] / self.scale(y, 0)).abs().max((e[1] / self.scale(y, 1)).abs())
    }
}

#[derive(Debug, Clone, Copy)]
pub enum StepOutcome {
    /// Step done; `err` is the scaled local error estimate (accept if <= 1).
    Done { y: State, err: f64 },
    /// Newton failed to converge or produced non-finite values.
    Failed,
}

fn jacobian<F: Fn(f64, &State) -> State>(rhs: &F, t: f64, y: &State, f0: &State) -> Option<[[f64; 2]; 2]> {
    let mut jac = [[0.0; 2]; 2];
    for j in 0..2 {
        let delta = f64::EPSILON.sqrt() * y[j].abs().max(1.0);
        let mut yp = *y;
        yp[j] += delta;
        let fp = rhs(t, &yp);
        for i in 0..2 {
            jac[i][j] = (fp[i] - f0[i]) / delta;
            if !jac[i][j].is_finite() {
                return None;
            }
        }
    }
    Some(jac)
}

fn inverse(m: [[f64; 2]; 2]) -> Option<[[f64; 2]; 2]> {
    let det = m[0][0] * m[1][1] - m[0][1] * m[1][0];
    if !det.is_finite() || det == 0.0 {
        return None;
    }
    Some([[m[1][1] / det, -m[0][1] / det], [-m[1][0] / det, m[0][0] / det]])
}

fn apply(m: &[[f64; 2]; 2], v: &State) -> State {
    [m[0][0] * v[0] + m[0][1] * v[1], m[1][0] * v[0] + m[1][1] * v[1]]
}

/// One step of size `h` from `(t, y)`.
pub fn sdirk4_step<F: Fn(f64, &State) -> State>(rhs: &F, t: f64, y: &State, h: f64, tol: &StepTolerance) -> StepOutcome {
    let f0 = rhs(t, y);
    if !(f0[0].is_finite() && f0[1].is_finite()) {
        return StepOutcome::Failed;
    }
    let Some(jac) = jacobian(rhs, t, y, &f0) else {
        return StepOutcome::Failed;
    };
    let hg = h * GAMMA;
    let m = [[1.0 - hg * jac[0][0], -hg * jac[0][1]], [-hg * jac[1][0], 1.0 - hg * jac[1][1]]];
    let Some(minv) = inverse(m) else {
        return StepOutcome::Failed;
    };

    let mut k = [[0.0; 2]; 5];
    let mut z = *y;
    for i in 0..5 {
        let mut known = *y;
        for j in 0..i {
            known[0] += h * A[i][j] * k[j][0];
            known[1] += h * A[i][j] * k[j][1];
        }
        // Predictor: continue with the previous stage slope.
        let guess = if i == 0 { f0 } else { k[i - 1] };
        z = [known[0] + hg * guess[0], known[1] + hg * guess[1]];
        let ti = t + C[i] * h;
        let mut prev_norm = f64::INFINITY;
        let mut converged = false;
        for _ in 0..NEWTON_MAX_ITER {
            let fz = rhs(ti, &z);
            if !(fz[0].is_finite() && fz[1].is_finite()) {
                return StepOutcome::Failed;
            }
            let res = [known[0] + hg * fz[0] - z[0], known[1] + hg * fz[1] - z[1]];
            let dz = apply(&minv, &res);
            z[0] += dz[0];
            z[1] += dz[1];
            let nrm = tol.norm(&dz, &z);
            if nrm <= 1e-3 {
                converged = true;
                break;
            }
            if nrm > 0.9 * prev_norm && prev_norm.is_finite() {
                return StepOutcome::Failed;
            }
            prev_norm = nrm;
        }
        if !converged {
            return StepOutcome::Failed;
        }
        k[i] = [(z[0] - known[0]) / hg, (z[1] - known[1]) / hg];
    }
    let mut e = [0.0; 2];
    for i in 0..5 {
        let w = A[4][i] - BHAT[i];
        e[0] += h * w * k[i][0];
        e[1] += h * w * k[i][1];
    }
    let e = apply(&minv, &e);
    let err = tol.norm(&e, &z);
    if !(z[0].is_finite() && z[1].is_finite() && err.is_finite()) {
        return StepOutcome::Failed;
    }
    StepOutcome::Done { y: z, err }
}

/// Step-size factor after a step with scaled error `err`.
pub fn step_factor(err: f64) -> f64 {
    if err == 0.0 {
        return 5.0;
    }
    (0.9 * err.powf(-0.25)).clamp(0.2, 5.0)
}
