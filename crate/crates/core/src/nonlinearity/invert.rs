//! Safeguarded root finding for strictly increasing functions.

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy)]
pub struct InvertOptions {
    pub abs_tol: f64,
    pub rel_tol: f64,
    /// Largest argument tried while expanding the bracket.
    pub t_max: f64,
    pub max_iter: usize,
}

impl Default for InvertOptions {
    fn default() -> Self {
        Self { abs_tol: 1e-10, rel_tol: 1e-10, t_max: 1e30, max_iter: 400 }
    }
}

/// Solves `h(t) = y` for `t >= 0`, with `h` strictly increasing on `[0, t_max]`.
///
/// The result satisfies `|h(t) - y| <= tol * max(1, |y|)` or brackets the root
/// between adjacent floats. `hint` seeds the bracket and may be `None`.
pub fn invert_monotone<H: Fn(f64) -> f64>(h: H, y: f64, hint: Option<f64>, opts: InvertOptions) -> Result<f64> {
    let h0 = h(0.0);
    if !y.is_finite() {
        return Err(Error::Range { y, lo: h0, hi: f64::INFINITY });
    }
    if y < h0 {
        return Err(Error::Range { y, lo: h0, hi: f64::NAN });
    }
    let tol = opts.abs_tol.max(opts.rel_tol * y.abs());
    if y == h0 {
        return Ok(0.0);
    }

    let mut hi = hint.filter(|x| *x > 0.0 && x.is_finite()).unwrap_or(1.0).min(opts.t_max);
    let mut h_hi = h(hi);
    let (mut lo, mut h_lo);
    if h_hi < y {
        lo = hi;
        h_lo = h_hi;
        loop {
            if hi >= opts.t_max {
                return Err(Error::Range { y, lo: h0, hi: h(opts.t_max) });
            }
            hi = (hi * 2.0).min(opts.t_max);
            h_hi = h(hi);
            if h_hi >= y {
                break;
            }
            lo = hi;
            h_lo = h_hi;
        }
    } else {
        lo = hi;
        loop {
            lo /= 16.0;
            h_lo = h(lo);
            if h_lo <= y || lo < 1e-300 {
                break;
            }
            hi = lo;
            h_hi = h_lo;
        }
        if h_lo > y {
            lo = 0.0;
            h_lo = h0;
        }
    }

    let mut bisect_next = false;
    for _ in 0..opts.max_iter {
        if (h_hi - y).abs() <= tol {
            return Ok(hi);
        }
        if (h_lo - y).abs() <= tol {
            return Ok(lo);
        }
        let width = hi - lo;
        let candidate = if !bisect_next && h_hi > h_lo {
            lo + (y - h_lo) / (h_hi - h_lo) * width
        } else if lo > 0.0 && hi > 4.0 * lo {
            (lo * hi).sqrt()
        } else {
            lo + 0.5 * width
        };
        let mid = if candidate > lo && candidate < hi { candidate } else { lo + 0.5 * width };
        if mid <= lo || mid >= hi {
            return Ok(if (h_hi - y).abs() < (h_lo - y).abs() { hi } else { lo });
        }
        let hm = h(mid);
        if !hm.is_finite() {
            return Err(Error::NonFinite { at: mid });
        }
        let removed;
        if hm < y {
            removed = (mid - lo) / width;
            lo = mid;
            h_lo = hm;
        } else {
            removed = (hi - mid) / width;
            hi = mid;
            h_hi = hm;
        }
        // A secant step that removed less than half of the bracket is
        // followed by a bisection, which guarantees linear convergence.
        bisect_next = !bisect_next && removed < 0.5;
    }
    Err(Error::NoConvergence { iterations: opts.max_iter, distance: hi - lo })
}

/// Solves `ln_h(x) = ly` for `x` on the whole real line, where `ln_h` is
/// strictly increasing. Used for inverses in log coordinates
/// (`x = ln t`, `ln_h(x) = ln h(e^x)`). Returns `x` with absolute error at
/// most `tol`.
pub fn invert_on_log_line<H: Fn(f64) -> f64>(ln_h: H, ly: f64, guess: f64, tol: f64) -> Result<f64> {
    if !ly.is_finite() {
        return if ly == f64::NEG_INFINITY {
            Ok(f64::NEG_INFINITY)
        } else {
            Err(Error::Range { y: ly, lo: f64::NEG_INFINITY, hi: f64::INFINITY })
        };
    }
    let mut lo = guess;
    let mut hi = guess;
    let mut f_lo = ln_h(lo) - ly;
    let mut f_hi = f_lo;
    let mut step = 1.0;
    while f_lo > 0.0 {
        hi = lo;
        f_hi = f_lo;
        lo -= step;
        step *= 2.0;
        if lo < -1e6 {
            return Err(Error::Range { y: ly, lo: f64::NEG_INFINITY, hi: f64::INFINITY });
        }
        f_lo = ln_h(lo) - ly;
    }
    step = 1.0;
    while f_hi < 0.0 {
        lo = hi;
        f_lo = f_hi;
        hi += step;
        step *= 2.0;
        if hi > 1e6 {
            return Err(Error::Range { y: ly, lo: f64::NEG_INFINITY, hi: f64::INFINITY });
        }
        f_hi = ln_h(hi) - ly;
    }
    let mut bisect_next = false;
    for _ in 0..200 {
        if f_lo == 0.0 {
            return Ok(lo);
        }
        if f_hi == 0.0 || hi - lo <= tol {
            return Ok(if f_hi.abs() < f_lo.abs() { hi } else { lo });
        }
        let width = hi - lo;
        let mut mid = if bisect_next || f_hi <= f_lo { lo + 0.5 * width } else { lo - f_lo * width / (f_hi - f_lo) };
        if !(mid > lo && mid < hi) {
            mid = lo + 0.5 * width;
        }
        if mid <= lo || mid >= hi {
            return Ok(mid);
        }
        let fm = ln_h(mid) - ly;
        if !fm.is_finite() {
            return Err(Error::NonFinite { at: mid });
        }
        let removed;
        if fm < 0.0 {
            removed = (mid - lo) / width;
            lo = mid;
            f_lo = fm;
        } else {
            removed = (hi - mid) / width;
            hi = mid;
            f_hi = fm;
        }
        bisect_next = !bisect_next && removed < 0.5;
    }
    Ok(0.5 * (lo + hi))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn cube_root() {
        let t = invert_monotone(|t| t * t * t, 8.0, None, InvertOptions::default()).unwrap();
        assert!((t - 2.0).abs() < 1e-10);
    }

    #[test]
    fn below_range_is_range_error() {
        let r = invert_monotone(|t| t * t, -1.0, None, InvertOptions::default());
        assert!(matches!(r, Err(Error::Range { .. })));
    }

    #[test]
    fn above_cap_is_range_error() {
        let r = invert_monotone(|t: f64| t.ln_1p(), 1e3, None, InvertOptions::default());
        assert!(matches!(r, Err(Error::Range { .. })));
    }

    #[test]
    fn tiny_and_huge_targets() {
        let opts = InvertOptions::default();
        let t = invert_monotone(|t| t * t, 1e-14, Some(5.0), opts).unwrap();
        assert!((t * t - 1e-14).abs() <= 1e-10);
        let t = invert_monotone(|t| t * t, 1e40, None, opts).unwrap();
        assert!((t / 1e20 - 1.0).abs() < 1e-9);
    }

    #[test]
    fn log_line_inverse() {
        // ln h(e^x) for h(t) = t^3 + t
        let lh = |x: f64| (2.0 * x).exp().ln_1p() + x;
        let x = invert_on_log_line(lh, 10f64.ln(), 0.0, 1e-14).unwrap();
        assert!((x.exp() - 2.0).abs() < 1e-12);
        let x = invert_on_log_line(|x| 2.0 * x, 5000.0, 0.0, 1e-12).unwrap();
        assert!((x - 2500.0).abs() < 1e-9);
    }
}
