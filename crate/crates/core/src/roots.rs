//! Newton iteration safeguarded by a sign-changing bracket.

use crate::error::{FdotError, Result};

pub const MAX_ITERATIONS: usize = 100;

#[derive(Debug, Clone, Copy)]
pub struct Root {
    pub x: f64,
    pub iterations: usize,
}

/// Finds a root of `f` in [lo, hi], where f(lo) and f(hi) differ in sign.
///
/// `f` returns (value, derivative). A Newton step that leaves the current
/// bracket, or fails to halve the residual, is replaced by bisection.
/// Terminates when the step is below `rel_tol * |x|`.
pub fn newton_bracketed<F>(f: F, mut lo: f64, mut hi: f64, x0: f64, rel_tol: f64) -> Result<Root>
where
    F: Fn(f64) -> (f64, f64),
{
    let (f_lo, _) = f(lo);
    let (f_hi, _) = f(hi);
    if f_lo == 0.0 {
        return Ok(Root {
            x: lo,
            iterations: 0,
        });
    }
    if f_hi == 0.0 {
        return Ok(Root {
            x: hi,
            iterations: 0,
        });
    }
    if f_lo.signum() == f_hi.signum() || !f_lo.is_finite() || !f_hi.is_finite() {
        return Err(FdotError::RootNotBracketed { lo, hi });
    }
    // Orient so that f(lo) < 0 < f(hi).
    if f_lo > 0.0 {
        std::mem::swap(&mut lo, &mut hi);
    }
    let mut x = if x0 > lo.min(hi) && x0 < lo.max(hi) {
        x0
    } else {
        0.5 * (lo + hi)
    };
    let mut last_abs = f64::INFINITY;
    for it in 1..=MAX_ITERATIONS {
        let (fx, dfx) = f(x);
        if fx == 0.0 {
            return Ok(Root { x, iterations: it });
        }
        if fx < 0.0 {
            lo = x;
        } else {
            hi = x;
        }
        let newton = x - fx / dfx;
        let inside = newton.is_finite() && newton > lo.min(hi) && newton < lo.max(hi);
        let next = if inside && (it == 1 || fx.abs() <= 0.5 * last_abs) {
            newton
        } else {
            0.5 * (lo + hi)
        };
        last_abs = fx.abs();
        let step = (next - x).abs();
        x = next;
        if step <= rel_tol * x.abs() || (hi - lo).abs() <= rel_tol * x.abs() {
            return Ok(Root { x, iterations: it });
        }
    }
    Err(FdotError::NoConvergence {
        iterations: MAX_ITERATIONS,
        last: x,
    })
}

/// Widens `hi` geometrically until `sign(f(hi)) != sign(f(lo))`.
pub fn expand_upper<F>(f: F, lo: f64, mut hi: f64, factor: f64, max_steps: usize) -> Result<f64>
where
    F: Fn(f64) -> f64,
{
    let s = f(lo).signum();
    for _ in 0..max_steps {
        let v = f(hi);
        if v.signum() != s && v.is_finite() {
            return Ok(hi);
        }
        hi *= factor;
    }
    Err(FdotError::RootNotBracketed { lo, hi })
}
