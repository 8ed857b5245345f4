//! Bracketing scalar root finders.

use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum RootError {
    #[error("no sign change on [{lo}, {hi}]: f(lo) = {f_lo:e}, f(hi) = {f_hi:e}")]
    NoSignChange { lo: f64, hi: f64, f_lo: f64, f_hi: f64 },
    #[error("bracket search stopped at {limit} without a sign change")]
    BracketExhausted { limit: f64 },
    #[error("function is not finite at x = {x}")]
    NonFinite { x: f64 },
}

/// Bisection on a sign-changing bracket.
///
/// Iterates until the bracket is no wider than `x_tol` (pass `0.0` to run to
/// machine resolution) and returns the endpoint with the smaller residual.
pub fn bisect<F>(mut f: F, lo: f64, hi: f64, x_tol: f64) -> Result<f64, RootError>
where
    F: FnMut(f64) -> f64,
{
    let (mut a, mut b) = if lo <= hi { (lo, hi) } else { (hi, lo) };
    let mut fa = f(a);
    let mut fb = f(b);
    if !fa.is_finite() {
        return Err(RootError::NonFinite { x: a });
    }
    if !fb.is_finite() {
        return Err(RootError::NonFinite { x: b });
    }
    if fa == 0.0 {
        return Ok(a);
    }
    if fb == 0.0 {
        return Ok(b);
    }
    if (fa > 0.0) == (fb > 0.0) {
        return Err(RootError::NoSignChange { lo: a, hi: b, f_lo: fa, f_hi: fb });
    }
    for _ in 0..400 {
        let mid = 0.5 * (a + b);
        if b - a <= x_tol || mid <= a || mid >= b {
            break;
        }
        let fm = f(mid);
        if !fm.is_finite() {
            return Err(RootError::NonFinite { x: mid });
        }
        if fm == 0.0 {
            return Ok(mid);
        }
        if (fm > 0.0) == (fa > 0.0) {
            a = mid;
            fa = fm;
        } else {
            b = mid;
            fb = fm;
        }
    }
    Ok(if fa.abs() <= fb.abs() { a } else { b })
}

/// Walks `x = start, start+step, …` (the step grows by `growth` each time)
/// until `f` changes sign relative to `f(start)`, never passing `limit`.
/// Returns the bracket of the first sign change.
pub fn bracket_forward<F>(
    mut f: F,
    start: f64,
    step: f64,
    growth: f64,
    limit: f64,
) -> Result<(f64, f64), RootError>
where
    F: FnMut(f64) -> f64,
{
    let f0 = f(start);
    if !f0.is_finite() {
        return Err(RootError::NonFinite { x: start });
    }
    let mut prev = start;
    let mut h = step;
    loop {
        let x = (prev + h).min(limit);
        let fx = f(x);
        if !fx.is_finite() {
            return Err(RootError::NonFinite { x });
        }
        if fx == 0.0 || (fx > 0.0) != (f0 > 0.0) {
            return Ok((prev, x));
        }
        if x >= limit {
            return Err(RootError::BracketExhausted { limit });
        }
        prev = x;
        h *= growth;
    }
}
