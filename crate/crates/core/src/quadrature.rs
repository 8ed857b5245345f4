//! Quadrature rules.


/// Adaptive Simpson quadrature with Richardson correction.
///
/// Returns `None` when the recursion depth is exhausted before the local
/// error estimate drops below the (split) tolerance.
pub fn adaptive_simpson<F>(f: &mut F, a: f64, b: f64, tol: f64, max_depth: u32) -> Option<f64>
where
    F: FnMut(f64) -> f64,
{
    if a == b {
        return Some(0.0);
    }
    let fa = f(a);
    let fb = f(b);
    let m = 0.5 * (a + b);
    let fm = f(m);
    let whole = (b - a) / 6.0 * (fa + 4.0 * fm + fb);
    simpson_step(f, a, b, fa, fm, fb, whole, tol, max_depth)
}

#[allow(clippy::too_many_arguments)]
fn simpson_step<F>(
    f: &mut F,
    a: f64,
    b: f64,
    fa: f64,
    fm: f64,
    fb: f64,
    whole: f64,
    tol: f64,
    depth: u32,
) -> Option<f64>
where
    F: FnMut(f64) -> f64,
{
    let m = 0.5 * (a + b);
    let lm = 0.5 * (a + m);
    let rm = 0.5 * (m + b);
    let flm = f(lm);
    let frm = f(rm);
    let left = (m - a) / 6.0 * (fa + 4.0 * flm + fm);
    let right = (b - m) / 6.0 * (fm + 4.0 * frm + fb);
    let delta = left + right - whole;
    if delta.abs() <= 15.0 * tol {
        return Some(left + right + delta / 15.0);
    }
    if depth == 0 || !delta.is_finite() {
        return None;
    }
    let l = simpson_step(f, a, m, fa, flm, fm, left, 0.5 * tol, depth - 1)?;
    let r = simpson_step(f, m, b, fm, frm, fb, right, 0.5 * tol, depth - 1)?;
    Some(l + r)
}

/// Composite trapezoid rule on equally spaced samples.
pub fn trapezoid(samples: &[f64], spacing: f64) -> f64 {
    match samples.len() {
        0 | 1 => 0.0,
        n => {
            let inner: f64 = samples[1..n - 1].iter().sum();
            spacing * (inner + 0.5 * (samples[0] + samples[n - 1]))
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn simpson_integrates_exp() {
        let v = adaptive_simpson(&mut |x: f64| x.exp(), 0.0, 2.0, 1e-12, 40).unwrap();
        assert!((v - (2.0f64.exp() - 1.0)).abs() < 1e-11);
    }

    #[test]
    fn simpson_handles_kink() {
        let v = adaptive_simpson(&mut |x: f64| x.abs(), -1.0, 2.0, 1e-12, 50).unwrap();
        assert!((v - 2.5).abs() < 1e-11);
    }

    #[test]
    fn trapezoid_is_exact_for_lines() {
        let s: alloc::vec::Vec<f64> = (0..11).map(|i| 1.0 + 0.3 * i as f64).collect();
        assert!((trapezoid(&s, 0.1) - 2.5).abs() < 1e-12);
    }
}
