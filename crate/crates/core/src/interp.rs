//! Fixed-order Lagrange interpolation on uniform grids.

#[allow(unused_imports)]
use num_traits::Float;

/// Number of nodes of the interpolation stencil (quintic).
pub(crate) const STENCIL: usize = 6;

/// Stencil for evaluating a uniformly sampled function at fractional index
/// `pos`: returns the first node index and the `STENCIL` weights.
///
/// The stencil is centred on the cell containing `pos`; callers handle the
/// indices that fall outside their data.
pub(crate) fn lagrange_stencil(pos: f64) -> (i64, [f64; STENCIL]) {
    let cell = pos.floor();
    let theta = pos - cell;
    let first = cell as i64 - (STENCIL as i64 / 2 - 1);
    let mut w = [0.0; STENCIL];
    // nodes at offsets -2..=3 relative to `cell`
    let offset0 = -(STENCIL as f64 / 2.0 - 1.0);
    for (k, wk) in w.iter_mut().enumerate() {
        let xk = offset0 + k as f64;
        let mut num = 1.0;
        let mut den = 1.0;
        for j in 0..STENCIL {
            if j != k {
                let xj = offset0 + j as f64;
                num *= theta - xj;
                den *= xk - xj;
            }
        }
        *wk = num / den;
    }
    (first, w)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn reproduces_quintics() {
        let p = |x: f64| 1.0 - 2.0 * x + 0.5 * x * x * x - 0.01 * x.powi(5);
        for &pos in &[3.0, 3.25, 7.9, 10.5] {
            let (first, w) = lagrange_stencil(pos);
            let v: f64 = w.iter().enumerate().map(|(k, wk)| wk * p((first + k as i64) as f64)).sum();
            assert!((v - p(pos)).abs() < 1e-9 * (1.0 + p(pos).abs()), "{pos}");
        }
    }

    #[test]
    fn weights_sum_to_one() {
        let (_, w) = lagrange_stencil(0.37);
        assert!((w.iter().sum::<f64>() - 1.0).abs() < 1e-14);
    }
}
