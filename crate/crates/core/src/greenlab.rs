//! Linear delay equations and the lattice heat kernel.
//!
//! The delayed exponential `E_b(t)` solves `y′(t) = b·y(t − τ)` with
//! `y ≡ 1` on `[−τ, 0]` and `y = 0` before `−τ`. It is built interval by
//! interval (method of steps) and gives the solution formula of
//! `z′ + c1·z = c2·z(t − τ)`. The heat kernel is the Green function of
//! `v_t = dε[e^{λ*}v(ξ+1) + e^{−λ*}v(ξ−1)] − dε(e^{λ*}+e^{−λ*})v`.

use alloc::vec;
use alloc::vec::Vec;
use core::f64::consts::PI;
use num_complex::Complex64;
#[allow(unused_imports)]
use num_traits::Float;
use thiserror::Error;

use crate::dispersion::Problem;
use crate::fft::fft_in_place;
use crate::fit::fit_line;
use crate::kernels::KernelError;
use crate::quadrature::adaptive_simpson;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum GreenError {
    #[error("invalid argument: {0}")]
    Invalid(&'static str),
    #[error("quadrature did not reach tolerance on [{a}, {b}]")]
    Quadrature { a: f64, b: f64 },
    #[error("t must be positive, got {0}")]
    NonPositiveTime(f64),
    #[error(transparent)]
    Kernel(#[from] KernelError),
}

/// `E_b(t)` on `[−τ, t_max]`, stored as one polynomial per delay interval.
#[derive(Debug, Clone, PartialEq)]
pub struct DelayedExp {
    b: f64,
    tau: f64,
    /// `pieces[m]` holds the coefficients in `s = t − (m − 1)τ` on
    /// `[(m−1)τ, mτ)`; `pieces[0]` is the constant 1 on `[−τ, 0)`.
    pieces: Vec<Vec<f64>>,
}

impl DelayedExp {
    pub fn new(b: f64, tau: f64, t_max: f64) -> Result<DelayedExp, GreenError> {
        if !(tau > 0.0 && tau.is_finite()) {
            return Err(GreenError::Invalid("tau must be positive"));
        }
        if !b.is_finite() || !t_max.is_finite() {
            return Err(GreenError::Invalid("b and t must be finite"));
        }
        let count = if t_max < 0.0 { 1 } else { (t_max / tau).floor() as usize + 2 };
        let mut pieces: Vec<Vec<f64>> = Vec::with_capacity(count);
        pieces.push(vec![1.0]);
        for _ in 1..count {
            let prev = pieces.last().unwrap();
            // y(s) = y_prev(τ) + b∫₀ˢ y_prev
            let mut next = Vec::with_capacity(prev.len() + 1);
            next.push(horner(prev, tau));
            next.extend(prev.iter().enumerate().map(|(j, a)| b * a / (j + 1) as f64));
            pieces.push(next);
        }
        Ok(DelayedExp { b, tau, pieces })
    }

    pub fn rate(&self) -> f64 {
        self.b
    }

    pub fn tau(&self) -> f64 {
        self.tau
    }

    /// Last time covered by the stored intervals.
    pub fn t_max(&self) -> f64 {
        (self.pieces.len() - 1) as f64 * self.tau
    }

    /// Panics past [`DelayedExp::t_max`].
    pub fn eval(&self, t: f64) -> f64 {
        if t < -self.tau {
            return 0.0;
        }
        if t < 0.0 {
            return 1.0;
        }
        let m = (t / self.tau).floor() as usize + 1;
        assert!(m < self.pieces.len(), "t = {t} beyond the tabulated range");
        horner(&self.pieces[m], t - (m - 1) as f64 * self.tau)
    }

    /// Knots `kτ` with `k ≥ −1` inside `(a, b)`.
    fn knots_in(&self, a: f64, b: f64) -> impl Iterator<Item = f64> + '_ {
        let k0 = (a / self.tau).floor() as i64 + 1;
        (k0.max(-1)..)
            .map(move |k| k as f64 * self.tau)
            .take_while(move |&x| x < b)
            .filter(move |&x| x > a)
    }
}

fn horner(coeffs: &[f64], s: f64) -> f64 {
    coeffs.iter().rev().fold(0.0, |acc, a| acc * s + a)
}

/// `E_b(t)` from the method-of-steps recurrence.
pub fn delayed_exp(b: f64, tau: f64, t: f64) -> Result<f64, GreenError> {
    Ok(DelayedExp::new(b, tau, t)?.eval(t))
}

/// `E_b(t) = Σ_{k=0}^{m} b^k (t − (k−1)τ)^k / k!` for `(m−1)τ ≤ t < mτ`.
pub fn delayed_exp_series(b: f64, tau: f64, t: f64) -> Result<f64, GreenError> {
    if !(tau > 0.0 && tau.is_finite()) || !b.is_finite() || !t.is_finite() {
        return Err(GreenError::Invalid("need tau > 0 and finite b, t"));
    }
    if t < -tau {
        return Ok(0.0);
    }
    let m = (t / tau).floor() as i64 + 1;
    let mut sum = 1.0;
    for k in 1..=m {
        let x = t - (k - 1) as f64 * tau;
        let mut term = 1.0;
        for j in 1..=k {
            term *= b * x / j as f64;
        }
        sum += term;
    }
    Ok(sum)
}

/// Initial function `z0` on `[−τ, 0]`.
#[derive(Debug, Clone, PartialEq)]
pub enum History {
    Constant(f64),
    /// Coefficients of a polynomial in `s`.
    Polynomial(Vec<f64>),
    /// Values on equally spaced nodes from `−τ` to `0`, joined linearly.
    Sampled(Vec<f64>),
}

impl History {
    pub fn value(&self, s: f64, tau: f64) -> f64 {
        match self {
            History::Constant(v) => *v,
            History::Polynomial(c) => horner(c, s),
            History::Sampled(v) => {
                let (j, frac) = sample_cell(v.len(), s, tau);
                v[j] + frac * (v[j + 1] - v[j])
            }
        }
    }

    /// `z0′` on the smooth piece containing `mid`.
    fn slope(&self, s: f64, mid: f64, tau: f64) -> f64 {
        match self {
            History::Constant(_) => 0.0,
            History::Polynomial(c) => {
                c.iter().enumerate().skip(1).rev().fold(0.0, |acc, (j, a)| acc * s + j as f64 * a)
            }
            History::Sampled(v) => {
                let (j, _) = sample_cell(v.len(), mid, tau);
                (v[j + 1] - v[j]) * (v.len() - 1) as f64 / tau
            }
        }
    }

    fn knots(&self, tau: f64) -> Vec<f64> {
        match self {
            History::Sampled(v) if v.len() > 2 => {
                let n = v.len() - 1;
                (1..n).map(|j| -tau + tau * j as f64 / n as f64).collect()
            }
            _ => Vec::new(),
        }
    }

    fn validate(&self) -> Result<(), GreenError> {
        let ok = match self {
            History::Constant(v) => v.is_finite(),
            History::Polynomial(c) => c.iter().all(|x| x.is_finite()),
            History::Sampled(v) => v.len() >= 2 && v.iter().all(|x| x.is_finite()),
        };
        if ok {
            Ok(())
        } else {
            Err(GreenError::Invalid("history needs finite values (and at least two samples)"))
        }
    }
}

fn sample_cell(len: usize, s: f64, tau: f64) -> (usize, f64) {
    let n = len - 1;
    let pos = ((s + tau) / tau * n as f64).clamp(0.0, n as f64);
    let j = (pos.floor() as usize).min(n - 1);
    (j, pos - j as f64)
}

/// `z′(t) + c1·z(t) = c2·z(t − τ)` with `z = z0` on `[−τ, 0]`.
#[derive(Debug, Clone, PartialEq)]
pub struct DelayedLinearSystem {
    pub c1: f64,
    pub c2: f64,
    pub tau: f64,
    pub history: History,
}

impl DelayedLinearSystem {
    pub fn new(c1: f64, c2: f64, tau: f64, history: History) -> Result<Self, GreenError> {
        if !(c1.is_finite() && c2.is_finite()) {
            return Err(GreenError::Invalid("coefficients must be finite"));
        }
        if !(tau > 0.0 && tau.is_finite()) {
            return Err(GreenError::Invalid("tau must be positive"));
        }
        history.validate()?;
        Ok(DelayedLinearSystem { c1, c2, tau, history })
    }

    /// Rate of the delayed exponential in the solution formula.
    pub fn c3(&self) -> f64 {
        self.c2 * (self.c1 * self.tau).exp()
    }
}

/// `z(t)` from
/// `e^{−c1(t+τ)}E(t)z0(−τ) + ∫_{−τ}^0 e^{−c1(t−s)}E(t−τ−s)[z0′(s) + c1z0(s)] ds`,
/// `E` the delayed exponential at rate `c3`.
pub fn solve_linear_dde(sys: &DelayedLinearSystem, t: f64) -> Result<f64, GreenError> {
    if !(t >= 0.0 && t.is_finite()) {
        return Err(GreenError::Invalid("t must be finite and non-negative"));
    }
    let (c1, tau) = (sys.c1, sys.tau);
    let e = DelayedExp::new(sys.c3(), tau, t)?;
    let z0 = &sys.history;
    let head = (-c1 * (t + tau)).exp() * e.eval(t) * z0.value(-tau, tau);

    // the argument t − τ − s crosses a knot kτ at s = t − (k+1)τ
    let mut cuts: Vec<f64> = e.knots_in(t - tau, t).map(|x| t - tau - x).filter(|&s| s > -tau && s < 0.0).collect();
    cuts.extend(z0.knots(tau));
    cuts.push(-tau);
    cuts.push(0.0);
    cuts.sort_by(|a, b| a.partial_cmp(b).unwrap());
    cuts.dedup_by(|a, b| (*a - *b).abs() <= 1e-14 * tau);

    let mut total = 0.0;
    for w in cuts.windows(2) {
        let (a, b) = (w[0], w[1]);
        let mid = 0.5 * (a + b);
        // E is evaluated from the interior of the piece so the endpoints use
        // the polynomial of this piece
        let arg_mid = t - tau - mid;
        let piece = if arg_mid < 0.0 { 0 } else { (arg_mid / tau).floor() as usize + 1 };
        let start = (piece as f64 - 1.0) * tau;
        let poly = &e.pieces[piece];
        let mut f = |s: f64| {
            let ev = if piece == 0 { 1.0 } else { horner(poly, t - tau - s - start) };
            (-c1 * (t - s)).exp() * ev * (z0.slope(s, mid, tau) + c1 * z0.value(s, tau))
        };
        let scale = (b - a) / tau;
        total += adaptive_simpson(&mut f, a, b, 1e-12 * scale.max(1e-3), 50).ok_or(GreenError::Quadrature { a, b })?;
    }
    Ok(head + total)
}

/// Fitted envelope `e^{−c1t}E_{c3}(t) ≤ C·e^{−ε(c1−c2)t}`.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize))]
pub struct DecayBoundFit {
    pub c: f64,
    pub eps: f64,
    /// Largest ratio of the function to the envelope on the check window.
    pub worst_check_ratio: f64,
    pub holds: bool,
}

/// Fits `ε` from the log-slope over the second half of `[0, t_fit]` and `C`
/// as the smallest constant covering `[0, t_fit]`, then checks the envelope
/// on `[t_fit, t_check]`.
pub fn fit_decay_bound(c1: f64, c2: f64, tau: f64, t_fit: f64, t_check: f64) -> Result<DecayBoundFit, GreenError> {
    if !(c1 > c2 && c2 >= 0.0) {
        return Err(GreenError::Invalid("decay bound needs c1 > c2 ≥ 0"));
    }
    if !(t_fit > 0.0 && t_check > t_fit) {
        return Err(GreenError::Invalid("need 0 < t_fit < t_check"));
    }
    let c3 = c2 * (c1 * tau).exp();
    let e = DelayedExp::new(c3, tau, t_check)?;
    let samples = 2000;
    let logf = |t: f64| -c1 * t + e.eval(t).ln();
    let fit = fit_line((samples / 2..=samples).map(|i| {
        let t = t_fit * i as f64 / samples as f64;
        (t, logf(t))
    }))
    .ok_or(GreenError::Invalid("degenerate fit window"))?;
    let eps = -fit.slope / (c1 - c2);
    let rate = eps * (c1 - c2);
    let log_c = (0..=samples)
        .map(|i| {
            let t = t_fit * i as f64 / samples as f64;
            logf(t) + rate * t
        })
        .fold(f64::NEG_INFINITY, f64::max);
    let worst = (0..=samples)
        .map(|i| {
            let t = t_fit + (t_check - t_fit) * i as f64 / samples as f64;
            logf(t) + rate * t - log_c
        })
        .fold(f64::NEG_INFINITY, f64::max);
    Ok(DecayBoundFit { c: log_c.exp(), eps, worst_check_ratio: worst.exp(), holds: worst <= 1e-12 })
}

/// Parameters of the lattice heat kernel.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize))]
pub struct GreenProbe {
    pub d: f64,
    pub eps: f64,
    pub lambda_star: f64,
}

impl GreenProbe {
    pub fn new(d: f64, eps: f64, lambda_star: f64) -> Result<GreenProbe, GreenError> {
        if !(d > 0.0 && d.is_finite()) {
            return Err(GreenError::Invalid("d must be positive"));
        }
        if !(eps > 0.0 && eps < 1.0) {
            return Err(GreenError::Invalid("eps must lie in (0, 1)"));
        }
        if !lambda_star.is_finite() {
            return Err(GreenError::Invalid("lambda_star must be finite"));
        }
        Ok(GreenProbe { d, eps, lambda_star })
    }

    /// `q(λ*, ω) = dε[e^{λ*+iω} + e^{−λ*−iω} − e^{λ*} − e^{−λ*}]`.
    pub fn symbol(&self, omega: f64) -> Complex64 {
        let z = Complex64::new(self.lambda_star, omega);
        self.d * self.eps * (z.exp() + (-z).exp() - 2.0 * self.lambda_star.cosh())
    }

    /// `√(π/(dtε))`.
    pub fn bound(&self, t: f64) -> f64 {
        (PI / (self.d * t * self.eps)).sqrt()
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize))]
pub struct HeatKernelReport {
    pub t: f64,
    /// `Σ_n v_n(t)`.
    pub mass: f64,
    /// `(1/2π)∫ exp{t·Re q} dω`, which dominates every `|v_n(t)|`.
    pub peak: f64,
    pub bound: f64,
    /// `v_0(t) = (1/2π)∫ exp{t·q} dω`.
    pub v0: f64,
    pub max_vn: f64,
}

impl HeatKernelReport {
    pub fn within_bound(&self) -> bool {
        self.peak <= self.bound
    }
}

/// Number of `ω` nodes on `[−π, π)`.
pub const OMEGA_NODES: usize = 1 << 12;

/// Heat kernel from a Dirac mass at the origin, by the periodic trapezoid
/// rule on [`OMEGA_NODES`] nodes (an inverse FFT for the `v_n`).
pub fn heat_kernel_mass_and_bound(probe: &GreenProbe, t: f64) -> Result<HeatKernelReport, GreenError> {
    if !(t > 0.0) || !t.is_finite() {
        return Err(GreenError::NonPositiveTime(t));
    }
    let n = OMEGA_NODES;
    let omega = |j: usize| 2.0 * PI * j as f64 / n as f64;
    let mut data: Vec<Complex64> = (0..n).map(|j| (t * probe.symbol(omega(j))).exp()).collect();
    let peak = data.iter().map(|z| z.norm()).sum::<f64>() / n as f64;
    // v_n = (1/N) Σ_j e^{t q(ω_j)} e^{−inω_j}
    fft_in_place(&mut data, -1.0);
    let vn: Vec<f64> = data.iter().map(|z| z.re / n as f64).collect();
    Ok(HeatKernelReport {
        t,
        mass: vn.iter().sum(),
        peak,
        bound: probe.bound(t),
        v0: vn[0],
        max_vn: vn.iter().fold(f64::NEG_INFINITY, |m, &v| m.max(v)),
    })
}

/// `(c1(ω), c2(ω))` of the linearization at 0 around the critical front.
pub fn fourier_coefficients(
    problem: &Problem,
    c_star: f64,
    lambda_star: f64,
    omega: f64,
) -> Result<(Complex64, Complex64), GreenError> {
    let [d1, d2, _, _] = problem.equilibrium_partials();
    let d = problem.d();
    let z = Complex64::new(lambda_star, omega);
    let c1 = Complex64::new(c_star * lambda_star - d1, c_star * omega) - d * (z.exp() + (-z).exp() - 2.0);
    let c2 = d2 * (-z * c_star * problem.tau()).exp() * problem.kernel().eval_g_complex(z)?;
    Ok((c1, c2))
}

/// `k2 = d2f(0,0)·e^{−λ*c*τ}·G(λ*)`, the modulus of `c2(0)`.
pub fn k2(problem: &Problem, c_star: f64, lambda_star: f64) -> Result<f64, GreenError> {
    let [_, d2, _, _] = problem.equilibrium_partials();
    Ok(d2 * (-lambda_star * c_star * problem.tau()).exp() * problem.kernel().eval_g(lambda_star)?)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn delayed_exp_examples() {
        assert_eq!(delayed_exp(1.0, 1.0, -0.5).unwrap(), 1.0);
        assert_eq!(delayed_exp(1.0, 1.0, -1.5).unwrap(), 0.0);
        assert!((delayed_exp(1.0, 1.0, 0.5).unwrap() - 1.5).abs() < 1e-15);
        assert!((delayed_exp(1.0, 1.0, 1.5).unwrap() - 2.625).abs() < 1e-15);
    }

    #[test]
    fn recurrence_matches_series() {
        for &(b, tau) in &[(0.7, 0.5), (-1.3, 1.0), (2.0, 0.3)] {
            let e = DelayedExp::new(b, tau, 6.0).unwrap();
            for i in 0..120 {
                let t = -tau + 0.0517 * i as f64;
                let s = delayed_exp_series(b, tau, t).unwrap();
                assert!((e.eval(t) - s).abs() <= 1e-11 * (1.0 + s.abs()), "b={b} t={t}");
            }
        }
    }

    #[test]
    fn no_delay_term_gives_exponential() {
        let sys = DelayedLinearSystem::new(0.8, 0.0, 1.0, History::Constant(1.0)).unwrap();
        for &t in &[0.0, 0.3, 2.0, 5.5] {
            assert!((solve_linear_dde(&sys, t).unwrap() - (-0.8 * t).exp()).abs() < 1e-12);
        }
    }

    #[test]
    fn formula_reproduces_history_at_zero() {
        let sys = DelayedLinearSystem::new(1.0, 0.5, 1.0, History::Polynomial(vec![0.3, -0.2, 0.5])).unwrap();
        assert!((solve_linear_dde(&sys, 0.0).unwrap() - 0.3).abs() < 1e-12);
        let sys = DelayedLinearSystem::new(1.0, 0.5, 1.0, History::Sampled(vec![1.0, 0.2, 0.6, 0.9])).unwrap();
        assert!((solve_linear_dde(&sys, 0.0).unwrap() - 0.9).abs() < 1e-12);
    }

    #[test]
    fn symbol_properties() {
        let p = GreenProbe::new(1.0, 0.5, 1.0).unwrap();
        assert!(p.symbol(0.0).norm() < 1e-15);
        for i in 0..50 {
            let w = -PI + 2.0 * PI * i as f64 / 49.0;
            let re = 2.0 * p.d * p.eps * p.lambda_star.cosh() * (w.cos() - 1.0);
            assert!((p.symbol(w).re - re).abs() < 1e-13);
        }
    }

    #[test]
    fn heat_kernel_mass_and_peak() {
        let p = GreenProbe::new(1.0, 0.5, 1.0).unwrap();
        let mut last = f64::INFINITY;
        for &t in &[0.1, 1.0, 10.0, 100.0] {
            let r = heat_kernel_mass_and_bound(&p, t).unwrap();
            assert!((r.mass - 1.0).abs() < 1e-12, "{r:?}");
            assert!(r.within_bound());
            assert!(r.max_vn <= r.peak + 1e-15);
            assert!(r.peak <= last);
            last = r.peak;
        }
        assert!(heat_kernel_mass_and_bound(&p, 0.0).is_err());
    }

    #[test]
    fn probe_validation() {
        assert!(GreenProbe::new(1.0, 1.0, 1.0).is_err());
        assert!(GreenProbe::new(0.0, 0.5, 1.0).is_err());
    }
}
