//! Characteristic functions of the linearizations at `0` and `K`, the
//! minimal wave speed `c*` and the decay rate of perturbations.
//!
//! ```text
//! Δ(c,λ) = cλ − d(e^λ + e^{−λ} − 2) − ∂1f(0,0) − ∂2f(0,0) e^{−λcτ} G(λ)
//! Δ̃(c,λ) = cλ + d(e^λ + e^{−λ} − 2) + ∂1f(K,K) + ∂2f(K,K) e^{λcτ} G(−λ)
//! ```

use alloc::string::String;
use alloc::vec::Vec;
#[allow(unused_imports)]
use num_traits::Float;
use thiserror::Error;

use crate::kernels::{Kernel, KernelError};
use crate::models::{validate_hypotheses, Builtin, Model};
use crate::roots::{bisect, bracket_forward, RootError};
use crate::tolerances::Tolerances;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum DispersionError {
    #[error("invalid problem: {0}")]
    InvalidProblem(&'static str),
    #[error("model `{model}` fails hypotheses: {failed}")]
    Hypotheses { model: String, failed: String },
    #[error(transparent)]
    Kernel(#[from] KernelError),
    #[error("Δ(c, {lambda}) has no sign change in c; the model is not monostable")]
    NoSignChangeInC { lambda: f64 },
    #[error("c(λ) has no interior minimum on (0, {lambda_max}]")]
    NoInteriorMinimum { lambda_max: f64 },
    #[error("c = {c} is below the minimal speed c* = {c_star}: Δ(c,λ) < 0 for every λ, so there are no real roots")]
    BelowMinimalSpeed { c: f64, c_star: f64 },
    #[error("c = {c} is the critical speed c* = {c_star}: only algebraic decay t^(-1/2) is available, use the critical mode")]
    CriticalSpeed { c: f64, c_star: f64 },
    #[error("λ = {lambda} is outside the admissible interval ({lo}, {hi}]")]
    Inadmissible { lambda: f64, lo: f64, hi: f64 },
    #[error("root search reached the kernel abscissa λ0 = {lambda0} before a sign change")]
    AbscissaLimited { lambda0: f64 },
    #[error("{0}: no positive root")]
    NoPositiveRoot(&'static str),
    #[error("root finding failed: {0}")]
    Root(#[from] RootError),
}

/// Model, kernel, coupling `d` and delay `τ`.
#[derive(Debug, Clone)]
pub struct Problem {
    model: Model,
    kernel: Kernel,
    d: f64,
    tau: f64,
    // partials at the equilibria, cached
    d1_0: f64,
    d2_0: f64,
    d1_k: f64,
    d2_k: f64,
}

impl Problem {
    /// Validates `d > 0`, `τ ≥ 0` and the monostability hypotheses of the
    /// model (on a 16 × 16 sample grid).
    pub fn new(model: Model, kernel: Kernel, d: f64, tau: f64) -> Result<Problem, DispersionError> {
        if !(d > 0.0 && d.is_finite()) {
            return Err(DispersionError::InvalidProblem("d must be positive"));
        }
        if !(tau >= 0.0 && tau.is_finite()) {
            return Err(DispersionError::InvalidProblem("tau must be nonnegative"));
        }
        let report = validate_hypotheses(&model, 16);
        if !report.all_passed() {
            let failed: Vec<&str> = report.failures().map(|c| c.id).collect();
            return Err(DispersionError::Hypotheses { model: model.name().into(), failed: failed.join(", ") });
        }
        let k = model.k();
        Ok(Problem {
            d1_0: model.d1f(0.0, 0.0),
            d2_0: model.d2f(0.0, 0.0),
            d1_k: model.d1f(k, k),
            d2_k: model.d2f(k, k),
            model,
            kernel,
            d,
            tau,
        })
    }

    pub fn model(&self) -> &Model {
        &self.model
    }

    pub fn kernel(&self) -> &Kernel {
        &self.kernel
    }

    pub fn d(&self) -> f64 {
        self.d
    }

    pub fn tau(&self) -> f64 {
        self.tau
    }

    pub fn k(&self) -> f64 {
        self.model.k()
    }

    /// `λ⁺ = λ0` when `∂2f(0,0) > 0`, otherwise `+∞`.
    pub fn lambda_plus(&self) -> f64 {
        if self.d2_0 > 0.0 {
            self.kernel.lambda0()
        } else {
            f64::INFINITY
        }
    }

    /// Largest `λ` visited by the searches.
    fn lambda_ceiling(&self, tol: &Tolerances) -> f64 {
        let lp = self.lambda_plus();
        if lp.is_finite() {
            lp - tol.abscissa_margin
        } else {
            f64::INFINITY
        }
    }

    pub fn delta(&self, c: f64, lambda: f64) -> Result<f64, KernelError> {
        let g = self.kernel.eval_g(lambda)?;
        Ok(c * lambda - self.d * (2.0 * lambda.cosh() - 2.0) - self.d1_0
            - self.d2_0 * (-lambda * c * self.tau).exp() * g)
    }

    /// `∂Δ/∂λ`.
    pub fn delta_dlambda(&self, c: f64, lambda: f64) -> Result<f64, KernelError> {
        let g = self.kernel.eval_g(lambda)?;
        let (g1, _) = self.kernel.eval_g_derivs(lambda)?;
        let ct = c * self.tau;
        Ok(c - 2.0 * self.d * lambda.sinh() - self.d2_0 * (-lambda * ct).exp() * (g1 - ct * g))
    }

    /// `∂²Δ/∂λ²`.
    pub fn delta_dlambda2(&self, c: f64, lambda: f64) -> Result<f64, KernelError> {
        let g = self.kernel.eval_g(lambda)?;
        let (g1, g2) = self.kernel.eval_g_derivs(lambda)?;
        let ct = c * self.tau;
        Ok(-2.0 * self.d * lambda.cosh()
            - self.d2_0 * (-lambda * ct).exp() * (g2 - 2.0 * ct * g1 + ct * ct * g))
    }

    /// `∂Δ/∂c = λ + λτ ∂2f(0,0) e^{−λcτ} G(λ)`.
    pub fn delta_dc(&self, c: f64, lambda: f64) -> Result<f64, KernelError> {
        let g = self.kernel.eval_g(lambda)?;
        Ok(lambda + lambda * self.tau * self.d2_0 * (-lambda * c * self.tau).exp() * g)
    }

    pub fn delta_tilde(&self, c: f64, lambda: f64) -> Result<f64, KernelError> {
        let g = self.kernel.eval_g(-lambda)?;
        Ok(c * lambda + self.d * (2.0 * lambda.cosh() - 2.0) + self.d1_k
            + self.d2_k * (lambda * c * self.tau).exp() * g)
    }

    /// `M(c,μ) = cλ − d(e^λ+e^{−λ}−2) − ∂1f(0,0) − μ − ∂2f(0,0) e^{(μ−cλ)τ} G(λ)`
    /// without the admissibility check on `λ`.
    pub fn m_value(&self, c: f64, mu: f64, lambda: f64) -> Result<f64, KernelError> {
        let g = self.kernel.eval_g(lambda)?;
        Ok(c * lambda - self.d * (2.0 * lambda.cosh() - 2.0) - self.d1_0 - mu
            - self.d2_0 * ((mu - c * lambda) * self.tau).exp() * g)
    }

    /// `N(μ) = μ + ∂1f(K,K) + e^{μτ} ∂2f(K,K)`.
    pub fn eval_n(&self, mu: f64) -> f64 {
        mu + self.d1_k + (mu * self.tau).exp() * self.d2_k
    }

    /// `(∂1f(0,0), ∂2f(0,0), ∂1f(K,K), ∂2f(K,K))`.
    pub fn equilibrium_partials(&self) -> [f64; 4] {
        [self.d1_0, self.d2_0, self.d1_k, self.d2_k]
    }

    /// The unique `c` with `Δ(c,λ) = 0`, for `λ > 0`.
    pub fn c_of_lambda(&self, lambda: f64) -> Result<f64, DispersionError> {
        if !(lambda > 0.0) {
            return Err(DispersionError::InvalidProblem("c(λ) needs λ > 0"));
        }
        self.kernel.eval_g(lambda)?;
        let f = |c: f64| self.delta(c, lambda).unwrap_or(f64::NAN);
        if f(0.0) >= 0.0 {
            return Err(DispersionError::NoSignChangeInC { lambda });
        }
        let (lo, hi) = bracket_forward(f, 0.0, 1.0, 2.0, 1e12)
            .map_err(|_| DispersionError::NoSignChangeInC { lambda })?;
        Ok(bisect(f, lo, hi, 0.0)?)
    }
}

/// Scalar residuals of a solved root.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize))]
pub struct Residual {
    pub value: f64,
    pub abs_residual: f64,
}

/// Decay rate from the `M` and `N` constraints at one speed.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize))]
pub struct DecayRate {
    /// `min(μ_M, μ_N)` at the best `λ`.
    pub mu: f64,
    /// `λ ∈ (λ1(c), λ*]` that maximizes `μ`.
    pub lambda: f64,
    /// Root of `M(c,3μ) = 0` at `lambda`.
    pub mu_m: f64,
    /// Root of `N(3μ) = 0`.
    pub mu_n: f64,
}

/// Per-speed row of a [`DispersionReport`].
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize))]
pub struct SpeedRow {
    pub c: f64,
    pub lambda1: f64,
    pub lambda2: f64,
    pub upsilon: f64,
    pub decay: Option<DecayRate>,
    pub residual_lambda1: f64,
    pub residual_lambda2: f64,
    pub residual_upsilon: f64,
}

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize))]
pub struct DispersionReport {
    pub c_star: f64,
    pub lambda_star: f64,
    /// `None` stands for `+∞`.
    pub lambda_plus: Option<f64>,
    pub residual_delta: f64,
    pub residual_dlambda: f64,
    pub rows: Vec<SpeedRow>,
}

/// A problem together with its minimal speed `c*` and double root `λ*`.
#[derive(Debug, Clone)]
pub struct Dispersion {
    problem: Problem,
    tol: Tolerances,
    c_star: f64,
    lambda_star: f64,
}

impl Dispersion {
    pub fn analyze(problem: &Problem) -> Result<Dispersion, DispersionError> {
        Self::with_tolerances(problem, Tolerances::DEFAULT)
    }

    pub fn with_tolerances(problem: &Problem, tol: Tolerances) -> Result<Dispersion, DispersionError> {
        let (c_star, lambda_star) = find_cstar(problem, &tol)?;
        Ok(Dispersion { problem: problem.clone(), tol, c_star, lambda_star })
    }

    pub fn problem(&self) -> &Problem {
        &self.problem
    }

    pub fn c_star(&self) -> f64 {
        self.c_star
    }

    pub fn lambda_star(&self) -> f64 {
        self.lambda_star
    }

    pub fn tolerances(&self) -> &Tolerances {
        &self.tol
    }

    /// `c` within this distance of `c*` is treated as critical.
    fn critical_band(&self) -> f64 {
        1e-12 * (1.0 + self.c_star)
    }

    pub fn is_critical(&self, c: f64) -> bool {
        (c - self.c_star).abs() <= self.critical_band()
    }

    /// `(λ1(c), λ2(c))`; `(λ*, λ*)` at `c = c*`.
    pub fn lambda_roots(&self, c: f64) -> Result<(f64, f64), DispersionError> {
        if self.is_critical(c) {
            return Ok((self.lambda_star, self.lambda_star));
        }
        if c < self.c_star {
            return Err(DispersionError::BelowMinimalSpeed { c, c_star: self.c_star });
        }
        let p = &self.problem;
        let f = |l: f64| p.delta(c, l).unwrap_or(f64::NAN);
        let ls = self.lambda_star;
        let l1 = bisect(f, 0.0, ls, 0.0)?;
        let ceiling = p.lambda_ceiling(&self.tol);
        let (lo, hi) = bracket_forward(f, ls, 0.1 * ls.max(0.1), 2.0, ceiling.min(1e3)).map_err(|e| {
            match e {
                RootError::BracketExhausted { .. } if ceiling.is_finite() => {
                    DispersionError::AbscissaLimited { lambda0: p.kernel.lambda0() }
                }
                e => e.into(),
            }
        })?;
        let l2 = bisect(f, lo, hi, 0.0)?;
        Ok((l1, l2))
    }

    /// `υ(c)`, the unique positive zero of `Δ̃(c,·)`.
    pub fn upsilon(&self, c: f64) -> Result<f64, DispersionError> {
        find_upsilon(&self.problem, c, &self.tol)
    }

    /// `M(c,μ)` with `λ` checked against `(λ1(c), λ*]` (`λ = λ*` at `c*`).
    pub fn eval_m(&self, c: f64, mu: f64, lambda: f64) -> Result<f64, DispersionError> {
        let (l1, _) = self.lambda_roots(c)?;
        let ok = if self.is_critical(c) {
            (lambda - self.lambda_star).abs() <= 1e-12
        } else {
            lambda > l1 && lambda <= self.lambda_star
        };
        if !ok {
            return Err(DispersionError::Inadmissible { lambda, lo: l1, hi: self.lambda_star });
        }
        Ok(self.problem.m_value(c, mu, lambda)?)
    }

    pub fn eval_n(&self, mu: f64) -> f64 {
        self.problem.eval_n(mu)
    }

    /// Decay rate `μ(c)` for `c > c*`: the best over 64 samples of
    /// `λ ∈ (λ1(c), λ*]` of `min(μ_M(λ), μ_N)`, where `μ_M` solves
    /// `M(c,3μ) = 0` and `μ_N` solves `N(3μ) = 0`.
    pub fn decay_rate(&self, c: f64) -> Result<DecayRate, DispersionError> {
        if self.is_critical(c) {
            return Err(DispersionError::CriticalSpeed { c, c_star: self.c_star });
        }
        let (l1, _) = self.lambda_roots(c)?;
        let mu_n = self.n_rate()?;
        let mut best: Option<DecayRate> = None;
        for k in 1..=64 {
            let lambda = l1 + (self.lambda_star - l1) * k as f64 / 64.0;
            let mu_m = self.m_rate(c, lambda)?;
            let mu = mu_m.min(mu_n);
            if best.map_or(true, |b| mu > b.mu) {
                best = Some(DecayRate { mu, lambda, mu_m, mu_n });
            }
        }
        let best = best.expect("64 samples");
        if !(best.mu > 0.0) {
            return Err(DispersionError::NoPositiveRoot("decay rate"));
        }
        Ok(best)
    }

    /// Root of `μ ↦ M(c,3μ)` (strictly decreasing, positive at 0).
    pub fn m_rate(&self, c: f64, lambda: f64) -> Result<f64, DispersionError> {
        let p = &self.problem;
        let f = |mu: f64| p.m_value(c, 3.0 * mu, lambda).unwrap_or(f64::NAN);
        if f(0.0) <= 0.0 {
            return Ok(0.0);
        }
        let (lo, hi) = bracket_forward(f, 0.0, 0.01, 2.0, 1e6)?;
        Ok(bisect(f, lo, hi, 0.0)?)
    }

    /// Minimal positive root of `μ ↦ N(3μ)`.
    pub fn n_rate(&self) -> Result<f64, DispersionError> {
        let p = &self.problem;
        first_positive_root(
            |mu| p.eval_n(3.0 * mu),
            |mu| 3.0 + 3.0 * p.tau * (3.0 * mu * p.tau).exp() * p.d2_k,
            |mu| 9.0 * p.tau * p.tau * (3.0 * mu * p.tau).exp() * p.d2_k,
            0.01 * (1.0 + p.d1_k.abs()),
            "N(3μ) = 0",
        )
    }

    pub fn row(&self, c: f64) -> Result<SpeedRow, DispersionError> {
        let (l1, l2) = self.lambda_roots(c)?;
        let ups = self.upsilon(c)?;
        let decay = if self.is_critical(c) { None } else { Some(self.decay_rate(c)?) };
        let p = &self.problem;
        Ok(SpeedRow {
            c,
            lambda1: l1,
            lambda2: l2,
            upsilon: ups,
            decay,
            residual_lambda1: p.delta(c, l1)?.abs(),
            residual_lambda2: p.delta(c, l2)?.abs(),
            residual_upsilon: p.delta_tilde(c, ups)?.abs(),
        })
    }

    pub fn report(&self, speeds: &[f64]) -> Result<DispersionReport, DispersionError> {
        let p = &self.problem;
        let rows = speeds.iter().map(|&c| self.row(c)).collect::<Result<Vec<_>, _>>()?;
        let lp = p.lambda_plus();
        Ok(DispersionReport {
            c_star: self.c_star,
            lambda_star: self.lambda_star,
            lambda_plus: lp.is_finite().then_some(lp),
            residual_delta: p.delta(self.c_star, self.lambda_star)?.abs(),
            residual_dlambda: p.delta_dlambda(self.c_star, self.lambda_star)?.abs(),
            rows,
        })
    }
}

/// Solves the tangency system `Δ = ∂λΔ = 0` by minimizing `c(λ)`.
///
/// A geometric scan of `λ` brackets the minimum; the bracket is then refined
/// by bisection on `g(λ) = ∂λΔ(c(λ), λ)`, which is positive left of `λ*` and
/// negative right of it.
pub fn find_cstar(problem: &Problem, tol: &Tolerances) -> Result<(f64, f64), DispersionError> {
    let ceiling = problem.lambda_ceiling(tol);
    let ratio = 1.02;
    let mut lambda = 1e-3f64.min(0.5 * ceiling);
    let mut samples: Vec<(f64, f64)> = Vec::new();
    let mut best = 0usize;
    loop {
        match problem.c_of_lambda(lambda) {
            Ok(c) => {
                samples.push((lambda, c));
                if c < samples[best].1 {
                    best = samples.len() - 1;
                }
            }
            // overflow of G far beyond the minimum acts as a barrier
            Err(_) if !samples.is_empty() && best + 1 < samples.len() => break,
            Err(e) => return Err(e),
        }
        let (lb, cb) = samples[best];
        let (l, c) = samples[samples.len() - 1];
        if l > 2.0 * lb && c > 2.0 * cb && samples.len() - best > 8 {
            break;
        }
        if lambda >= ceiling {
            break;
        }
        lambda = (lambda * ratio).min(ceiling);
    }
    if best == 0 || best + 1 == samples.len() {
        return Err(DispersionError::NoInteriorMinimum { lambda_max: samples[samples.len() - 1].0 });
    }
    let g = |l: f64| match problem.c_of_lambda(l) {
        Ok(c) => problem.delta_dlambda(c, l).unwrap_or(f64::NAN),
        Err(_) => f64::NAN,
    };
    let lambda_star = bisect(g, samples[best - 1].0, samples[best + 1].0, 0.0)?;
    let c_star = problem.c_of_lambda(lambda_star)?;
    Ok((c_star, lambda_star))
}

/// `υ(c)`: brackets from `λ = 0`, where `Δ̃ < 0`, until the sign changes.
pub fn find_upsilon(problem: &Problem, c: f64, tol: &Tolerances) -> Result<f64, DispersionError> {
    if !(c >= 0.0) {
        return Err(DispersionError::InvalidProblem("υ(c) needs c >= 0"));
    }
    let lambda0 = problem.kernel.lambda0();
    let ceiling = if lambda0.is_finite() { lambda0 - tol.abscissa_margin } else { 1e3 };
    let f = |l: f64| problem.delta_tilde(c, l).unwrap_or(f64::NAN);
    let (lo, hi) = bracket_forward(f, 0.0, 0.05, 1.5, ceiling).map_err(|e| match e {
        RootError::BracketExhausted { .. } if lambda0.is_finite() => DispersionError::AbscissaLimited { lambda0 },
        RootError::NonFinite { .. } if lambda0.is_finite() => DispersionError::AbscissaLimited { lambda0 },
        e => e.into(),
    })?;
    Ok(bisect(f, lo, hi, 0.0)?)
}

/// Smallest positive root of `f` with `f(0) < 0`, scanning forward with a
/// slowly growing step. Stops with an error once `f < 0`, `f′ < 0` and
/// `f″ ≤ 0`, after which `f` cannot return to zero.
fn first_positive_root(
    f: impl Fn(f64) -> f64,
    df: impl Fn(f64) -> f64,
    d2f: impl Fn(f64) -> f64,
    step: f64,
    what: &'static str,
) -> Result<f64, DispersionError> {
    if !(f(0.0) < 0.0) {
        return Err(DispersionError::NoPositiveRoot(what));
    }
    let mut x = 0.0;
    let mut h = step;
    for _ in 0..100_000 {
        let next = x + h;
        let fx = f(next);
        if !fx.is_finite() {
            break;
        }
        if fx >= 0.0 {
            return Ok(bisect(&f, x, next, 0.0)?);
        }
        if df(next) < 0.0 && d2f(next) <= 0.0 {
            break;
        }
        x = next;
        h *= 1.05;
    }
    Err(DispersionError::NoPositiveRoot(what))
}

/// Parameters of the closed-form decay-rate equations of the applications.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum RateEquation {
    /// `3μ + a e^{3μτ} − b = 0`.
    HostVector { a: f64, b: f64 },
    /// `3μ + p e^{−γτ}(e^{3μτ} − 2) = 0`.
    AgeStructured { p: f64, gamma: f64 },
    /// `3μ − δ − δ e^{3μτ}(1 + ln δ − ln p) = 0`, requires
    /// `δ(ln p − ln δ) < 2δ − p`.
    Nicholson { delta: f64, p: f64 },
}

impl RateEquation {
    /// Reads the parameters from a built-in model.
    pub fn for_model(model: &Model) -> Option<RateEquation> {
        let get = |k| model.param(k);
        match model.kind()? {
            Builtin::HostVector => Some(RateEquation::HostVector { a: get("a")?, b: get("b")? }),
            Builtin::FisherKpp => Some(RateEquation::HostVector { a: 0.0, b: 1.0 }),
            Builtin::AgeStructured => {
                Some(RateEquation::AgeStructured { p: get("p")?, gamma: get("gamma")? })
            }
            Builtin::Nicholson => Some(RateEquation::Nicholson { delta: get("delta")?, p: get("p")? }),
        }
    }

    /// Left-hand side at `μ`.
    pub fn eval(&self, mu: f64, tau: f64) -> f64 {
        let e = (3.0 * mu * tau).exp();
        match *self {
            RateEquation::HostVector { a, b } => 3.0 * mu + a * e - b,
            RateEquation::AgeStructured { p, gamma } => 3.0 * mu + p * (-gamma * tau).exp() * (e - 2.0),
            RateEquation::Nicholson { delta, p } => 3.0 * mu - delta - delta * e * (1.0 + delta.ln() - p.ln()),
        }
    }

    fn exp_coefficient(&self, tau: f64) -> f64 {
        match *self {
            RateEquation::HostVector { a, .. } => a,
            RateEquation::AgeStructured { p, gamma } => p * (-gamma * tau).exp(),
            RateEquation::Nicholson { delta, p } => -delta * (1.0 + delta.ln() - p.ln()),
        }
    }
}

/// Minimal positive root of one of the application rate equations.
pub fn solve_rate_equation(eq: RateEquation, tau: f64) -> Result<f64, DispersionError> {
    if !(tau >= 0.0 && tau.is_finite()) {
        return Err(DispersionError::InvalidProblem("tau must be nonnegative"));
    }
    let (name, scale) = match eq {
        RateEquation::HostVector { a, b } => {
            if !(a >= 0.0 && b > a) {
                return Err(DispersionError::InvalidProblem("host_vector rate equation needs b > a >= 0"));
            }
            ("3μ + a e^{3μτ} − b = 0", b)
        }
        RateEquation::AgeStructured { p, gamma } => {
            if !(p > 0.0 && gamma > 0.0 || p > 0.0 && gamma == 0.0) {
                return Err(DispersionError::InvalidProblem("age_structured rate equation needs p > 0, gamma >= 0"));
            }
            ("3μ + p e^{−γτ}(e^{3μτ} − 2) = 0", p * (-gamma * tau).exp())
        }
        RateEquation::Nicholson { delta, p } => {
            if !(p > delta && delta > 0.0) {
                return Err(DispersionError::InvalidProblem("nicholson rate equation needs p > delta > 0"));
            }
            if !(delta * (p.ln() - delta.ln()) < 2.0 * delta - p) {
                return Err(DispersionError::InvalidProblem(
                    "nicholson rate equation needs delta (ln p - ln delta) < 2 delta - p",
                ));
            }
            ("3μ − δ − δ e^{3μτ}(1 + ln δ − ln p) = 0", delta)
        }
    };
    let k = eq.exp_coefficient(tau);
    first_positive_root(
        |mu| eq.eval(mu, tau),
        |mu| 3.0 + 3.0 * tau * k * (3.0 * mu * tau).exp(),
        |mu| 9.0 * tau * tau * k * (3.0 * mu * tau).exp(),
        1e-3 * scale,
        name,
    )
}

#[cfg(test)]
mod tests {
    use super::*;

    fn host_vector(tau: f64) -> Problem {
        let m = Model::make_builtin("host_vector", &[("a", 0.5), ("b", 1.0)]).unwrap();
        Problem::new(m, Kernel::dirac(), 1.0, tau).unwrap()
    }

    #[test]
    fn delta_at_zero_is_minus_linear_growth() {
        assert!((host_vector(1.0).delta(3.0, 0.0).unwrap() + 0.5).abs() < 1e-15);
        assert!((host_vector(1.0).delta_tilde(3.0, 0.0).unwrap() + 0.5).abs() < 1e-15);
    }

    #[test]
    fn m_at_zero_rate_is_delta() {
        let p = host_vector(1.0);
        for &(c, l) in &[(1.0, 0.3), (2.0, 0.7), (0.5, 1.1)] {
            assert!((p.m_value(c, 0.0, l).unwrap() - p.delta(c, l).unwrap()).abs() < 1e-12);
        }
    }

    #[test]
    fn host_vector_n_function() {
        let p = host_vector(0.7);
        for &mu in &[0.0, 0.1, 0.4] {
            let expect = mu - 1.0 + 0.5 * (mu * 0.7f64).exp();
            assert!((p.eval_n(mu) - expect).abs() < 1e-15);
        }
    }

    #[test]
    fn analytic_derivatives_match_differences() {
        let m = Model::make_builtin("nicholson", &[("delta", 1.0), ("p", 2.0), ("a", 1.0)]).unwrap();
        let p = Problem::new(m, Kernel::gaussian(0.25).unwrap(), 1.0, 1.0).unwrap();
        let h = 1e-5;
        for &(c, l) in &[(0.9, 0.4), (1.5, 1.2)] {
            let fd = (p.delta(c, l + h).unwrap() - p.delta(c, l - h).unwrap()) / (2.0 * h);
            assert!((fd - p.delta_dlambda(c, l).unwrap()).abs() < 1e-8);
            let fd2 = (p.delta_dlambda(c, l + h).unwrap() - p.delta_dlambda(c, l - h).unwrap()) / (2.0 * h);
            assert!((fd2 - p.delta_dlambda2(c, l).unwrap()).abs() < 1e-8);
            let fdc = (p.delta(c + h, l).unwrap() - p.delta(c - h, l).unwrap()) / (2.0 * h);
            assert!((fdc - p.delta_dc(c, l).unwrap()).abs() < 1e-8);
        }
    }

    #[test]
    fn rate_equation_closed_forms() {
        let mu = solve_rate_equation(RateEquation::HostVector { a: 0.5, b: 1.0 }, 0.0).unwrap();
        assert!((mu - 1.0 / 6.0).abs() < 1e-12);
        let mu = solve_rate_equation(RateEquation::HostVector { a: 0.0, b: 1.3 }, 2.5).unwrap();
        assert!((mu - 1.3 / 3.0).abs() < 1e-12);
        let mu = solve_rate_equation(RateEquation::AgeStructured { p: 1.0, gamma: 0.0 }, 0.0).unwrap();
        assert!((mu - 1.0 / 3.0).abs() < 1e-12);
    }

    #[test]
    fn nicholson_rate_precondition() {
        let e = solve_rate_equation(RateEquation::Nicholson { delta: 1.0, p: 2.0 }, 0.0).unwrap_err();
        assert!(matches!(e, DispersionError::InvalidProblem(_)));
        let mu = solve_rate_equation(RateEquation::Nicholson { delta: 1.0, p: 1.5 }, 0.0).unwrap();
        // τ = 0: 3μ = 2δ − δ ln(p/δ)
        assert!((mu - (2.0 - 1.5f64.ln()) / 3.0).abs() < 1e-12);
    }

    #[test]
    fn below_minimal_speed_is_rejected() {
        let d = Dispersion::analyze(&host_vector(0.0)).unwrap();
        let c = d.c_star() - 0.1;
        assert!(matches!(d.lambda_roots(c), Err(DispersionError::BelowMinimalSpeed { .. })));
        assert!(matches!(d.decay_rate(d.c_star()), Err(DispersionError::CriticalSpeed { .. })));
    }
}
