//! Perturbation experiments around a traveling front.
//!
//! A perturbed history `clip(φ(x+cs) + p(x), 0, K)` is integrated in the lab
//! frame next to a companion run started on the front itself, and the
//! difference `v` is measured on the co-moving window `ξ = x + ct` covered
//! by the profile. Using the companion rather than `φ(x+ct)` removes the
//! slow phase drift of the time discretization from `v`.

use alloc::vec::Vec;
#[allow(unused_imports)]
use num_traits::Float;
use thiserror::Error;

use crate::dispersion::{Dispersion, DispersionError, Problem};
use crate::fit::{fit_line, LineFit};
use crate::interp::lagrange_stencil;
use crate::kernels::KernelError;
use crate::lattice::{dt_max, Boundary, Grid, LatticeError, NormSample, RunSettings, Simulation};
use crate::wavefront::WaveProfile;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum StabilityError {
    #[error("no threshold x0 on the grid: μ + G1 + e^{{μτ}}B ≥ −1e-6 at ξ = {xi}")]
    NoThreshold { xi: f64 },
    #[error("invalid argument: {0}")]
    Invalid(&'static str),
    #[error("perturbation is clipped away entirely by the bounds [0, K]")]
    Degenerate,
    #[error("perturbation is not in the weighted space: left decay rate {rate} ≤ λ_w/2 = {half}")]
    NotWeighted { rate: f64, half: f64 },
    #[error("front within {margin} of the grid edge from t = {t}, leaving no fit window")]
    BoundaryContamination { t: f64, margin: f64 },
    #[error("fit window [{t_a}, {t_b}] holds too few usable samples")]
    FitWindow { t_a: f64, t_b: f64 },
    #[error(transparent)]
    Lattice(#[from] LatticeError),
    #[error(transparent)]
    Dispersion(#[from] DispersionError),
    #[error(transparent)]
    Kernel(#[from] KernelError),
}

/// `G_j(ξ) = ∂_jf(φ(ξ), (h*φ)(ξ − cτ))` and `B(ξ) = ∫h(y)G2(ξ + y + cτ)dy` on
/// the profile grid.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize))]
pub struct FrontCoefficients {
    pub xi_min: f64,
    pub m: usize,
    pub g1: Vec<f64>,
    pub g2: Vec<f64>,
    pub b: Vec<f64>,
}

/// Largest upward step of each coefficient (0 when nonincreasing).
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize))]
pub struct MonotonicityScan {
    pub g1: f64,
    pub g2: f64,
    pub b: f64,
}

impl MonotonicityScan {
    pub fn nonincreasing(&self, tol: f64) -> bool {
        self.g1 <= tol && self.g2 <= tol && self.b <= tol
    }
}

impl FrontCoefficients {
    pub fn len(&self) -> usize {
        self.g1.len()
    }

    pub fn is_empty(&self) -> bool {
        self.g1.is_empty()
    }

    pub fn xi(&self, i: usize) -> f64 {
        self.xi_min + i as f64 / self.m as f64
    }

    pub fn monotonicity(&self) -> MonotonicityScan {
        let rise = |v: &[f64]| v.windows(2).fold(0.0f64, |m, w| m.max(w[1] - w[0]));
        MonotonicityScan { g1: rise(&self.g1), g2: rise(&self.g2), b: rise(&self.b) }
    }

    /// `|G1 − ∂1f(K,K)|`, `|G2 − ∂2f(K,K)|`, `|B − ∂2f(K,K)|` at the right edge.
    pub fn right_limit_errors(&self, problem: &Problem) -> [f64; 3] {
        let [_, _, d1k, d2k] = problem.equilibrium_partials();
        let n = self.len() - 1;
        [(self.g1[n] - d1k).abs(), (self.g2[n] - d2k).abs(), (self.b[n] - d2k).abs()]
    }
}

pub fn build_front_coefficients(problem: &Problem, profile: &WaveProfile) -> Result<FrontCoefficients, StabilityError> {
    if profile.len() < 2 {
        return Err(StabilityError::Invalid("profile has fewer than two samples"));
    }
    let h = profile.spacing();
    let weights = problem.kernel().discretize(h, 1e-12)?;
    let r = weights.radius() as i64;
    let shift = profile.c * problem.tau();
    let n = profile.len() as i64;
    let model = problem.model();
    let conv_at = |xi: f64| (-r..=r).map(|k| weights.weight(k) * profile.eval(xi - k as f64 * h)).sum::<f64>();
    let (mut g1, mut g2) = (Vec::with_capacity(n as usize), Vec::with_capacity(n as usize));
    for i in 0..n {
        let xi = profile.xi(i as usize);
        let (u, v) = (profile.phi[i as usize], conv_at(xi - shift));
        g1.push(model.d1f(u, v));
        g2.push(model.d2f(u, v));
    }
    // G2 on the grid shifted by cτ, where the delayed argument falls on nodes
    let conv_node = |q: i64| (-r..=r).map(|k| weights.weight(k) * profile.at_index(q - k)).sum::<f64>();
    let g2_shifted: Vec<f64> = (-r..n + r)
        .map(|q| {
            let xi = profile.xi_min + q as f64 * h;
            model.d2f(profile.eval(xi + shift), conv_node(q))
        })
        .collect();
    let b = (0..n)
        .map(|i| (-r..=r).map(|k| weights.weight(k) * g2_shifted[(i + k + r) as usize]).sum())
        .collect();
    Ok(FrontCoefficients { xi_min: profile.xi_min, m: profile.m, g1, g2, b })
}

/// `w(ξ) = e^{−λ(ξ−x0)}` for `ξ ≤ x0` and `1` beyond.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize))]
pub struct WeightSpec {
    pub lambda: f64,
    pub x0: f64,
    pub mu: f64,
}

impl WeightSpec {
    pub fn eval(&self, xi: f64) -> f64 {
        if xi <= self.x0 {
            (-self.lambda * (xi - self.x0)).exp()
        } else {
            1.0
        }
    }
}

/// Weight exponent for speed `c`: the `λ` that maximizes the predicted decay
/// rate above `c*`, and `λ*` at `c*`. Returns `(λ, μ_pred)`.
pub fn weight_exponent(disp: &Dispersion, c: f64) -> Result<(f64, f64), StabilityError> {
    if disp.is_critical(c) {
        Ok((disp.lambda_star(), 0.0))
    } else {
        let rate = disp.decay_rate(c)?;
        Ok((rate.lambda, rate.mu))
    }
}

/// Smallest node `x0` with `μ + G1(ξ) + e^{μτ}B(ξ) < −1e-6` for every node
/// `ξ ≥ x0`.
pub fn build_weight(
    problem: &Problem,
    coeffs: &FrontCoefficients,
    lambda: f64,
    mu: f64,
) -> Result<WeightSpec, StabilityError> {
    if !(lambda > 0.0) || !(mu >= 0.0) {
        return Err(StabilityError::Invalid("need λ > 0 and μ ≥ 0"));
    }
    let growth = (mu * problem.tau()).exp();
    let margin = crate::tolerances::Tolerances::DEFAULT.weight_margin;
    let ok = |i: usize| mu + coeffs.g1[i] + growth * coeffs.b[i] < -margin;
    let n = coeffs.len();
    if !ok(n - 1) {
        return Err(StabilityError::NoThreshold { xi: coeffs.xi(n - 1) });
    }
    let mut i = n - 1;
    while i > 0 && ok(i - 1) {
        i -= 1;
    }
    Ok(WeightSpec { lambda, x0: coeffs.xi(i), mu })
}

/// Shape of an `s`-independent perturbation `p(x)`.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize))]
#[cfg_attr(feature = "serde", serde(tag = "shape", rename_all = "snake_case"))]
pub enum PerturbationShape {
    /// `amplitude·e^{−((x − center)/width)²}`.
    Bump { amplitude: f64, center: f64, width: f64 },
    /// `φ(x + delta) − φ(x)`.
    Shift { delta: f64 },
    /// `amplitude·e^{rate(x − center)}` left of `center`, Gaussian to the right.
    LeftDecaying { amplitude: f64, rate: f64, center: f64 },
}

impl PerturbationShape {
    fn eval(&self, profile: &WaveProfile, x: f64) -> f64 {
        match *self {
            PerturbationShape::Bump { amplitude, center, width } => {
                let z = (x - center) / width;
                amplitude * (-z * z).exp()
            }
            PerturbationShape::Shift { delta } => profile.eval(x + delta) - profile.eval(x),
            PerturbationShape::LeftDecaying { amplitude, rate, center } => {
                let z = x - center;
                amplitude * if z <= 0.0 { (rate * z).exp() } else { (-z * z).exp() }
            }
        }
    }
}

/// Trapezoid norms of the clipped perturbation on the profile window.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize))]
pub struct PerturbationNorms {
    pub sup: f64,
    pub l2: f64,
    pub h1: f64,
    pub l2w: f64,
    pub h1w: f64,
}

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize))]
pub struct Perturbation {
    pub shape: PerturbationShape,
    pub norms: PerturbationNorms,
    /// Whether clipping to `[0, K]` changed any sample.
    pub clipped: bool,
}

impl Perturbation {
    /// `clip(φ(x + cs) + p(x), 0, K)`.
    pub fn initial(&self, profile: &WaveProfile, x: f64, s: f64) -> f64 {
        (profile.eval(x + profile.c * s) + self.shape.eval(profile, x)).clamp(0.0, profile.k)
    }
}

pub fn make_perturbation(
    profile: &WaveProfile,
    shape: PerturbationShape,
    weight: &WeightSpec,
) -> Result<Perturbation, StabilityError> {
    match shape {
        PerturbationShape::Bump { amplitude, center, width } => {
            if !(amplitude.is_finite() && center.is_finite() && width > 0.0) {
                return Err(StabilityError::Invalid("bump needs finite amplitude, center and width > 0"));
            }
        }
        PerturbationShape::Shift { delta } => {
            if !delta.is_finite() {
                return Err(StabilityError::Invalid("shift must be finite"));
            }
        }
        PerturbationShape::LeftDecaying { amplitude, rate, center } => {
            if !(amplitude.is_finite() && center.is_finite() && rate > 0.0) {
                return Err(StabilityError::Invalid("left_decaying needs finite amplitude, center and rate > 0"));
            }
            if rate <= 0.5 * weight.lambda {
                return Err(StabilityError::NotWeighted { rate, half: 0.5 * weight.lambda });
            }
        }
    }
    let h = profile.spacing();
    let n = profile.len();
    let k = profile.k;
    let mut raw_sup: f64 = 0.0;
    let mut clipped = false;
    let p: Vec<f64> = (0..n)
        .map(|i| {
            let x = profile.xi(i);
            let phi = profile.phi[i];
            let raw = shape.eval(profile, x);
            raw_sup = raw_sup.max(raw.abs());
            let sum = phi + raw;
            clipped |= sum < 0.0 || sum > k;
            sum.clamp(0.0, k) - phi
        })
        .collect();
    let sup = p.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    if raw_sup > 0.0 && sup < 1e-3 * raw_sup {
        return Err(StabilityError::Degenerate);
    }
    let (mut l2, mut h1, mut l2w, mut h1w) = (0.0, 0.0, 0.0, 0.0);
    for i in 0..n {
        let dp = if i == 0 {
            (p[1] - p[0]) / h
        } else if i + 1 == n {
            (p[n - 1] - p[n - 2]) / h
        } else {
            (p[i + 1] - p[i - 1]) / (2.0 * h)
        };
        let end = if i == 0 || i + 1 == n { 0.5 } else { 1.0 };
        let w = weight.eval(profile.xi(i));
        l2 += end * p[i] * p[i];
        h1 += end * (p[i] * p[i] + dp * dp);
        l2w += end * w * p[i] * p[i];
        h1w += end * w * (p[i] * p[i] + dp * dp);
    }
    let norms = PerturbationNorms { sup, l2: (l2 * h).sqrt(), h1: (h1 * h).sqrt(), l2w: (l2w * h).sqrt(), h1w: (h1w * h).sqrt() };
    Ok(Perturbation { shape, norms, clipped })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "snake_case"))]
pub enum FitKind {
    /// `sup|v| ≈ Ce^{−μt}`.
    Exponential,
    /// `sup|v| ≈ Ct^{−p}`.
    Algebraic,
}

#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize))]
pub struct DecayFit {
    pub kind: FitKind,
    /// `μ̂` for exponential fits; the log–log slope for algebraic ones.
    pub rate: f64,
    pub t_a: f64,
    pub t_b: f64,
    pub r2: f64,
    pub samples: usize,
    /// `max/min` of `sup|v|·√t` over the window.
    pub sqrt_t_spread: f64,
}

/// Least-squares fit of `ln sup|v|` against `t` or `ln t` over `[t_a, t_b]`.
pub fn fit_decay(series: &[NormSample], kind: FitKind, t_a: f64, t_b: f64) -> Result<DecayFit, StabilityError> {
    let pts: Vec<&NormSample> = series.iter().filter(|s| s.t >= t_a && s.t <= t_b && s.sup > 0.0).collect();
    let fit: Option<LineFit> = match kind {
        FitKind::Exponential => fit_line(pts.iter().map(|s| (s.t, s.sup.ln()))),
        FitKind::Algebraic => fit_line(pts.iter().map(|s| (s.t.ln(), s.sup.ln()))),
    };
    let fit = match fit {
        Some(f) if pts.len() >= 3 => f,
        _ => return Err(StabilityError::FitWindow { t_a, t_b }),
    };
    let scaled = pts.iter().map(|s| s.sup * s.t.sqrt());
    let (lo, hi) = scaled.fold((f64::INFINITY, 0.0f64), |(lo, hi), v| (lo.min(v), hi.max(v)));
    Ok(DecayFit {
        kind,
        rate: match kind {
            FitKind::Exponential => -fit.slope,
            FitKind::Algebraic => fit.slope,
        },
        t_a,
        t_b,
        r2: fit.r2,
        samples: pts.len(),
        sqrt_t_spread: hi / lo,
    })
}

#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize))]
pub struct ExperimentSettings {
    pub t_end: f64,
    /// Defaults to the integrator's stability bound.
    pub dt: Option<f64>,
    /// Time between recorded samples.
    pub record_every: f64,
    pub fit_window: (f64, f64),
    /// Exponential above `c*`, algebraic at `c*` when `None`.
    pub fit_kind: Option<FitKind>,
    /// Also run `min(u0, φ)` and `max(u0, φ)`.
    pub squeeze: bool,
    /// Measure against the best translate of the companion run.
    pub orbital: bool,
    /// Minimal distance of the front from either edge.
    pub margin: f64,
}

impl Default for ExperimentSettings {
    fn default() -> Self {
        ExperimentSettings {
            t_end: 60.0,
            dt: None,
            record_every: 0.5,
            fit_window: (10.0, 60.0),
            fit_kind: None,
            squeeze: true,
            orbital: false,
            margin: 10.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize))]
pub struct StabilityRun {
    pub c: f64,
    pub dt: f64,
    pub grid: Grid,
    /// Norms of `v` on the co-moving window.
    pub series: Vec<NormSample>,
    /// `sup|u_companion − φ(x+ct)|`, the discretization floor.
    pub profile_gap: Vec<(f64, f64)>,
    /// Translate used for each sample (zero unless orbital).
    pub translates: Vec<f64>,
    pub fit: Option<DecayFit>,
    /// `μ` from the dispersion relation (above `c*`).
    pub mu_pred: Option<f64>,
    /// Largest violation of `u⁻ ≤ u, u_companion ≤ u⁺` over all steps.
    pub squeeze_violation: Option<f64>,
    pub contaminated_at: Option<f64>,
    pub min_value: f64,
    pub max_value: f64,
    pub weight: WeightSpec,
}

impl StabilityRun {
    /// `sup|v|(t + lag) ≤ sup|v|(t)` for all recorded `t ≥ t0`, with a
    /// relative slack for the floor.
    pub fn decays_monotonically(&self, t0: f64, lag: f64, slack: f64) -> bool {
        let dt = self.series.get(1).map_or(1.0, |s| s.t - self.series[0].t);
        let steps = (lag / dt).round() as usize;
        self.series.iter().enumerate().filter(|(_, s)| s.t >= t0).all(|(i, s)| {
            self.series.get(i + steps).map_or(true, |later| later.sup <= s.sup * (1.0 + slack))
        })
    }
}

/// Lab-frame grid covering the profile window at `t = 0` and its translate
/// by `−c·t_end`.
pub fn experiment_grid(profile: &WaveProfile, t_end: f64) -> Result<Grid, StabilityError> {
    let m = profile.m as f64;
    let lo = ((profile.xi_min - profile.c * t_end) * m).floor() / m;
    Ok(Grid::new(lo, profile.xi_max(), profile.m)?)
}

fn level_position(grid: &Grid, u: &[f64], level: f64) -> Option<f64> {
    let i = u.iter().position(|&v| v >= level)?;
    if i == 0 {
        return Some(grid.x(0));
    }
    let (a, b) = (u[i - 1], u[i]);
    Some(grid.x(i - 1) + (level - a) / (b - a) * grid.spacing())
}

/// Sample of `f` at fractional index `pos` by Lagrange interpolation.
fn interpolate(f: &[f64], pos: f64) -> f64 {
    let (first, w) = lagrange_stencil(pos);
    let last = f.len() as i64 - 1;
    w.iter().enumerate().map(|(a, wa)| wa * f[(first + a as i64).clamp(0, last) as usize]).sum()
}

pub fn run_stability_experiment(
    disp: &Dispersion,
    profile: &WaveProfile,
    perturbation: &Perturbation,
    weight: &WeightSpec,
    settings: &ExperimentSettings,
) -> Result<StabilityRun, StabilityError> {
    let problem = disp.problem();
    let c = profile.c;
    if c < disp.c_star() - 1e-9 {
        return Err(StabilityError::Invalid("speed below c*"));
    }
    if !(settings.t_end > 0.0 && settings.record_every > 0.0) {
        return Err(StabilityError::Invalid("need t_end > 0 and record_every > 0"));
    }
    let dt = settings.dt.unwrap_or_else(|| dt_max(problem));
    let grid = experiment_grid(profile, settings.t_end)?;
    let run = RunSettings::new(dt, settings.t_end).with_boundary(Boundary::Equilibria);
    let k = profile.k;
    let u0 = |x: f64, s: f64| perturbation.initial(profile, x, s);
    let front = |x: f64, s: f64| profile.eval(x + c * s);
    let mut sim = Simulation::new(problem, grid, &run, u0)?;
    let mut comp = Simulation::new(problem, grid, &run, front)?;
    let mut squeeze = if settings.squeeze {
        let lower = Simulation::new(problem, grid, &run, |x, s| u0(x, s).min(front(x, s)))?;
        let upper = Simulation::new(problem, grid, &run, |x, s| u0(x, s).max(front(x, s)))?;
        Some((lower, upper))
    } else {
        None
    };

    let record_steps = ((settings.record_every / dt).round() as u64).max(1);
    let total = run.steps();
    let (mut series, mut gaps, mut translates) = (Vec::new(), Vec::new(), Vec::new());
    let mut worst_squeeze = f64::NEG_INFINITY;
    let (mut lo, mut hi) = (f64::INFINITY, f64::NEG_INFINITY);
    let mut contaminated_at = None;
    let h = grid.spacing();
    let mut last_shift = 0.0;
    for step in 0..=total {
        if step > 0 {
            sim.step()?;
            comp.step()?;
            if let Some((a, b)) = squeeze.as_mut() {
                a.step()?;
                b.step()?;
            }
        }
        let (u, uc) = (sim.state(), comp.state());
        for &v in u {
            lo = lo.min(v);
            hi = hi.max(v);
        }
        if let Some((a, b)) = &squeeze {
            for i in 0..u.len() {
                let (l, r) = (a.state()[i], b.state()[i]);
                worst_squeeze = worst_squeeze.max(l - u[i]).max(u[i] - r).max(l - uc[i]).max(uc[i] - r);
            }
        }
        if step % record_steps != 0 {
            continue;
        }
        let t = sim.time();
        if contaminated_at.is_none() {
            let pos = level_position(&grid, u, 0.5 * k);
            let near = pos.map_or(true, |p| p - grid.x_min() < settings.margin || grid.x_max() - p < settings.margin);
            if near {
                contaminated_at = Some(t);
            }
        }
        // co-moving window ξ = x + ct ∈ [ξ_min, ξ_max]
        let first = grid.index_of(profile.xi_min - c * t).max(0);
        let first = if grid.x(first) + c * t < profile.xi_min - 1e-9 { first + 1 } else { first };
        let last = grid.index_of(profile.xi_max() - c * t);
        let last = if grid.x(last) + c * t > profile.xi_max() + 1e-9 { last - 1 } else { last };
        let shift = if settings.orbital {
            best_translate(&u[first..=last], uc, first, h, last_shift)
        } else {
            0.0
        };
        last_shift = shift;
        let v: Vec<f64> = (first..=last)
            .map(|i| u[i] - if shift == 0.0 { uc[i] } else { interpolate(uc, i as f64 + shift / h) })
            .collect();
        let w: Vec<f64> = (first..=last).map(|i| weight.eval(grid.x(i) + c * t)).collect();
        series.push(NormSample::from_difference(t, h, &v, &w));
        translates.push(shift);
        let gap = (first..=last).fold(0.0f64, |m, i| m.max((uc[i] - profile.eval(grid.x(i) + c * t)).abs()));
        gaps.push((t, gap));
    }

    let kind = settings.fit_kind.unwrap_or(if disp.is_critical(c) { FitKind::Algebraic } else { FitKind::Exponential });
    let (t_a, mut t_b) = settings.fit_window;
    if let Some(tc) = contaminated_at {
        if tc <= t_a {
            return Err(StabilityError::BoundaryContamination { t: tc, margin: settings.margin });
        }
        t_b = t_b.min(tc);
    }
    let fit = fit_decay(&series, kind, t_a, t_b).ok();
    let mu_pred = if disp.is_critical(c) { None } else { disp.decay_rate(c).ok().map(|r| r.mu) };
    Ok(StabilityRun {
        c,
        dt,
        grid,
        series,
        profile_gap: gaps,
        translates,
        fit,
        mu_pred,
        squeeze_violation: squeeze.map(|_| worst_squeeze.max(0.0)),
        contaminated_at,
        min_value: lo,
        max_value: hi,
        weight: *weight,
    })
}

/// Shift `δ` minimizing `sup_i |u_i − u_ref(x_i + δ)|` over `|δ − start| ≤ 2`.
fn best_translate(u: &[f64], reference: &[f64], first: usize, h: f64, start: f64) -> f64 {
    let cost = |delta: f64| {
        u.iter().enumerate().fold(0.0f64, |m, (j, &v)| {
            let pos = (first + j) as f64 + delta / h;
            m.max((v - interpolate(reference, pos)).abs())
        })
    };
    // coarse scan, then golden section around the best node
    let mut best = (start, cost(start));
    let span = 2.0;
    let n = 40;
    for i in 0..=n {
        let d = start - span + 2.0 * span * i as f64 / n as f64;
        let cst = cost(d);
        if cst < best.1 {
            best = (d, cst);
        }
    }
    let step = 2.0 * span / n as f64;
    let (mut a, mut b) = (best.0 - step, best.0 + step);
    let g = 0.5 * (5.0f64.sqrt() - 1.0);
    let (mut x1, mut x2) = (b - g * (b - a), a + g * (b - a));
    let (mut f1, mut f2) = (cost(x1), cost(x2));
    for _ in 0..40 {
        if f1 < f2 {
            b = x2;
            x2 = x1;
            f2 = f1;
            x1 = b - g * (b - a);
            f1 = cost(x1);
        } else {
            a = x1;
            x1 = x2;
            f1 = f2;
            x2 = a + g * (b - a);
            f2 = cost(x2);
        }
    }
    0.5 * (a + b)
}

/// Boundedness proxies for the weighted energy estimates.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize))]
pub struct EnergyDiagnostics {
    /// `max_t e^{μ1 t}‖v‖_{L¹_w} / (e^{μ1}‖v(1)‖_{L¹_w})`.
    pub l1w_ratio: f64,
    pub l1w_bounded: bool,
    /// Share of `∫₀ᵀ ‖v‖²_{L²_w}` accrued over the last tenth of `[0, T]`.
    pub l2w_tail_fraction: f64,
    pub l2w_converges: bool,
}

pub fn energy_diagnostics(series: &[NormSample], mu1: f64) -> Result<EnergyDiagnostics, StabilityError> {
    if series.len() < 3 {
        return Err(StabilityError::Invalid("need at least three samples"));
    }
    let base = series
        .iter()
        .min_by(|a, b| (a.t - 1.0).abs().partial_cmp(&(b.t - 1.0).abs()).unwrap())
        .map(|s| (mu1 * s.t).exp() * s.l1w)
        .unwrap();
    let peak = series.iter().map(|s| (mu1 * s.t).exp() * s.l1w).fold(0.0f64, f64::max);
    let l1w_ratio = if base > 0.0 { peak / base } else { f64::INFINITY };
    let t_end = series[series.len() - 1].t;
    let cut = t_end - 0.1 * (t_end - series[0].t);
    let (mut total, mut tail) = (0.0, 0.0);
    for w in series.windows(2) {
        let piece = 0.5 * (w[1].t - w[0].t) * (w[0].l2w * w[0].l2w + w[1].l2w * w[1].l2w);
        total += piece;
        if w[0].t >= cut {
            tail += piece;
        }
    }
    let frac = if total > 0.0 { tail / total } else { 0.0 };
    Ok(EnergyDiagnostics { l1w_ratio, l1w_bounded: l1w_ratio <= 10.0, l2w_tail_fraction: frac, l2w_converges: frac <= 0.05 })
}
