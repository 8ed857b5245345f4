//! Traveling-wave profiles `φ(x + ct)` solving
//! `cφ′(ξ) = d·[φ(ξ+1) − 2φ(ξ) + φ(ξ−1)] + f(φ(ξ), (h*φ)(ξ − cτ))`
//! with `φ(−∞) = 0`, `φ(+∞) = K`.
//!
//! Profiles come from moving-frame relaxation with first-order upwind
//! advection, re-centred so that `φ(0) = K/2`, and are then polished by
//! Newton's method on a fourth-order discretization. Outside the grid the
//! profile is continued by its tails: `Ae^{λ1ξ} + Be^{λ2ξ}` on the left
//! (`(A + Bξ)e^{λ*ξ}` at the critical speed) and `K − (K−φ_N)e^{−υ(ξ−ξ_N)}`
//! on the right.

use alloc::vec;
use alloc::vec::Vec;
#[allow(unused_imports)]
use num_traits::Float;
use thiserror::Error;

use crate::dispersion::{Dispersion, DispersionError, Problem};
use crate::fit::{fit_line, LineFit};
use crate::interp::{lagrange_stencil, STENCIL};
use crate::kernels::KernelError;
use crate::linalg::{BandedMatrix, LinalgError};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum WaveError {
    #[error("c = {c} is below the minimal speed c* = {c_star}; no front holds at this speed")]
    BelowMinimalSpeed { c: f64, c_star: f64 },
    #[error("relaxation did not converge by T = {t}: residual {residual:e} (drift {drift:e})")]
    NonConvergence { t: f64, residual: f64, drift: f64 },
    #[error("Newton polish failed after {iterations} iterations (residual {residual:e})")]
    Newton { iterations: usize, residual: f64 },
    #[error("profile is not monotone: forward difference {violation:e} at ξ = {xi}")]
    Monotonicity { violation: f64, xi: f64 },
    #[error("profile leaves (0, K) at ξ = {xi}: φ = {value}")]
    Range { xi: f64, value: f64 },
    #[error("profile limits not reached: φ(ξ_min) = {left:e}, K − φ(ξ_max) = {right:e}")]
    Limits { left: f64, right: f64 },
    #[error("{side} tail spans too few decades for a slope fit")]
    TailResolution { side: &'static str },
    #[error("invalid profile settings: {0}")]
    Settings(&'static str),
    #[error(transparent)]
    Dispersion(#[from] DispersionError),
    #[error(transparent)]
    Kernel(#[from] KernelError),
    #[error(transparent)]
    Linalg(#[from] LinalgError),
}

/// Continuation of the profile left of the grid.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "snake_case"))]
pub enum LeftTail {
    /// `φ ∝ e^{λξ}`.
    Exponential { rate: f64 },
    /// `φ = Ae^{λξ} + Be^{λ₂ξ}` with both characteristic roots, `λ < λ₂`.
    TwoMode { rate: f64, rate2: f64 },
    /// `φ ∝ (A + Bξ)e^{λξ}`, the double-root tail at `c = c*`.
    Critical { rate: f64 },
}

impl LeftTail {
    pub fn rate(&self) -> f64 {
        match *self {
            LeftTail::Exponential { rate } | LeftTail::TwoMode { rate, .. } | LeftTail::Critical { rate } => rate,
        }
    }

    /// Coefficients `(a0, a1)` with `φ(ξ₀ − s) = a0·φ₀ + a1·φ₁`.
    fn coefficients(&self, s: f64, h: f64) -> (f64, f64) {
        match *self {
            LeftTail::Exponential { rate } => ((-rate * s).exp(), 0.0),
            LeftTail::TwoMode { rate, rate2 } => {
                // A + B = φ₀, Ae^{λh} + Be^{λ₂h} = φ₁
                let (e1, e2) = ((rate * h).exp(), (rate2 * h).exp());
                let det = e2 - e1;
                let (g1, g2) = ((-rate * s).exp(), (-rate2 * s).exp());
                ((e2 * g1 - e1 * g2) / det, (g2 - g1) / det)
            }
            LeftTail::Critical { rate } => {
                let e = (-rate * s).exp();
                (e * (1.0 + s / h), -e * (s / h) * (-rate * h).exp())
            }
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RelaxSettings {
    /// Nodes per unit length.
    pub m: usize,
    /// Domain; chosen from the tail rates when `None`.
    pub xi_min: Option<f64>,
    pub xi_max: Option<f64>,
    /// Pseudo-time step; `0.9/(c·m + 2d + L_f)` when `None`.
    pub dt: Option<f64>,
    /// Pseudo-time limit.
    pub t_relax: f64,
    /// Stop once `sup|v_t − s·φ′| < tol·K` (steady up to a drift `s`).
    pub tol: f64,
    /// Refine by Newton's method on the fourth-order equation.
    pub polish: bool,
    pub tail_tol: f64,
    /// Offset of the initial front.
    pub initial_shift: f64,
}

impl Default for RelaxSettings {
    fn default() -> Self {
        RelaxSettings {
            m: 10,
            xi_min: None,
            xi_max: None,
            dt: None,
            t_relax: 5000.0,
            tol: 1e-6,
            polish: true,
            tail_tol: 1e-12,
            initial_shift: 0.0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Default)]
#[cfg_attr(feature = "serde", derive(serde::Serialize))]
pub struct ProfileDiagnostics {
    /// Fourth-order residual of the returned profile (interior nodes).
    pub residual_sup: f64,
    pub residual_l2: f64,
    /// Same residual for the relaxed profile before polishing.
    pub relaxation_residual_sup: f64,
    pub relaxation_time: f64,
    pub relaxation_steps: u64,
    /// Whether relaxation met its tolerance before the pseudo-time limit.
    pub relaxation_converged: bool,
    /// Drift speed of the relaxed front in the moving frame.
    pub drift: f64,
    pub newton_iterations: usize,
    /// Smallest forward difference.
    pub min_increment: f64,
}

/// A sampled monotone front on `ξ_i = ξ_min + i/m`, with `φ(0) = K/2`.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize))]
pub struct WaveProfile {
    pub c: f64,
    pub k: f64,
    pub m: usize,
    pub xi_min: f64,
    pub phi: Vec<f64>,
    pub left_tail: LeftTail,
    pub right_rate: f64,
    pub diagnostics: ProfileDiagnostics,
}

impl WaveProfile {
    /// Wraps samples; `ξ_min·m` must be an integer.
    pub fn from_samples(
        c: f64,
        k: f64,
        m: usize,
        xi_min: f64,
        phi: Vec<f64>,
        left_tail: LeftTail,
        right_rate: f64,
    ) -> WaveProfile {
        WaveProfile { c, k, m, xi_min, phi, left_tail, right_rate, diagnostics: ProfileDiagnostics::default() }
    }

    pub fn spacing(&self) -> f64 {
        1.0 / self.m as f64
    }

    pub fn len(&self) -> usize {
        self.phi.len()
    }

    pub fn is_empty(&self) -> bool {
        self.phi.is_empty()
    }

    pub fn xi(&self, i: usize) -> f64 {
        self.xi_min + i as f64 / self.m as f64
    }

    pub fn xi_max(&self) -> f64 {
        self.xi(self.phi.len() - 1)
    }

    /// Sample at integer index `q`, continued by the tails outside the grid.
    pub fn at_index(&self, q: i64) -> f64 {
        let n = self.phi.len() as i64;
        let h = self.spacing();
        if q < 0 {
            let (a0, a1) = self.left_tail.coefficients(-q as f64 * h, h);
            (a0 * self.phi[0] + a1 * self.phi[1]).max(0.0)
        } else if q >= n {
            let e = (-self.right_rate * (q - n + 1) as f64 * h).exp();
            self.k - (self.k - self.phi[(n - 1) as usize]) * e
        } else {
            self.phi[q as usize]
        }
    }

    /// `φ(ξ)` by sixth-order Lagrange interpolation.
    pub fn eval(&self, xi: f64) -> f64 {
        let pos = (xi - self.xi_min) * self.m as f64;
        let n = self.phi.len() as f64;
        let h = self.spacing();
        // far outside the grid use the closed-form tails
        if pos < -(STENCIL as f64) {
            let (a0, a1) = self.left_tail.coefficients(-pos * h, h);
            return (a0 * self.phi[0] + a1 * self.phi[1]).max(0.0);
        }
        if pos > n - 1.0 + STENCIL as f64 {
            let e = (-self.right_rate * (pos - n + 1.0) * h).exp();
            return self.k - (self.k - self.phi[self.phi.len() - 1]) * e;
        }
        let (first, w) = lagrange_stencil(pos);
        w.iter().enumerate().map(|(a, wa)| wa * self.at_index(first + a as i64)).sum()
    }

    /// `φ′` at node `i` by fourth-order central differences.
    pub fn derivative(&self, i: usize) -> f64 {
        let q = i as i64;
        let h = self.spacing();
        (-self.at_index(q + 2) + 8.0 * self.at_index(q + 1) - 8.0 * self.at_index(q - 1) + self.at_index(q - 2))
            / (12.0 * h)
    }

    /// Position of the `K/2` level set by linear interpolation.
    pub fn half_level(&self) -> Option<f64> {
        level_crossing(&self.phi, 0.5 * self.k).map(|p| self.xi_min + p / self.m as f64)
    }
}

fn level_crossing(phi: &[f64], level: f64) -> Option<f64> {
    let i = phi.iter().position(|&v| v >= level)?;
    if i == 0 {
        return Some(0.0);
    }
    let (a, b) = (phi[i - 1], phi[i]);
    Some((i - 1) as f64 + (level - a) / (b - a))
}

/// The profile equation on a fixed grid, with its ghost continuation.
struct Frame<'a> {
    problem: &'a Problem,
    c: f64,
    h: f64,
    m: usize,
    n: usize,
    pl: usize,
    pr: usize,
    /// `V_i = Σ_j beta[j]·ext[i + beta_first + j]` realizes `(h*φ)(ξ_i − cτ)`.
    beta_first: i64,
    beta: Vec<f64>,
    left: Vec<(f64, f64)>,
    right: Vec<(f64, f64)>,
}

/// Fourth-order central first derivative, in units of `1/(12h)`.
const CENTRAL: [(i64, f64); 4] = [(-2, 1.0), (-1, -8.0), (1, 8.0), (2, -1.0)];

/// Fourth-order upwind-biased first derivative, in units of `1/(12h)`.
/// Unlike [`CENTRAL`] it has no neutral odd-even mode.
const BIASED: [(i64, f64); 5] = [(-3, -1.0), (-2, 6.0), (-1, -18.0), (0, 10.0), (1, 3.0)];

impl<'a> Frame<'a> {
    fn new(
        problem: &'a Problem,
        c: f64,
        m: usize,
        n: usize,
        left_tail: LeftTail,
        right_rate: f64,
        tail_tol: f64,
    ) -> Result<Frame<'a>, WaveError> {
        let h = 1.0 / m as f64;
        let weights = problem.kernel().discretize(h, tail_tol)?;
        let r = weights.radius() as i64;
        let shift = c * problem.tau() / h;
        let (first, lw) = lagrange_stencil(-shift);
        let mut beta = vec![0.0; STENCIL + 2 * r as usize];
        let beta_first = first - r;
        for (a, la) in lw.iter().enumerate() {
            if *la == 0.0 {
                continue;
            }
            for kk in -r..=r {
                let t = first + a as i64 - kk;
                beta[(t - beta_first) as usize] += la * weights.weight(kk);
            }
        }
        // trim exact zeros (integer shifts)
        let lead = beta.iter().position(|&b| b != 0.0).unwrap_or(0);
        let trail = beta.iter().rposition(|&b| b != 0.0).unwrap_or(0);
        let beta: Vec<f64> = beta[lead..=trail].to_vec();
        let beta_first = beta_first + lead as i64;
        let beta_last = beta_first + beta.len() as i64 - 1;
        let pl = (m as i64).max(3).max(-beta_first) as usize;
        let pr = (m as i64).max(2).max(beta_last) as usize;
        if n <= pl + pr + 2 {
            return Err(WaveError::Settings("profile grid too short for the stencil"));
        }
        let k = problem.k();
        let left = (0..=pl).map(|sn| left_tail.coefficients(sn as f64 * h, h)).collect();
        let right = (0..=pr)
            .map(|sn| {
                let e = (-right_rate * sn as f64 * h).exp();
                (k * (1.0 - e), e)
            })
            .collect();
        Ok(Frame { problem, c, h, m, n, pl, pr, beta_first, beta, left, right })
    }

    fn extend(&self, phi: &[f64], ext: &mut Vec<f64>) {
        let (n, pl, pr) = (self.n, self.pl, self.pr);
        ext.resize(n + pl + pr, 0.0);
        ext[pl..pl + n].copy_from_slice(phi);
        for sn in 1..=pl {
            let (a0, a1) = self.left[sn];
            ext[pl - sn] = a0 * phi[0] + a1 * phi[1];
        }
        for sn in 1..=pr {
            let (b, e) = self.right[sn];
            ext[pl + n - 1 + sn] = b + e * phi[n - 1];
        }
    }

    fn delayed(&self, ext: &[f64], q: usize) -> f64 {
        let start = (q as i64 + self.beta_first) as usize;
        self.beta.iter().zip(&ext[start..start + self.beta.len()]).map(|(b, u)| b * u).sum()
    }

    /// Fourth-order residual at every node.
    fn residual(&self, phi: &[f64], ext: &mut Vec<f64>, out: &mut [f64]) {
        self.residual_with(&CENTRAL, phi, ext, out)
    }

    fn residual_with(&self, stencil: &[(i64, f64)], phi: &[f64], ext: &mut Vec<f64>, out: &mut [f64]) {
        self.extend(phi, ext);
        let (h, m, d) = (self.h, self.m, self.problem.d());
        let model = self.problem.model();
        for i in 0..self.n {
            let q = self.pl + i;
            let dphi = stencil.iter().map(|&(o, w)| w * ext[(q as i64 + o) as usize]).sum::<f64>() / (12.0 * h);
            let lap = ext[q + m] - 2.0 * ext[q] + ext[q - m];
            out[i] = -self.c * dphi + d * lap + model.f(ext[q], self.delayed(ext, q));
        }
    }

    /// Moving-frame right-hand side with upwind advection.
    fn upwind(&self, phi: &[f64], ext: &mut Vec<f64>, out: &mut [f64]) {
        self.extend(phi, ext);
        let (h, m, d) = (self.h, self.m, self.problem.d());
        let model = self.problem.model();
        for i in 0..self.n {
            let q = self.pl + i;
            let dphi = (ext[q] - ext[q - 1]) / h;
            let lap = ext[q + m] - 2.0 * ext[q] + ext[q - m];
            out[i] = -self.c * dphi + d * lap + model.f(ext[q], self.delayed(ext, q));
        }
    }

    /// Nodes whose stencil stays on the grid.
    fn interior(&self) -> core::ops::Range<usize> {
        let beta_last = self.beta_first + self.beta.len() as i64 - 1;
        let lo = (self.m as i64).max(2).max(-self.beta_first) as usize;
        let hi = self.n - (self.m as i64).max(2).max(beta_last) as usize;
        lo..hi
    }

    fn push_column(&self, q: i64, coef: f64, row: &mut Vec<(usize, f64)>) {
        let (pl, n) = (self.pl as i64, self.n as i64);
        if q < pl {
            let (a0, a1) = self.left[(pl - q) as usize];
            row.push((0, coef * a0));
            row.push((1, coef * a1));
        } else if q >= pl + n {
            let (_, e) = self.right[(q - (pl + n - 1)) as usize];
            row.push(((n - 1) as usize, coef * e));
        } else {
            row.push(((q - pl) as usize, coef));
        }
    }

    /// Jacobian of [`Frame::residual`] with row `phase_row` replaced by the
    /// unit row.
    fn jacobian(&self, ext: &[f64], phase_row: Option<usize>) -> Result<BandedMatrix, WaveError> {
        let m = self.m as i64;
        let beta_last = self.beta_first + self.beta.len() as i64 - 1;
        let kl = m.max(3).max(-self.beta_first) as usize;
        let ku = m.max(2).max(beta_last).max(1) as usize;
        let mut jac = BandedMatrix::zeros(self.n, kl, ku);
        let (h, d, c) = (self.h, self.problem.d(), self.c);
        let model = self.problem.model();
        let mut row = Vec::new();
        for i in 0..self.n {
            if Some(i) == phase_row {
                jac.add(i, i, 1.0)?;
                continue;
            }
            row.clear();
            let q = (self.pl + i) as i64;
            let a = -c / (12.0 * h);
            for (off, w) in BIASED {
                self.push_column(q + off, a * w, &mut row);
            }
            self.push_column(q + m, d, &mut row);
            self.push_column(q - m, d, &mut row);
            let u = ext[q as usize];
            let v = self.delayed(ext, q as usize);
            self.push_column(q, -2.0 * d + model.d1f(u, v), &mut row);
            let g2 = model.d2f(u, v);
            for (j, b) in self.beta.iter().enumerate() {
                self.push_column(q + self.beta_first + j as i64, g2 * b, &mut row);
            }
            for &(col, val) in &row {
                jac.add(i, col, val)?;
            }
        }
        Ok(jac)
    }
}

fn sup(v: &[f64]) -> f64 {
    v.iter().fold(0.0f64, |m, x| m.max(x.abs()))
}

/// Shifts samples so that the new profile is `φ(ξ + delta)`.
fn shift_samples(frame: &Frame, phi: &mut [f64], delta: f64, ext: &mut Vec<f64>) {
    frame.extend(phi, ext);
    let offset = delta / frame.h;
    let pl = frame.pl as i64;
    let last = ext.len() as i64 - 1;
    for (i, p) in phi.iter_mut().enumerate() {
        let (first, w) = lagrange_stencil(i as f64 + offset);
        *p = w
            .iter()
            .enumerate()
            .map(|(a, wa)| wa * ext[(first + a as i64 + pl).clamp(0, last) as usize])
            .sum();
    }
}

/// Sup and L² norm of the residual of the profile equation on the nodes
/// whose stencil stays on the grid.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize))]
pub struct ResidualNorms {
    pub sup: f64,
    pub l2: f64,
}

pub fn profile_residual(problem: &Problem, profile: &WaveProfile) -> Result<ResidualNorms, WaveError> {
    profile_residual_with(problem, profile, 1e-12)
}

pub fn profile_residual_with(
    problem: &Problem,
    profile: &WaveProfile,
    tail_tol: f64,
) -> Result<ResidualNorms, WaveError> {
    let frame = Frame::new(
        problem,
        profile.c,
        profile.m,
        profile.len(),
        profile.left_tail,
        profile.right_rate,
        tail_tol,
    )?;
    Ok(interior_residual(&frame, &profile.phi))
}

fn interior_residual(frame: &Frame, phi: &[f64]) -> ResidualNorms {
    let mut ext = Vec::new();
    let mut r = vec![0.0; frame.n];
    frame.residual(phi, &mut ext, &mut r);
    let inner = &r[frame.interior()];
    ResidualNorms { sup: sup(inner), l2: (inner.iter().map(|x| x * x).sum::<f64>() * frame.h).sqrt() }
}

/// Grid bounds `(ξ_min, ξ_max)` that resolve about nine decades of each
/// tail, rounded to the grid.
pub fn auto_domain(left_rate: f64, right_rate: f64, m: usize) -> (f64, f64) {
    let span = (2e9f64).ln();
    let round = |x: f64| (x * m as f64).round() / m as f64;
    (round(-(span / left_rate + 8.0)), round(span / right_rate + 8.0))
}

/// Computes the front of speed `c ≥ c*`.
pub fn relax_profile(disp: &Dispersion, c: f64, settings: &RelaxSettings) -> Result<WaveProfile, WaveError> {
    let problem = disp.problem();
    if c < disp.c_star() - 1e-9 {
        return Err(WaveError::BelowMinimalSpeed { c, c_star: disp.c_star() });
    }
    if settings.m == 0 || !(settings.t_relax > 0.0) || !(settings.tol > 0.0) {
        return Err(WaveError::Settings("need m > 0, t_relax > 0 and tol > 0"));
    }
    let critical = disp.is_critical(c) || c < disp.c_star();
    let left_tail = if critical {
        LeftTail::Critical { rate: disp.lambda_star() }
    } else {
        let (l1, l2) = disp.lambda_roots(c)?;
        if l2 - l1 > 1e-3 {
            LeftTail::TwoMode { rate: l1, rate2: l2 }
        } else {
            LeftTail::Critical { rate: 0.5 * (l1 + l2) }
        }
    };
    let upsilon = disp.upsilon(c)?;
    let m = settings.m;
    let (auto_lo, auto_hi) = auto_domain(left_tail.rate(), upsilon, m);
    let xi_min = settings.xi_min.unwrap_or(auto_lo);
    let xi_max = settings.xi_max.unwrap_or(auto_hi);
    let n_left = (-xi_min * m as f64).round();
    let n_right = (xi_max * m as f64).round();
    if !(n_left > 0.0 && n_right > 0.0) || (n_left - (-xi_min * m as f64)).abs() > 1e-9 {
        return Err(WaveError::Settings("need xi_min < 0 < xi_max on the grid of spacing 1/m"));
    }
    let n = (n_left + n_right) as usize + 1;
    let i0 = n_left as usize;
    let xi_min = -n_left / m as f64;
    let h = 1.0 / m as f64;
    let k = problem.k();
    let frame = Frame::new(problem, c, m, n, left_tail, upsilon, settings.tail_tol)?;

    // smoothed step with left tail e^{λξ}
    let lam = left_tail.rate();
    let mut phi: Vec<f64> = (0..n)
        .map(|i| {
            let xi = xi_min + i as f64 * h - settings.initial_shift;
            k / (1.0 + (-lam * xi).exp())
        })
        .collect();

    let lf = problem.model().lipschitz_bound(33);
    let dt = settings.dt.unwrap_or(0.9 / (c.abs() / h + 2.0 * problem.d() + lf));
    let check_every = ((1.0 / dt).ceil() as u64).max(1);
    let mut ext = Vec::new();
    let mut rhs = vec![0.0; n];
    let mut steps = 0u64;
    let mut converged = false;
    let (mut residual_mod, mut drift) = (f64::INFINITY, 0.0);
    let max_steps = (settings.t_relax / dt).ceil() as u64;
    while steps < max_steps {
        frame.upwind(&phi, &mut ext, &mut rhs);
        if steps % check_every == 0 {
            // v_t ≈ −s·φ′ for a front drifting at speed s
            let dphi: Vec<f64> = (0..n).map(|i| (ext[frame.pl + i + 1] - ext[frame.pl + i - 1]) / (2.0 * h)).collect();
            let pp: f64 = dphi.iter().map(|x| x * x).sum();
            let s = if pp > 0.0 { -rhs.iter().zip(&dphi).map(|(r, p)| r * p).sum::<f64>() / pp } else { 0.0 };
            residual_mod = rhs.iter().zip(&dphi).fold(0.0f64, |mx, (r, p)| mx.max((r + s * p).abs()));
            drift = s;
            if residual_mod < settings.tol * k {
                converged = true;
                break;
            }
            if let Some(pos) = level_crossing(&phi, 0.5 * k) {
                let off = xi_min + pos * h;
                if off.abs() > h {
                    shift_samples(&frame, &mut phi, off, &mut ext);
                    continue;
                }
            }
        }
        for (p, r) in phi.iter_mut().zip(&rhs) {
            *p += dt * r;
        }
        steps += 1;
    }
    let t = steps as f64 * dt;
    // critical fronts settle algebraically slowly; a nearly steady state is
    // still a good starting point for Newton
    if !converged && !(settings.polish && residual_mod < 1e-3 * k) {
        return Err(WaveError::NonConvergence { t, residual: residual_mod, drift });
    }
    if let Some(pos) = level_crossing(&phi, 0.5 * k) {
        shift_samples(&frame, &mut phi, xi_min + pos * h, &mut ext);
    }
    let relaxed = interior_residual(&frame, &phi);

    let mut iterations = 0;
    if settings.polish {
        iterations = newton(&frame, &mut phi, Some(i0), k)?;
        if let Some(pos) = level_crossing(&phi, 0.5 * k) {
            shift_samples(&frame, &mut phi, xi_min + pos * h, &mut ext);
        }
    }
    let norms = interior_residual(&frame, &phi);

    let mut min_inc = f64::INFINITY;
    let mut min_at = 0;
    for i in 0..n - 1 {
        let inc = phi[i + 1] - phi[i];
        if inc < min_inc {
            min_inc = inc;
            min_at = i;
        }
    }
    if !(min_inc > 0.0) {
        return Err(WaveError::Monotonicity { violation: min_inc, xi: xi_min + min_at as f64 * h });
    }
    if let Some(i) = phi.iter().position(|&v| !(v > 0.0 && v < k)) {
        return Err(WaveError::Range { xi: xi_min + i as f64 * h, value: phi[i] });
    }
    if !(phi[0] < 1e-3 * k && k - phi[n - 1] < 1e-3 * k) {
        return Err(WaveError::Limits { left: phi[0], right: k - phi[n - 1] });
    }
    Ok(WaveProfile {
        c,
        k,
        m,
        xi_min,
        phi,
        left_tail,
        right_rate: upsilon,
        diagnostics: ProfileDiagnostics {
            residual_sup: norms.sup,
            residual_l2: norms.l2,
            relaxation_residual_sup: relaxed.sup,
            relaxation_time: t,
            relaxation_steps: steps,
            relaxation_converged: converged,
            drift,
            newton_iterations: iterations,
            min_increment: min_inc,
        },
    })
}

/// Newton's method on the profile equation, with the leftmost equation
/// replaced by the phase condition `φ_{i0} = K/2` when `i0` is given.
///
/// Both characteristic modes decay on the left, so the left end carries no
/// boundary condition of its own and the dropped equation is the one where
/// `φ` is smallest. The phase row lies outside the band and is handled by a
/// Sherman–Morrison correction. Advection uses the biased stencil: the
/// odd-even mode of the central one is neutral and gets excited by the
/// truncation.
fn newton(frame: &Frame, phi: &mut [f64], i0: Option<usize>, k: f64) -> Result<usize, WaveError> {
    let n = phi.len();
    let mut ext = Vec::new();
    let mut r = vec![0.0; n];
    let full = |phi: &[f64], ext: &mut Vec<f64>, r: &mut [f64]| {
        frame.residual_with(&BIASED, phi, ext, r);
        if let Some(i0) = i0 {
            r[0] = phi[i0] - 0.5 * k;
        }
        sup(r)
    };
    let mut norm = full(phi, &mut ext, &mut r);
    let target = 1e-13 * k;
    let mut trial = vec![0.0; n];
    let mut rt = vec![0.0; n];
    let mut e0 = vec![0.0; n];
    e0[0] = 1.0;
    for it in 0..40 {
        if norm <= target {
            return Ok(it);
        }
        // J0 has row 0 = e_0; the system matrix is J0 + e_0 (e_{i0} − e_0)ᵀ
        let lu = frame.jacobian(&ext, i0.map(|_| 0))?.factor()?;
        let rhs: Vec<f64> = r.iter().map(|x| -x).collect();
        let y = lu.solve(&rhs);
        let delta: Vec<f64> = match i0 {
            Some(i0) => {
                let z = lu.solve(&e0);
                let coef = (y[i0] - y[0]) / (1.0 + z[i0] - z[0]);
                y.iter().zip(&z).map(|(a, b)| a - coef * b).collect()
            }
            None => y,
        };
        let mut alpha = 1.0;
        loop {
            for i in 0..n {
                trial[i] = phi[i] + alpha * delta[i];
            }
            let nt = full(&trial, &mut ext, &mut rt);
            if nt < norm * (1.0 - 1e-4 * alpha) || alpha < 1.0 / 64.0 {
                phi.copy_from_slice(&trial);
                core::mem::swap(&mut r, &mut rt);
                let stalled = nt >= norm;
                norm = nt;
                if stalled {
                    if norm <= 1e-10 * k {
                        return Ok(it + 1);
                    }
                    return Err(WaveError::Newton { iterations: it + 1, residual: norm });
                }
                break;
            }
            alpha *= 0.5;
        }
        if sup(&delta) * alpha <= 1e-15 * k && norm <= 1e-10 * k {
            return Ok(it + 1);
        }
    }
    if norm <= 1e-10 * k {
        Ok(40)
    } else {
        Err(WaveError::Newton { iterations: 40, residual: norm })
    }
}

/// Fitted and predicted tail rates.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize))]
pub struct TailSlopes {
    /// Slope of `ln φ` over `φ ∈ [1e-8K, 1e-4K]`.
    pub left_slope: f64,
    /// Slope of `−ln(K − φ)` over `K − φ ∈ [1e-8K, 1e-4K]`.
    pub right_slope: f64,
    /// `λ1(c)`, or `λ*` at the critical speed.
    pub lambda_pred: f64,
    pub upsilon_pred: f64,
    pub left_fit: LineFit,
    /// Fit of `ln φ − ln|ξ|`, the form of the critical tail.
    pub left_prefactor_fit: LineFit,
    pub right_fit: LineFit,
}

pub fn tail_slopes(profile: &WaveProfile, disp: &Dispersion) -> Result<TailSlopes, WaveError> {
    let k = profile.k;
    let window = |v: f64| v >= 1e-8 * k && v <= 1e-4 * k;
    let left: Vec<(f64, f64)> = (0..profile.len())
        .filter(|&i| profile.xi(i) < 0.0 && window(profile.phi[i]))
        .map(|i| (profile.xi(i), profile.phi[i]))
        .collect();
    let right: Vec<(f64, f64)> = (0..profile.len())
        .filter(|&i| profile.xi(i) > 0.0 && window(k - profile.phi[i]))
        .map(|i| (profile.xi(i), k - profile.phi[i]))
        .collect();
    let spans = |pts: &[(f64, f64)]| {
        let lo = pts.iter().fold(f64::INFINITY, |m, p| m.min(p.1));
        let hi = pts.iter().fold(0.0f64, |m, p| m.max(p.1));
        pts.len() >= 10 && hi / lo > 1e3
    };
    if !spans(&left) {
        return Err(WaveError::TailResolution { side: "left" });
    }
    if !spans(&right) {
        return Err(WaveError::TailResolution { side: "right" });
    }
    let left_fit = fit_line(left.iter().map(|&(x, v)| (x, v.ln()))).ok_or(WaveError::TailResolution { side: "left" })?;
    let left_prefactor_fit = fit_line(left.iter().map(|&(x, v)| (x, v.ln() - x.abs().ln())))
        .ok_or(WaveError::TailResolution { side: "left" })?;
    let right_fit =
        fit_line(right.iter().map(|&(x, v)| (x, -v.ln()))).ok_or(WaveError::TailResolution { side: "right" })?;
    let lambda_pred = disp.lambda_roots(profile.c.max(disp.c_star()))?.0;
    Ok(TailSlopes {
        left_slope: left_fit.slope,
        right_slope: right_fit.slope,
        lambda_pred,
        upsilon_pred: disp.upsilon(profile.c)?,
        left_fit,
        left_prefactor_fit,
        right_fit,
    })
}
