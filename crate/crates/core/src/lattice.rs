//! Method-of-lines integration of
//! `u_t = d·[u(x+1) − 2u(x) + u(x−1)] + f(u, (h*u)(x, t−τ))`
//! on a truncated grid with spacing `1/m`.

use alloc::boxed::Box;
use alloc::collections::VecDeque;
use alloc::vec;
use alloc::vec::Vec;
#[allow(unused_imports)]
use num_traits::Float;
use thiserror::Error;

use crate::dispersion::Problem;
use crate::kernels::{KernelError, KernelWeights};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum LatticeError {
    #[error("invalid grid: {0}")]
    Grid(&'static str),
    #[error("time step {dt} exceeds the stability bound {dt_max}")]
    StepTooLarge { dt: f64, dt_max: f64 },
    #[error("invalid run settings: {0}")]
    Settings(&'static str),
    #[error("non-finite value at node {node} (x = {x}) at t = {t}")]
    NonFinite { node: usize, x: f64, t: f64 },
    #[error("grids differ")]
    GridMismatch,
    #[error(transparent)]
    Kernel(#[from] KernelError),
}

/// Uniform grid `x_i = x_min + i/m`.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize))]
pub struct Grid {
    x_min: f64,
    m: usize,
    n_nodes: usize,
}

impl Grid {
    /// Requires `m·(x_max − x_min)` to be an integer and `x_max − x_min ≥ 2`.
    pub fn new(x_min: f64, x_max: f64, m: usize) -> Result<Grid, LatticeError> {
        if m == 0 {
            return Err(LatticeError::Grid("m must be positive"));
        }
        if !(x_min.is_finite() && x_max.is_finite()) || x_max - x_min < 2.0 {
            return Err(LatticeError::Grid("need x_max - x_min >= 2"));
        }
        let cells = (x_max - x_min) * m as f64;
        if (cells - cells.round()).abs() > 1e-9 * cells.max(1.0) {
            return Err(LatticeError::Grid("m (x_max - x_min) must be an integer"));
        }
        Ok(Grid { x_min, m, n_nodes: cells.round() as usize + 1 })
    }

    pub fn m(&self) -> usize {
        self.m
    }

    pub fn spacing(&self) -> f64 {
        1.0 / self.m as f64
    }

    pub fn len(&self) -> usize {
        self.n_nodes
    }

    pub fn is_empty(&self) -> bool {
        self.n_nodes == 0
    }

    pub fn x_min(&self) -> f64 {
        self.x_min
    }

    pub fn x_max(&self) -> f64 {
        self.x(self.n_nodes - 1)
    }

    pub fn x(&self, i: usize) -> f64 {
        self.x_min + i as f64 / self.m as f64
    }

    pub fn xs(&self) -> impl Iterator<Item = f64> + '_ {
        (0..self.n_nodes).map(move |i| self.x(i))
    }

    /// Index of the node nearest to `x`, clamped to the grid.
    pub fn index_of(&self, x: f64) -> usize {
        let i = ((x - self.x_min) * self.m as f64).round();
        (i.max(0.0) as usize).min(self.n_nodes - 1)
    }

    /// Shifted copy with the same spacing.
    pub fn shifted(&self, dx: f64) -> Grid {
        Grid { x_min: self.x_min + dx, ..*self }
    }
}

/// Treatment of the nodes within one unit of either edge, whose `±1`
/// shifts would leave the grid.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
#[cfg_attr(feature = "serde", derive(serde::Serialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "snake_case"))]
pub enum Boundary {
    /// Clamped to `0` on the left and `K` on the right.
    #[default]
    Equilibria,
    /// Frozen at the initial values.
    Hold,
}

/// `dt_max = min(0.2/(4d + L_f), τ/4)` with `L_f` sampled on `[0,K]²`.
pub fn dt_max(problem: &Problem) -> f64 {
    let lf = problem.model().lipschitz_bound(33);
    let mut dt = 0.2 / (4.0 * problem.d() + lf);
    if problem.tau() > 0.0 {
        dt = dt.min(problem.tau() / 4.0);
    }
    dt
}

/// `out_i = u_{i+m} − 2u_i + u_{i−m}` on nodes `m ≤ i < n−m`; zero elsewhere.
pub fn discrete_laplacian(u: &[f64], m: usize, out: &mut [f64]) {
    let n = u.len();
    out.iter_mut().for_each(|o| *o = 0.0);
    if n <= 2 * m {
        return;
    }
    for i in m..n - m {
        out[i] = u[i + m] - 2.0 * u[i] + u[i - m];
    }
}

/// Past convolved fields `(h*u)(·, k·dt)` for the indices needed to reach
/// `t − τ` by linear interpolation.
#[derive(Debug, Clone)]
pub struct HistoryBuffer {
    dt: f64,
    /// `τ / dt`
    lag: f64,
    first: i64,
    slots: VecDeque<Vec<f64>>,
}

impl HistoryBuffer {
    fn new(tau: f64, dt: f64) -> Self {
        HistoryBuffer { dt, lag: tau / dt, first: 0, slots: VecDeque::new() }
    }

    fn oldest_needed(&self, newest: i64) -> i64 {
        newest - self.lag.floor() as i64 - 1
    }

    fn last_index(&self) -> i64 {
        self.first + self.slots.len() as i64 - 1
    }

    fn push(&mut self, field: Vec<f64>) {
        self.slots.push_back(field);
        let keep_from = self.oldest_needed(self.last_index());
        while self.first < keep_from && self.slots.len() > 2 {
            self.slots.pop_front();
            self.first += 1;
        }
    }

    /// Writes the delayed field at time `(step + frac)·dt − τ` into `out`.
    fn delayed(&self, step: i64, frac: f64, out: &mut [f64]) {
        let pos = step as f64 + frac - self.lag;
        let mut i0 = pos.floor();
        let mut w = pos - i0;
        if w > 1.0 - 1e-12 {
            i0 += 1.0;
            w = 0.0;
        }
        let slot = (i0 as i64 - self.first).clamp(0, self.slots.len() as i64 - 1) as usize;
        let a = &self.slots[slot];
        if w < 1e-12 || slot + 1 >= self.slots.len() {
            out.copy_from_slice(a);
        } else {
            let b = &self.slots[slot + 1];
            for ((o, x), y) in out.iter_mut().zip(a).zip(b) {
                *o = (1.0 - w) * x + w * y;
            }
        }
    }

    pub fn dt(&self) -> f64 {
        self.dt
    }

    pub fn len(&self) -> usize {
        self.slots.len()
    }

    pub fn is_empty(&self) -> bool {
        self.slots.is_empty()
    }
}

/// Integration settings.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize))]
pub struct RunSettings {
    pub dt: f64,
    pub t_end: f64,
    pub boundary: Boundary,
    /// Kernel mass that may be discarded when discretizing.
    pub tail_tol: f64,
}

impl RunSettings {
    pub fn new(dt: f64, t_end: f64) -> Self {
        RunSettings { dt, t_end, boundary: Boundary::Equilibria, tail_tol: 1e-12 }
    }

    pub fn with_boundary(mut self, boundary: Boundary) -> Self {
        self.boundary = boundary;
        self
    }

    pub fn steps(&self) -> u64 {
        (self.t_end / self.dt - 1e-9).ceil().max(0.0) as u64
    }
}

/// A running simulation; advance it with [`Simulation::step`].
pub struct Simulation<'p> {
    problem: &'p Problem,
    grid: Grid,
    weights: KernelWeights,
    dt: f64,
    boundary: Boundary,
    step: i64,
    u: Vec<f64>,
    history: HistoryBuffer,
    // ranges [0, band) and [n−band, n) are frozen
    band: usize,
    scratch: Scratch,
}

struct Scratch {
    stage: Vec<f64>,
    k: [Vec<f64>; 4],
    delayed: [Vec<f64>; 3],
    conv: Vec<f64>,
}

impl<'p> Simulation<'p> {
    /// Starts from the history `initial(x, s)`, `s ∈ [−τ, 0]`.
    pub fn new(
        problem: &'p Problem,
        grid: Grid,
        settings: &RunSettings,
        initial: impl Fn(f64, f64) -> f64,
    ) -> Result<Self, LatticeError> {
        let dt = settings.dt;
        let bound = dt_max(problem);
        if !(dt > 0.0) {
            return Err(LatticeError::Settings("dt must be positive"));
        }
        if dt > bound * (1.0 + 1e-12) {
            return Err(LatticeError::StepTooLarge { dt, dt_max: bound });
        }
        if !(settings.t_end >= 0.0) {
            return Err(LatticeError::Settings("T must be nonnegative"));
        }
        let weights = problem.kernel().discretize(grid.spacing(), settings.tail_tol)?;
        let n = grid.len();
        let band = grid.m().min(n / 2);
        let tau = problem.tau();
        let mut sim = Simulation {
            problem,
            grid,
            weights,
            dt,
            boundary: settings.boundary,
            step: 0,
            u: vec![0.0; n],
            history: HistoryBuffer::new(tau, dt),
            band,
            scratch: Scratch {
                stage: vec![0.0; n],
                k: [vec![0.0; n], vec![0.0; n], vec![0.0; n], vec![0.0; n]],
                delayed: [vec![0.0; n], vec![0.0; n], vec![0.0; n]],
                conv: vec![0.0; n],
            },
        };
        if tau > 0.0 {
            let oldest = sim.history.oldest_needed(0);
            sim.history.first = oldest;
            for k in oldest..=0 {
                let s = (k as f64 * dt).max(-tau);
                let field = sim.sample(|x| initial(x, s));
                sim.history.slots.push_back(sim.weights.convolve(&field));
            }
        }
        sim.u = sim.sample(|x| initial(x, 0.0));
        sim.check_finite()?;
        Ok(sim)
    }

    fn sample(&self, g: impl Fn(f64) -> f64) -> Vec<f64> {
        let mut field: Vec<f64> = self.grid.xs().map(g).collect();
        if self.boundary == Boundary::Equilibria {
            let n = field.len();
            let k = self.problem.k();
            field[..self.band].iter_mut().for_each(|v| *v = 0.0);
            field[n - self.band..].iter_mut().for_each(|v| *v = k);
        }
        field
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn weights(&self) -> &KernelWeights {
        &self.weights
    }

    pub fn dt(&self) -> f64 {
        self.dt
    }

    pub fn steps_taken(&self) -> u64 {
        self.step as u64
    }

    pub fn time(&self) -> f64 {
        self.step as f64 * self.dt
    }

    pub fn state(&self) -> &[f64] {
        &self.u
    }

    pub fn history(&self) -> &HistoryBuffer {
        &self.history
    }

    fn rhs(problem: &Problem, m: usize, band: usize, u: &[f64], v: &[f64], out: &mut [f64]) {
        let n = u.len();
        let d = problem.d();
        let model = problem.model();
        out[..band].iter_mut().for_each(|o| *o = 0.0);
        out[n - band..].iter_mut().for_each(|o| *o = 0.0);
        for i in band..n - band {
            out[i] = d * (u[i + m] - 2.0 * u[i] + u[i - m]) + model.f(u[i], v[i]);
        }
    }

    /// One classical RK4 step.
    pub fn step(&mut self) -> Result<(), LatticeError> {
        let dt = self.dt;
        let m = self.grid.m();
        let band = self.band;
        let delayed = self.problem.tau() > 0.0;
        let s = &mut self.scratch;
        if delayed {
            self.history.delayed(self.step, 0.0, &mut s.delayed[0]);
            self.history.delayed(self.step, 0.5, &mut s.delayed[1]);
            self.history.delayed(self.step, 1.0, &mut s.delayed[2]);
        }
        let stage_coef = [0.0, 0.5, 0.5, 1.0];
        let delayed_slot = [0usize, 1, 1, 2];
        for st in 0..4 {
            if st == 0 {
                s.stage.copy_from_slice(&self.u);
            } else {
                let (prev, _) = s.k.split_at(st);
                let kp = &prev[st - 1];
                for ((y, u), k) in s.stage.iter_mut().zip(&self.u).zip(kp) {
                    *y = u + stage_coef[st] * dt * k;
                }
            }
            let v: &[f64] = if delayed {
                &s.delayed[delayed_slot[st]]
            } else if self.weights.is_identity() {
                &s.stage
            } else {
                self.weights.convolve_into(&s.stage, &mut s.conv);
                &s.conv
            };
            Self::rhs(self.problem, m, band, &s.stage, v, &mut s.k[st]);
        }
        for (i, u) in self.u.iter_mut().enumerate() {
            *u += dt / 6.0 * (s.k[0][i] + 2.0 * s.k[1][i] + 2.0 * s.k[2][i] + s.k[3][i]);
        }
        self.step += 1;
        self.check_finite()?;
        if delayed {
            let mut conv = vec![0.0; self.u.len()];
            self.weights.convolve_into(&self.u, &mut conv);
            self.history.push(conv);
        }
        Ok(())
    }

    fn check_finite(&self) -> Result<(), LatticeError> {
        match self.u.iter().position(|v| !v.is_finite()) {
            None => Ok(()),
            Some(node) => Err(LatticeError::NonFinite { node, x: self.grid.x(node), t: self.time() }),
        }
    }
}

/// Norms of a difference field `v` at one time.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize))]
pub struct NormSample {
    pub t: f64,
    pub sup: f64,
    pub l1w: f64,
    pub l2w: f64,
    pub l2: f64,
}

impl NormSample {
    /// Trapezoid norms of `v` with weights `w` on a grid of the given spacing.
    pub fn from_difference(t: f64, spacing: f64, v: &[f64], w: &[f64]) -> NormSample {
        let n = v.len();
        let mut sup: f64 = 0.0;
        let (mut l1w, mut l2w, mut l2) = (0.0, 0.0, 0.0);
        for i in 0..n {
            let end = if i == 0 || i + 1 == n { 0.5 } else { 1.0 };
            let a = v[i].abs();
            sup = sup.max(a);
            l1w += end * w[i] * a;
            l2w += end * w[i] * a * a;
            l2 += end * a * a;
        }
        NormSample { t, sup, l1w: l1w * spacing, l2w: (l2w * spacing).sqrt(), l2: (l2 * spacing).sqrt() }
    }
}

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize))]
pub struct Snapshot {
    pub t: f64,
    pub u: Vec<f64>,
}

/// Receives the state after every step (and at `t = 0`).
pub trait Observer {
    fn observe(&mut self, step: u64, t: f64, grid: &Grid, u: &[f64]);
}

impl<F: FnMut(u64, f64, &Grid, &[f64])> Observer for F {
    fn observe(&mut self, step: u64, t: f64, grid: &Grid, u: &[f64]) {
        self(step, t, grid, u)
    }
}

/// Records decimated snapshots and the norms of `u − reference`.
pub struct Recorder<'a> {
    pub snapshot_every: Option<u64>,
    pub norm_every: Option<u64>,
    reference: Option<Box<dyn Fn(f64, f64) -> f64 + 'a>>,
    weight: Option<Box<dyn Fn(f64, f64) -> f64 + 'a>>,
    pub snapshots: Vec<Snapshot>,
    pub norms: Vec<NormSample>,
    min_value: f64,
    max_value: f64,
}

impl<'a> Default for Recorder<'a> {
    fn default() -> Self {
        Recorder {
            snapshot_every: None,
            norm_every: None,
            reference: None,
            weight: None,
            snapshots: Vec::new(),
            norms: Vec::new(),
            min_value: f64::INFINITY,
            max_value: f64::NEG_INFINITY,
        }
    }
}

impl<'a> Recorder<'a> {
    pub fn snapshots_every(mut self, steps: u64) -> Self {
        self.snapshot_every = Some(steps.max(1));
        self
    }

    /// Records norms of `u(x,t) − reference(t, x)` weighted by `weight(t, x)`.
    pub fn norms_every(
        mut self,
        steps: u64,
        reference: impl Fn(f64, f64) -> f64 + 'a,
        weight: impl Fn(f64, f64) -> f64 + 'a,
    ) -> Self {
        self.norm_every = Some(steps.max(1));
        self.reference = Some(Box::new(reference));
        self.weight = Some(Box::new(weight));
        self
    }

    /// Smallest and largest value seen over all steps.
    pub fn range(&self) -> (f64, f64) {
        (self.min_value, self.max_value)
    }
}

impl Observer for Recorder<'_> {
    fn observe(&mut self, step: u64, t: f64, grid: &Grid, u: &[f64]) {
        for &v in u {
            self.min_value = self.min_value.min(v);
            self.max_value = self.max_value.max(v);
        }
        if self.snapshot_every.is_some_and(|k| step % k == 0) {
            self.snapshots.push(Snapshot { t, u: u.to_vec() });
        }
        if let (Some(k), Some(r), Some(w)) = (self.norm_every, &self.reference, &self.weight) {
            if step % k == 0 {
                let diff: Vec<f64> = grid.xs().zip(u).map(|(x, v)| v - r(t, x)).collect();
                let ws: Vec<f64> = grid.xs().map(|x| w(t, x)).collect();
                self.norms.push(NormSample::from_difference(t, grid.spacing(), &diff, &ws));
            }
        }
    }
}

/// Summary of an integration.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize))]
pub struct LatticeRun {
    pub grid: Grid,
    pub dt: f64,
    pub t_end: f64,
    pub steps: u64,
    pub boundary: Boundary,
    pub min_value: f64,
    pub max_value: f64,
    pub snapshots: Vec<Snapshot>,
    pub norms: Vec<NormSample>,
    pub final_state: Vec<f64>,
}

/// Integrates to `settings.t_end`, feeding every state to `observer`.
pub fn integrate_with(
    problem: &Problem,
    grid: Grid,
    settings: &RunSettings,
    initial: impl Fn(f64, f64) -> f64,
    observer: &mut dyn Observer,
) -> Result<Vec<f64>, LatticeError> {
    let mut sim = Simulation::new(problem, grid, settings, initial)?;
    observer.observe(0, 0.0, &grid, sim.state());
    for _ in 0..settings.steps() {
        sim.step()?;
        observer.observe(sim.steps_taken(), sim.time(), &grid, sim.state());
    }
    Ok(sim.u)
}

/// Integrates with a [`Recorder`] and collects its output.
pub fn integrate(
    problem: &Problem,
    grid: Grid,
    settings: &RunSettings,
    initial: impl Fn(f64, f64) -> f64,
    mut recorder: Recorder<'_>,
) -> Result<LatticeRun, LatticeError> {
    let final_state = integrate_with(problem, grid, settings, initial, &mut recorder)?;
    let (min_value, max_value) = recorder.range();
    Ok(LatticeRun {
        grid,
        dt: settings.dt,
        t_end: settings.steps() as f64 * settings.dt,
        steps: settings.steps(),
        boundary: settings.boundary,
        min_value,
        max_value,
        snapshots: recorder.snapshots,
        norms: recorder.norms,
        final_state,
    })
}

/// Integrates two ordered histories side by side and returns
/// `max (lower − upper)` over all nodes and steps, including `t = 0`.
pub fn check_comparison(
    problem: &Problem,
    grid: Grid,
    settings: &RunSettings,
    lower: impl Fn(f64, f64) -> f64,
    upper: impl Fn(f64, f64) -> f64,
) -> Result<f64, LatticeError> {
    let mut lo = Simulation::new(problem, grid, settings, lower)?;
    let mut hi = Simulation::new(problem, grid, settings, upper)?;
    let gap = |a: &Simulation, b: &Simulation| {
        a.state().iter().zip(b.state()).fold(f64::NEG_INFINITY, |m, (x, y)| m.max(x - y))
    };
    let mut worst = gap(&lo, &hi);
    for _ in 0..settings.steps() {
        lo.step()?;
        hi.step()?;
        worst = worst.max(gap(&lo, &hi));
    }
    Ok(worst)
}
