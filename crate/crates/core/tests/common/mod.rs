//! Independent reference computations shared by the integration tests.
//!
//! Nothing here calls into the solvers under test; the oracles rebuild the
//! quantities from their defining formulas.
#![allow(dead_code)]

use ldfront_core::{Dispersion, Kernel, Model, Problem};

pub fn host_vector(tau: f64) -> Problem {
    let m = Model::make_builtin("host_vector", &[("a", 0.5), ("b", 1.0)]).unwrap();
    Problem::new(m, Kernel::dirac(), 1.0, tau).unwrap()
}

pub fn analyzed(problem: &Problem) -> Dispersion {
    Dispersion::analyze(problem).unwrap()
}

/// Linearization data at `u = 0` and the kernel moment, written out by hand.
#[derive(Clone, Copy, Debug)]
pub struct DeltaOracle {
    pub d: f64,
    pub tau: f64,
    /// `∂1f(0,0)`, `∂2f(0,0)`.
    pub f0: (f64, f64),
    /// `None` for the point mass, else the Gaussian `α` with `G = e^{αλ²}`.
    pub alpha: Option<f64>,
}

impl DeltaOracle {
    pub fn g(&self, lambda: f64) -> f64 {
        self.alpha.map_or(1.0, |a| (a * lambda * lambda).exp())
    }

    pub fn delta(&self, c: f64, lambda: f64) -> f64 {
        let (d1, d2) = self.f0;
        c * lambda - self.d * (2.0 * lambda.cosh() - 2.0) - d1 - d2 * (-lambda * c * self.tau).exp() * self.g(lambda)
    }

    /// `Δ` is increasing in `c` for `λ > 0`, so the zero in `c` is unique.
    pub fn c_of_lambda(&self, lambda: f64) -> f64 {
        let mut lo = 0.0;
        let mut hi = 1.0;
        while self.delta(hi, lambda) < 0.0 {
            lo = hi;
            hi *= 2.0;
        }
        while hi - lo > 1e-10 {
            let mid = 0.5 * (lo + hi);
            if self.delta(mid, lambda) < 0.0 {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        0.5 * (lo + hi)
    }

    /// `(c*, λ*)` as the minimum of `c(λ)` over the grid `λ = k·1e-4`.
    pub fn scan_cstar(&self, lambda_max: f64) -> (f64, f64) {
        let n = (lambda_max / 1e-4) as usize;
        (1..=n)
            .map(|k| {
                let l = k as f64 * 1e-4;
                (self.c_of_lambda(l), l)
            })
            .fold((f64::INFINITY, 0.0), |best, cur| if cur.0 < best.0 { cur } else { best })
    }
}

/// Oracle for the built-in models at `u = v = 0`.
pub fn oracle_for(model: &str, params: &[(&str, f64)], d: f64, tau: f64, alpha: Option<f64>) -> DeltaOracle {
    let get = |k: &str| params.iter().find(|p| p.0 == k).map(|p| p.1).unwrap();
    let f0 = match model {
        // f = −au + bv(1 − u)
        "host_vector" => (-get("a"), get("b")),
        "fisher_kpp" => (0.0, 1.0),
        // f = −δu + pve^{−av}
        "nicholson" => (-get("delta"), get("p")),
        _ => panic!("no oracle for {model}"),
    };
    DeltaOracle { d, tau, f0, alpha }
}

/// Plain bisection to `1e-14` on a bracket with a sign change.
pub fn bisect(f: impl Fn(f64) -> f64, mut lo: f64, mut hi: f64) -> f64 {
    let flo = f(lo);
    assert!(flo * f(hi) <= 0.0, "no sign change on [{lo}, {hi}]");
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if (f(mid) < 0.0) == (flo < 0.0) {
            lo = mid;
        } else {
            hi = mid;
        }
        if hi - lo < 1e-15 {
            break;
        }
    }
    0.5 * (lo + hi)
}

/// Nodes and weights of the `n`-point Gauss–Legendre rule on `[−1, 1]`.
pub fn gauss_legendre(n: usize) -> Vec<(f64, f64)> {
    (0..n)
        .map(|i| {
            let mut x = (std::f64::consts::PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
            loop {
                let (mut p0, mut p1) = (1.0, x);
                for k in 2..=n {
                    let p2 = ((2 * k - 1) as f64 * x * p1 - (k - 1) as f64 * p0) / k as f64;
                    p0 = p1;
                    p1 = p2;
                }
                let dp = n as f64 * (x * p1 - p0) / (x * x - 1.0);
                let step = p1 / dp;
                x -= step;
                if step.abs() < 1e-16 {
                    let (mut q0, mut q1) = (1.0, x);
                    for k in 2..=n {
                        let q2 = ((2 * k - 1) as f64 * x * q1 - (k - 1) as f64 * q0) / k as f64;
                        q0 = q1;
                        q1 = q2;
                    }
                    let dq = n as f64 * (x * q1 - q0) / (x * x - 1.0);
                    return (x, 2.0 / ((1.0 - x * x) * dq * dq));
                }
            }
        })
        .collect()
}

fn integrate(rule: &[(f64, f64)], a: f64, b: f64, f: impl Fn(f64) -> f64) -> f64 {
    let (mid, half) = (0.5 * (a + b), 0.5 * (b - a));
    rule.iter().map(|&(x, w)| w * f(mid + half * x)).sum::<f64>() * half
}

/// `z′(t) = −c1 z(t) + c2 z(t − τ)` with history `z0`, by the method of
/// steps: on `[kτ, t]`, `z(t) = e^{−c1(t−kτ)}z(kτ) + c2∫ e^{−c1(t−s)}z(s−τ)ds`,
/// each integral by Gauss–Legendre on a piece where `z(s − τ)` is smooth.
pub struct StepsOracle<'a> {
    pub c1: f64,
    pub c2: f64,
    pub tau: f64,
    pub history: &'a dyn Fn(f64) -> f64,
    rule: Vec<(f64, f64)>,
}

impl<'a> StepsOracle<'a> {
    pub fn new(c1: f64, c2: f64, tau: f64, history: &'a dyn Fn(f64) -> f64) -> Self {
        StepsOracle { c1, c2, tau, history, rule: gauss_legendre(14) }
    }

    pub fn z(&self, t: f64) -> f64 {
        if t <= 0.0 {
            return (self.history)(t);
        }
        let mut k = (t / self.tau).floor();
        if k * self.tau >= t {
            k -= 1.0;
        }
        let a = k * self.tau;
        let za = if a <= 0.0 { (self.history)(0.0) } else { self.z(a) };
        let tail = integrate(&self.rule, a, t, |s| (-self.c1 * (t - s)).exp() * self.z(s - self.tau));
        (-self.c1 * (t - a)).exp() * za + self.c2 * tail
    }
}

/// Fisher–KPP law `f(u, v) = v(1 − u)` for hand-written integrators.
pub fn fisher_f(u: f64, v: f64) -> f64 {
    v * (1.0 - u)
}

/// Whether every forward difference is positive.
pub fn strictly_increasing(v: &[f64]) -> bool {
    v.windows(2).all(|w| w[1] > w[0])
}
