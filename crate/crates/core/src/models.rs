//! Reaction nonlinearities `f(u, v)` of monostable type.
//!
//! `u` is the local density and `v` the delayed, kernel-averaged density.
//! A [`Model`] carries `f`, its first and second partial derivatives and the
//! positive equilibrium `K`.

use alloc::format;
use alloc::string::{String, ToString};
use alloc::sync::Arc;
use alloc::vec::Vec;
use core::fmt;
use core::str::FromStr;
#[allow(unused_imports)]
use num_traits::Float;
use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ModelError {
    #[error("unknown model `{0}` (expected host_vector, fisher_kpp, age_structured or nicholson)")]
    UnknownModel(String),
    #[error("model `{model}` requires parameter `{param}`")]
    MissingParameter { model: &'static str, param: &'static str },
    #[error("model `{model}` does not take parameter `{param}`")]
    UnknownParameter { model: &'static str, param: String },
    #[error("model `{model}`: parameter constraint violated: {constraint}")]
    Constraint { model: &'static str, constraint: &'static str },
    #[error("invalid custom model: {0}")]
    InvalidCustom(&'static str),
}

/// A user supplied reaction law with analytic partial derivatives.
pub trait ReactionLaw: fmt::Debug + Send + Sync {
    fn f(&self, u: f64, v: f64) -> f64;
    fn d1(&self, u: f64, v: f64) -> f64;
    fn d2(&self, u: f64, v: f64) -> f64;
    fn d11(&self, u: f64, v: f64) -> f64;
    fn d12(&self, u: f64, v: f64) -> f64;
    fn d21(&self, u: f64, v: f64) -> f64 {
        self.d12(u, v)
    }
    fn d22(&self, u: f64, v: f64) -> f64;
}

/// The built-in application models.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
#[cfg_attr(feature = "serde", derive(serde::Serialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "snake_case"))]
pub enum Builtin {
    /// `f(u,v) = −a u + b v (1 − u)`.
    HostVector,
    /// `f(u,v) = v (1 − u)`, the host-vector law with `a = 0, b = 1`.
    FisherKpp,
    /// `f(u,v) = −δ u² + p e^{−γτ} v`.
    AgeStructured,
    /// `f(u,v) = −δ u + p v e^{−a v}`.
    Nicholson,
}

impl Builtin {
    pub const ALL: [Builtin; 4] =
        [Builtin::HostVector, Builtin::FisherKpp, Builtin::AgeStructured, Builtin::Nicholson];

    pub fn name(self) -> &'static str {
        match self {
            Builtin::HostVector => "host_vector",
            Builtin::FisherKpp => "fisher_kpp",
            Builtin::AgeStructured => "age_structured",
            Builtin::Nicholson => "nicholson",
        }
    }

    fn parameters(self) -> (&'static [&'static str], &'static [&'static str]) {
        // (required, optional)
        match self {
            Builtin::HostVector => (&["a", "b"], &[]),
            Builtin::FisherKpp => (&[], &[]),
            Builtin::AgeStructured => (&["delta", "p", "gamma", "tau"], &["alpha"]),
            Builtin::Nicholson => (&["delta", "p", "a"], &[]),
        }
    }
}

impl FromStr for Builtin {
    type Err = ModelError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Builtin::ALL
            .into_iter()
            .find(|b| b.name() == s)
            .ok_or_else(|| ModelError::UnknownModel(s.to_string()))
    }
}

impl fmt::Display for Builtin {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Debug, Clone)]
enum Law {
    HostVector { a: f64, b: f64 },
    AgeStructured { delta: f64, p_eff: f64 },
    Nicholson { delta: f64, p: f64, a: f64 },
    Custom(Arc<dyn ReactionLaw>),
}

/// Reaction nonlinearity with its carrying capacity `K`.
///
/// Immutable after construction.
#[derive(Debug, Clone)]
pub struct Model {
    name: String,
    builtin: Option<Builtin>,
    params: Vec<(String, f64)>,
    k: f64,
    law: Law,
}

impl Model {
    /// Builds one of the application models from named parameters.
    pub fn builtin(kind: Builtin, params: &[(&str, f64)]) -> Result<Model, ModelError> {
        let model = kind.name();
        let (required, optional) = kind.parameters();
        for (key, _) in params {
            if !required.contains(key) && !optional.contains(key) {
                return Err(ModelError::UnknownParameter { model, param: key.to_string() });
            }
        }
        let get = |key: &'static str| -> Result<f64, ModelError> {
            params
                .iter()
                .rev()
                .find(|(k, _)| *k == key)
                .map(|(_, v)| *v)
                .ok_or(ModelError::MissingParameter { model, param: key })
        };
        for key in required {
            get(key)?;
        }
        let constraint = |ok: bool, constraint: &'static str| {
            if ok {
                Ok(())
            } else {
                Err(ModelError::Constraint { model, constraint })
            }
        };
        let (k, law) = match kind {
            Builtin::HostVector => {
                let (a, b) = (get("a")?, get("b")?);
                constraint(a.is_finite() && b.is_finite(), "a and b must be finite")?;
                constraint(a >= 0.0, "a >= 0")?;
                constraint(b > a, "b > a")?;
                (1.0 - a / b, Law::HostVector { a, b })
            }
            Builtin::FisherKpp => (1.0, Law::HostVector { a: 0.0, b: 1.0 }),
            Builtin::AgeStructured => {
                let (delta, p, gamma, tau) = (get("delta")?, get("p")?, get("gamma")?, get("tau")?);
                constraint(delta > 0.0 && delta.is_finite(), "delta > 0")?;
                constraint(p > 0.0 && p.is_finite(), "p > 0")?;
                constraint(gamma > 0.0 && gamma.is_finite(), "gamma > 0")?;
                constraint(tau >= 0.0 && tau.is_finite(), "tau >= 0")?;
                if let Ok(alpha) = get("alpha") {
                    constraint(alpha > 0.0 && alpha.is_finite(), "alpha > 0")?;
                }
                let p_eff = p * (-gamma * tau).exp();
                (p_eff / delta, Law::AgeStructured { delta, p_eff })
            }
            Builtin::Nicholson => {
                let (delta, p, a) = (get("delta")?, get("p")?, get("a")?);
                constraint(delta > 0.0 && delta.is_finite(), "delta > 0")?;
                constraint(p > delta && p.is_finite(), "p > delta")?;
                constraint(a > 0.0 && a.is_finite(), "a > 0")?;
                ((p / delta).ln() / a, Law::Nicholson { delta, p, a })
            }
        };
        Ok(Model {
            name: model.to_string(),
            builtin: Some(kind),
            params: params.iter().map(|(k, v)| (k.to_string(), *v)).collect(),
            k,
            law,
        })
    }

    /// Builds a built-in model by name.
    pub fn make_builtin(name: &str, params: &[(&str, f64)]) -> Result<Model, ModelError> {
        Model::builtin(name.parse()?, params)
    }

    /// Wraps a user supplied law with carrying capacity `k`.
    pub fn custom(name: &str, k: f64, law: Arc<dyn ReactionLaw>) -> Result<Model, ModelError> {
        if !(k > 0.0 && k.is_finite()) {
            return Err(ModelError::InvalidCustom("carrying capacity must be positive and finite"));
        }
        Ok(Model { name: name.to_string(), builtin: None, params: Vec::new(), k, law: Law::Custom(law) })
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn kind(&self) -> Option<Builtin> {
        self.builtin
    }

    pub fn params(&self) -> &[(String, f64)] {
        &self.params
    }

    pub fn param(&self, key: &str) -> Option<f64> {
        self.params.iter().rev().find(|(k, _)| k == key).map(|(_, v)| *v)
    }

    /// Carrying capacity (positive equilibrium).
    pub fn k(&self) -> f64 {
        self.k
    }

    pub fn f(&self, u: f64, v: f64) -> f64 {
        match &self.law {
            Law::HostVector { a, b } => -a * u + b * v * (1.0 - u),
            Law::AgeStructured { delta, p_eff } => -delta * u * u + p_eff * v,
            Law::Nicholson { delta, p, a } => -delta * u + p * v * (-a * v).exp(),
            Law::Custom(l) => l.f(u, v),
        }
    }

    pub fn d1f(&self, u: f64, v: f64) -> f64 {
        match &self.law {
            Law::HostVector { a, b } => -a - b * v,
            Law::AgeStructured { delta, .. } => -2.0 * delta * u,
            Law::Nicholson { delta, .. } => -delta,
            Law::Custom(l) => l.d1(u, v),
        }
    }

    pub fn d2f(&self, u: f64, v: f64) -> f64 {
        match &self.law {
            Law::HostVector { b, .. } => b * (1.0 - u),
            Law::AgeStructured { p_eff, .. } => *p_eff,
            Law::Nicholson { p, a, .. } => p * (-a * v).exp() * (1.0 - a * v),
            Law::Custom(l) => l.d2(u, v),
        }
    }

    pub fn d11f(&self, u: f64, v: f64) -> f64 {
        match &self.law {
            Law::HostVector { .. } | Law::Nicholson { .. } => 0.0,
            Law::AgeStructured { delta, .. } => -2.0 * delta,
            Law::Custom(l) => l.d11(u, v),
        }
    }

    pub fn d12f(&self, u: f64, v: f64) -> f64 {
        match &self.law {
            Law::HostVector { b, .. } => -b,
            Law::AgeStructured { .. } | Law::Nicholson { .. } => 0.0,
            Law::Custom(l) => l.d12(u, v),
        }
    }

    pub fn d21f(&self, u: f64, v: f64) -> f64 {
        match &self.law {
            Law::Custom(l) => l.d21(u, v),
            _ => self.d12f(u, v),
        }
    }

    pub fn d22f(&self, u: f64, v: f64) -> f64 {
        match &self.law {
            Law::HostVector { .. } | Law::AgeStructured { .. } => 0.0,
            Law::Nicholson { p, a, .. } => p * (-a * v).exp() * (a * a * v - 2.0 * a),
            Law::Custom(l) => l.d22(u, v),
        }
    }

    /// `max(|∂1f| + |∂2f|)` over an `n × n` grid of `[0,K]²`.
    pub fn lipschitz_bound(&self, n: usize) -> f64 {
        let n = n.max(2);
        let mut best: f64 = 0.0;
        for i in 0..n {
            for j in 0..n {
                let (u, v) = self.grid_point(n, i, j);
                best = best.max(self.d1f(u, v).abs() + self.d2f(u, v).abs());
            }
        }
        best
    }

    fn grid_point(&self, n: usize, i: usize, j: usize) -> (f64, f64) {
        let h = self.k / (n - 1) as f64;
        (h * i as f64, h * j as f64)
    }
}

/// One sampled point of a hypothesis check.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize))]
pub struct Sample {
    pub u: f64,
    pub v: f64,
    /// Value of the tested quantity (signed so that violations are positive).
    pub value: f64,
}

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize))]
pub struct HypothesisCheck {
    pub id: &'static str,
    pub statement: &'static str,
    pub passed: bool,
    pub samples: usize,
    pub violations: usize,
    /// Worst sample (largest violation, or the closest call if none).
    pub worst: Option<Sample>,
    /// Sub-rectangle of `[0,K]²` containing the violations, as
    /// `[u_min, u_max, v_min, v_max]`.
    pub violation_region: Option<[f64; 4]>,
}

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize))]
pub struct ValidationReport {
    pub model: String,
    pub k: f64,
    pub grid_n: usize,
    pub checks: Vec<HypothesisCheck>,
    /// Empirical `M` in `∂1f(0,0)u + ∂2f(0,0)v − f(u,v) ≤ M (u+v)^{1+σ}`.
    pub sublinear_m: f64,
    pub sublinear_sigma: f64,
}

impl ValidationReport {
    pub fn all_passed(&self) -> bool {
        self.checks.iter().all(|c| c.passed)
    }

    pub fn check(&self, id: &str) -> Option<&HypothesisCheck> {
        self.checks.iter().find(|c| c.id == id)
    }

    pub fn failures(&self) -> impl Iterator<Item = &HypothesisCheck> {
        self.checks.iter().filter(|c| !c.passed)
    }
}

struct Tally {
    samples: usize,
    violations: usize,
    worst: Option<Sample>,
    region: Option<[f64; 4]>,
}

impl Tally {
    fn new() -> Self {
        Tally { samples: 0, violations: 0, worst: None, region: None }
    }

    /// Records `excess`, which must be `<= 0` for the sample to pass.
    fn record(&mut self, u: f64, v: f64, excess: f64) {
        self.samples += 1;
        if self.worst.map_or(true, |w| excess > w.value) {
            self.worst = Some(Sample { u, v, value: excess });
        }
        if excess > 0.0 || excess.is_nan() {
            self.violations += 1;
            self.region = Some(match self.region {
                None => [u, u, v, v],
                Some([a, b, c, d]) => [a.min(u), b.max(u), c.min(v), d.max(v)],
            });
        }
    }

    fn finish(self, id: &'static str, statement: &'static str) -> HypothesisCheck {
        HypothesisCheck {
            id,
            statement,
            passed: self.violations == 0,
            samples: self.samples,
            violations: self.violations,
            worst: self.worst,
            violation_region: self.region,
        }
    }
}

/// Spot-checks the monostability hypotheses on an `n × n` grid of `[0,K]²`
/// (`n` is raised to at least 8).
///
/// Failures are reported, never returned as errors.
pub fn validate_hypotheses(model: &Model, grid_n: usize) -> ValidationReport {
    let n = grid_n.max(8);
    let k = model.k();
    let scale = 1.0 + model.lipschitz_bound(n);
    let eps = 1e-12 * scale;
    let grid = |i: usize| k * i as f64 / (n - 1) as f64;

    let mut checks = Vec::new();

    let mut t = Tally::new();
    t.record(0.0, 0.0, model.f(0.0, 0.0).abs() - 1e-12);
    t.record(k, k, model.f(k, k).abs() - 1e-12);
    checks.push(t.finish("F1.equilibria", "f(0,0) = f(K,K) = 0"));

    let mut t = Tally::new();
    for i in 1..n - 1 {
        let u = grid(i);
        t.record(u, u, -model.f(u, u));
    }
    checks.push(t.finish("F1.diagonal", "f(u,u) > 0 for u in (0,K)"));

    let (d1_0, d2_0) = (model.d1f(0.0, 0.0), model.d2f(0.0, 0.0));
    let mut monotone = Tally::new();
    let mut lower = Tally::new();
    let mut concave = Tally::new();
    let mut m_const: f64 = 0.0;
    for i in 0..n {
        for j in 0..n {
            let (u, v) = (grid(i), grid(j));
            monotone.record(u, v, -model.d2f(u, v) - eps);
            let gap = d1_0 * u + d2_0 * v - model.f(u, v);
            lower.record(u, v, -gap - eps);
            if u + v > 0.0 {
                m_const = m_const.max(gap / ((u + v) * (u + v)));
            }
            let worst_second = model
                .d11f(u, v)
                .max(model.d12f(u, v))
                .max(model.d21f(u, v))
                .max(model.d22f(u, v));
            concave.record(u, v, worst_second - eps);
        }
    }
    checks.push(monotone.finish("F1.monotone_v", "d2f(u,v) >= 0 on [0,K]^2"));
    checks.push(lower.finish("F2.sublinear", "d1f(0,0)u + d2f(0,0)v - f(u,v) >= 0 on [0,K]^2"));

    let mut t = Tally::new();
    t.record(k, k, model.d1f(k, k) + model.d2f(k, k));
    checks.push(t.finish("F2.stable_k", "d1f(K,K) + d2f(K,K) < 0"));
    let mut t = Tally::new();
    t.record(0.0, 0.0, -(d1_0 + d2_0));
    checks.push(t.finish("F2.unstable_0", "d1f(0,0) + d2f(0,0) > 0"));

    let mut t = Tally::new();
    t.record(0.0, 0.0, d1_0);
    checks.push(t.finish("F3.d1f_origin", "d1f(0,0) <= 0"));
    checks.push(concave.finish("F3.concave", "all second partials <= 0 on [0,K]^2"));

    checks.push(derivative_check(model, n));

    ValidationReport {
        model: model.name().to_string(),
        k,
        grid_n: n,
        checks,
        sublinear_m: m_const,
        sublinear_sigma: 1.0,
    }
}

/// Compares analytic partials against central differences on the interior
/// of the sample grid: `|∂f − FD| ≤ 1e-6 (1 + |∂f|)`.
fn derivative_check(model: &Model, n: usize) -> HypothesisCheck {
    let mut t = Tally::new();
    let k = model.k();
    for i in 0..n {
        for j in 0..n {
            let u = k * (i as f64 + 0.5) / n as f64;
            let v = k * (j as f64 + 0.5) / n as f64;
            for excess in partial_derivative_errors(model, u, v) {
                t.record(u, v, excess);
            }
        }
    }
    t.finish("derivatives", "analytic partials match central differences to 1e-6 relative")
}

/// `|analytic − FD| − 1e-6 (1 + |analytic|)` for all six partials at `(u,v)`.
pub fn partial_derivative_errors(model: &Model, u: f64, v: f64) -> [f64; 6] {
    let h = 1e-6 * (1.0 + model.k());
    let fd = |g: &dyn Fn(f64, f64) -> f64, du: f64, dv: f64| {
        (g(u + du, v + dv) - g(u - du, v - dv)) / (2.0 * h)
    };
    let f = |a, b| model.f(a, b);
    let d1 = |a, b| model.d1f(a, b);
    let d2 = |a, b| model.d2f(a, b);
    let pairs = [
        (model.d1f(u, v), fd(&f, h, 0.0)),
        (model.d2f(u, v), fd(&f, 0.0, h)),
        (model.d11f(u, v), fd(&d1, h, 0.0)),
        (model.d12f(u, v), fd(&d1, 0.0, h)),
        (model.d21f(u, v), fd(&d2, h, 0.0)),
        (model.d22f(u, v), fd(&d2, 0.0, h)),
    ];
    pairs.map(|(exact, approx)| (exact - approx).abs() - 1e-6 * (1.0 + exact.abs()))
}

impl fmt::Display for ValidationReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "model {} (K = {}), {}x{} grid", self.model, self.k, self.grid_n, self.grid_n)?;
        for c in &self.checks {
            let status = if c.passed { "pass" } else { "FAIL" };
            let worst = c
                .worst
                .map(|w| format!(" worst at (u,v)=({:.4},{:.4}): {:.3e}", w.u, w.v, w.value))
                .unwrap_or_default();
            writeln!(f, "  [{status}] {:<14} {}{}", c.id, c.statement, worst)?;
        }
        write!(f, "  sublinear constant M = {:.4} (sigma = 1)", self.sublinear_m)
    }
}
