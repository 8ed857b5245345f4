//! Closed-form sanity checks compiled into the binary.

use ldfront_core::dispersion::{solve_rate_equation, RateEquation};
use ldfront_core::greenlab::{heat_kernel_mass_and_bound, solve_linear_dde, DelayedLinearSystem, GreenProbe, History};
use ldfront_core::lattice::{check_comparison, dt_max, Boundary, Grid, RunSettings, Simulation};
use ldfront_core::stability::{build_front_coefficients, make_perturbation, PerturbationShape, WeightSpec};
use ldfront_core::wavefront::{profile_residual, relax_profile, LeftTail, RelaxSettings, WaveError, WaveProfile};
use ldfront_core::{Dispersion, Kernel, Model, Problem};

use crate::error::CliError;

type Check = (&'static str, fn() -> Result<(), String>);

fn ensure(ok: bool, detail: impl FnOnce() -> String) -> Result<(), String> {
    if ok {
        Ok(())
    } else {
        Err(detail())
    }
}

fn err(e: impl ToString) -> String {
    e.to_string()
}

fn host(a: f64, b: f64, tau: f64) -> Result<Problem, String> {
    let m = Model::make_builtin("host_vector", &[("a", a), ("b", b)]).map_err(err)?;
    Problem::new(m, Kernel::dirac(), 1.0, tau).map_err(err)
}

/// `K/(1 + e^{−ξ})` sampled at `c = 1`, spacing 0.1, for fisher_kpp.
fn logistic_profile() -> WaveProfile {
    let (m, xi_min) = (10, -30.0);
    let phi = (0..=600).map(|i| 1.0 / (1.0 + (-(xi_min + i as f64 / m as f64)).exp())).collect();
    WaveProfile::from_samples(1.0, 1.0, m, xi_min, phi, LeftTail::Exponential { rate: 1.0 }, 1.0)
}

const CHECKS: &[Check] = &[
    ("point-mass kernel has G = 1", || {
        let g = Kernel::dirac().eval_g(3.7).map_err(err)?;
        ensure(g == 1.0, || format!("G(3.7) = {g}"))
    }),
    ("point-mass kernel has G' = G'' = 0", || {
        let d = Kernel::dirac().eval_g_derivs(1.3).map_err(err)?;
        ensure(d == (0.0, 0.0), || format!("{d:?}"))
    }),
    ("point-mass kernel discretizes to a single unit weight", || {
        let w = Kernel::dirac().discretize(0.1, 1e-12).map_err(err)?;
        ensure(w.radius() == 0 && w.weight(0) == 1.0, || format!("radius {}", w.radius()))
    }),
    ("lattice sum {0: 1} is the unit weight at node 0", || {
        let w = Kernel::lattice_sum(&[(0, 1.0)]).and_then(|k| k.discretize(0.5, 1e-12)).map_err(err)?;
        ensure(w.is_identity() && w.weight(0) == 1.0, || format!("{:?}", w.weights()))
    }),
    ("host_vector with a = 0 is v(1 - u) with K = 1", || {
        let m = Model::make_builtin("host_vector", &[("a", 0.0), ("b", 1.0)]).map_err(err)?;
        let worst = [(0.2, 0.7), (0.9, 0.1), (0.5, 0.5)].iter().map(|&(u, v)| (m.f(u, v) - v * (1.0 - u)).abs()).fold(0.0, f64::max);
        ensure(m.k() == 1.0 && worst < 1e-15, || format!("K = {}, gap {worst}", m.k()))
    }),
    ("characteristic function at lambda = 0 is -0.5", || {
        let p = host(0.5, 1.0, 1.0)?;
        let v = [p.delta(0.7, 0.0), p.delta(3.0, 0.0)];
        ensure(v.iter().all(|x| x.as_ref().is_ok_and(|x| (x + 0.5).abs() < 1e-15)), || format!("{v:?}"))
    }),
    ("characteristic function at K and lambda = 0 is -0.5", || {
        let v = host(0.5, 1.0, 1.0)?.delta_tilde(1.0, 0.0).map_err(err)?;
        ensure((v + 0.5).abs() < 1e-15, || format!("{v}"))
    }),
    ("the N constraint is negative at 0", || {
        let v = host(0.5, 1.0, 1.0)?.eval_n(0.0);
        ensure((v + 0.5).abs() < 1e-15, || format!("N(0) = {v}"))
    }),
    ("double root at the minimal speed", || {
        let d = Dispersion::analyze(&host(0.5, 1.0, 1.0)?).map_err(err)?;
        let (l1, l2) = d.lambda_roots(d.c_star()).map_err(err)?;
        ensure(l1 == d.lambda_star() && l2 == d.lambda_star(), || format!("({l1}, {l2}) vs {}", d.lambda_star()))
    }),
    ("host_vector rate with a = 0 is b/3", || {
        let mu = solve_rate_equation(RateEquation::HostVector { a: 0.0, b: 1.0 }, 2.0).map_err(err)?;
        ensure((mu - 1.0 / 3.0).abs() < 1e-10, || format!("{mu}"))
    }),
    ("age_structured rate with p = 1, gamma = 0, tau = 0 is 1/3", || {
        let mu = solve_rate_equation(RateEquation::AgeStructured { p: 1.0, gamma: 0.0 }, 0.0).map_err(err)?;
        ensure((mu - 1.0 / 3.0).abs() < 1e-10, || format!("{mu}"))
    }),
    ("zero state stays exactly zero", || {
        let p = host(0.5, 1.0, 1.0)?;
        let dt = dt_max(&p);
        let mut sim = Simulation::new(&p, Grid::new(-5.0, 5.0, 4).map_err(err)?, &RunSettings::new(dt, 1.0).with_boundary(Boundary::Hold), |_, _| 0.0).map_err(err)?;
        for _ in 0..40 {
            sim.step().map_err(err)?;
        }
        ensure(sim.state().iter().all(|&v| v == 0.0), || "nonzero value".into())
    }),
    ("state K stays K", || {
        let p = host(0.5, 1.0, 1.0)?;
        let (k, dt) = (p.k(), dt_max(&p));
        let mut sim = Simulation::new(&p, Grid::new(-5.0, 5.0, 4).map_err(err)?, &RunSettings::new(dt, 1.0).with_boundary(Boundary::Hold), |_, _| k).map_err(err)?;
        for step in 1..=40 {
            sim.step().map_err(err)?;
            let gap = sim.state().iter().map(|v| (v - k).abs()).fold(0.0, f64::max);
            ensure(gap <= 1e-12 * step as f64, || format!("gap {gap} after {step} steps"))?;
        }
        Ok(())
    }),
    ("zero and K bound every solution", || {
        let p = host(0.5, 1.0, 1.0)?;
        let k = p.k();
        let grid = Grid::new(-10.0, 10.0, 4).map_err(err)?;
        let s = RunSettings::new(dt_max(&p), 5.0);
        let mid = |x: f64, t: f64| 0.5 * k * (1.0 + (x + t).tanh()).min(1.0);
        let lo = check_comparison(&p, grid, &s, |_, _| 0.0, mid).map_err(err)?;
        let hi = check_comparison(&p, grid, &s, mid, |_, _| k).map_err(err)?;
        ensure(lo <= 1e-12 && hi <= 1e-12, || format!("violations {lo}, {hi}"))
    }),
    ("linear delay equation without delay term is e^{-c1 t}", || {
        let sys = DelayedLinearSystem::new(0.8, 0.0, 1.0, History::Constant(1.0)).map_err(err)?;
        let z = solve_linear_dde(&sys, 2.5).map_err(err)?;
        ensure((z - (-0.8f64 * 2.5).exp()).abs() < 1e-12, || format!("{z}"))
    }),
    ("lattice heat kernel conserves mass", || {
        let probe = GreenProbe::new(1.0, 0.5, 0.7).map_err(err)?;
        for t in [0.1, 1.0, 10.0] {
            let r = heat_kernel_mass_and_bound(&probe, t).map_err(err)?;
            ensure((r.mass - 1.0).abs() < 1e-12, || format!("mass {} at t = {t}", r.mass))?;
        }
        Ok(())
    }),
    ("point-mass kernel makes B the shifted G2", || {
        // c·tau = 1 is ten grid spacings
        let m = Model::make_builtin("fisher_kpp", &[]).map_err(err)?;
        let p = Problem::new(m, Kernel::dirac(), 1.0, 1.0).map_err(err)?;
        let co = build_front_coefficients(&p, &logistic_profile()).map_err(err)?;
        let worst = (0..co.len() - 10).map(|i| (co.b[i] - co.g2[i + 10]).abs()).fold(0.0, f64::max);
        ensure(worst < 1e-12, || format!("gap {worst}"))
    }),
    ("weight is 1 at x0 and continuous there", || {
        let w = WeightSpec { lambda: 0.4, x0: 2.0, mu: 0.1 };
        ensure(w.eval(2.0) == 1.0 && (w.eval(2.0 - 1e-9) - 1.0).abs() < 1e-9, || format!("{}", w.eval(2.0 - 1e-9)))
    }),
    ("zero perturbation is the translating front", || {
        let prof = logistic_profile();
        let w = WeightSpec { lambda: 0.4, x0: 2.0, mu: 0.1 };
        let pert = make_perturbation(&prof, PerturbationShape::Bump { amplitude: 0.0, center: 0.0, width: 1.0 }, &w).map_err(err)?;
        let worst = [(-3.0, -0.5), (0.3, -0.2), (4.0, 0.0)]
            .iter()
            .map(|&(x, s)| (pert.initial(&prof, x, s) - prof.eval(x + prof.c * s)).abs())
            .fold(0.0, f64::max);
        ensure(worst == 0.0, || format!("gap {worst}"))
    }),
    ("constant K has zero profile residual", || {
        let m = Model::make_builtin("fisher_kpp", &[]).map_err(err)?;
        let p = Problem::new(m, Kernel::dirac(), 1.0, 0.5).map_err(err)?;
        let flat = WaveProfile::from_samples(2.0, 1.0, 10, -10.0, vec![1.0; 201], LeftTail::Exponential { rate: 1.0 }, 1.0);
        let r = profile_residual(&p, &flat).map_err(err)?;
        ensure(r.sup <= 1e-12, || format!("residual {}", r.sup))
    }),
    ("no front below the minimal speed", || {
        let d = Dispersion::analyze(&host(0.5, 1.0, 0.0)?).map_err(err)?;
        let r = relax_profile(&d, d.c_star() - 0.1, &RelaxSettings::default());
        ensure(matches!(r, Err(WaveError::BelowMinimalSpeed { .. })), || format!("{r:?}"))
    }),
];

/// Prints one line per check; fails with a numerical error if any check does.
pub fn run(verbose: bool) -> Result<(), CliError> {
    let mut failed = Vec::new();
    for (name, check) in CHECKS {
        match check() {
            Ok(()) => println!("PASS {name}"),
            Err(detail) => {
                println!("FAIL {name}: {detail}");
                failed.push(*name);
            }
        }
    }
    if verbose {
        eprintln!("[ldfront] {} checks, {} failed", CHECKS.len(), failed.len());
    }
    if failed.is_empty() {
        println!("selfcheck: all {} checks passed", CHECKS.len());
        Ok(())
    } else {
        Err(CliError::Numerical(format!("selfcheck: {} of {} checks failed", failed.len(), CHECKS.len())))
    }
}
