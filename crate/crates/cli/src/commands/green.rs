use std::fmt::Write as _;

use ldfront_core::greenlab::{delayed_exp_series, heat_kernel_mass_and_bound, k2, DelayedExp, GreenProbe, HeatKernelReport};
use ldfront_core::Dispersion;
use serde::Serialize;

use crate::error::CliError;
use crate::output::Table;
use crate::Context;

#[derive(Serialize)]
struct GreenReport {
    probe: GreenProbe,
    /// Modulus of the delayed coefficient at frequency 0; absent when
    /// `lambda_star` was given without analyzing the problem.
    k2: Option<f64>,
    heat_kernel: Vec<HeatKernelReport>,
    all_within_bound: bool,
    delayed_exp_tau: f64,
}

pub fn run(ctx: &mut Context) -> Result<String, CliError> {
    let problem = ctx.cfg.problem()?;
    let g = ctx.config().green.clone();
    let (lambda_star, k2v) = match g.lambda_star {
        Some(l) => (l, None),
        None => {
            let d = ctx.timed("minimal speed", |_| Ok(Dispersion::analyze(&problem)?))?;
            (d.lambda_star(), Some(k2(&problem, d.c_star(), d.lambda_star())?))
        }
    };
    let probe = GreenProbe::new(problem.d(), g.eps, lambda_star)?;
    let reports = ctx.timed("heat kernel", |_| {
        g.times.iter().map(|&t| Ok(heat_kernel_mass_and_bound(&probe, t)?)).collect::<Result<Vec<_>, CliError>>()
    })?;
    let mut heat = Table::new(
        "lattice heat kernel started from a unit mass at the origin",
        &[
            ("t", "time"),
            ("mass", "sum over the lattice of the kernel (conserved, equal to 1)"),
            ("peak", "integral of |exp(t q)| over the frequency circle / 2pi, an upper bound on every value"),
            ("bound", "sqrt(pi / (d t eps)), the algebraic decay bound"),
            ("v0", "value at the origin"),
            ("max_vn", "largest value over the lattice"),
        ],
    );
    heat.note(format!("d = {}, eps = {}, lambda* = {lambda_star}", problem.d(), g.eps));
    for r in &reports {
        heat.push_nums(&[r.t, r.mass, r.peak, r.bound, r.v0, r.max_vn]);
    }
    ctx.out.csv("heat_kernel.csv", &heat)?;

    let tau = g.table_tau.unwrap_or(if problem.tau() > 0.0 { problem.tau() } else { 1.0 });
    if g.table_samples < 2 || !(g.table_t_max > -tau) {
        return Err(CliError::Config("[green] needs table_samples >= 2 and table_t_max > -tau".into()));
    }
    let mut table = Table::new(
        "delayed exponential E_b, the solution of y'(t) = b y(t - tau) with y = 1 on [-tau, 0]",
        &[
            ("b", "rate"),
            ("t", "time"),
            ("value", "E_b(t) from the method-of-steps recurrence"),
            ("series", "E_b(t) from the closed-form finite sum"),
        ],
    );
    table.note(format!("tau = {tau}"));
    ctx.timed("delayed exponentials", |_| {
        for &b in &g.rates {
            let e = DelayedExp::new(b, tau, g.table_t_max)?;
            for j in 0..g.table_samples {
                let t = -tau + (g.table_t_max + tau) * j as f64 / (g.table_samples - 1) as f64;
                table.push_nums(&[b, t, e.eval(t), delayed_exp_series(b, tau, t)?]);
            }
        }
        Ok(())
    })?;
    ctx.out.csv("delayed_exp.csv", &table)?;

    let all_within_bound = reports.iter().all(HeatKernelReport::within_bound);
    let report = GreenReport { probe, k2: k2v, heat_kernel: reports, all_within_bound, delayed_exp_tau: tau };
    ctx.out.json("green_report.json", &report)?;

    let mut s = String::new();
    let _ = writeln!(s, "heat kernel with d = {}, eps = {}, lambda* = {lambda_star:.6}", problem.d(), g.eps);
    for r in &report.heat_kernel {
        let _ = writeln!(s, "t = {}: mass {:.12}, peak {:.6e} <= bound {:.6e}: {}", r.t, r.mass, r.peak, r.bound, r.within_bound());
    }
    if let Some(k) = k2v {
        let _ = writeln!(s, "k2 = {k:.6}");
    }
    let _ = writeln!(s, "delayed exponential table for {} rates with tau = {tau}", g.rates.len());
    Ok(s)
}
