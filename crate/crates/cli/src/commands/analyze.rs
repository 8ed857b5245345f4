use std::fmt::Write as _;

use ldfront_core::models::validate_hypotheses;
use ldfront_core::{Dispersion, Tolerances};

use crate::config::resolve_speeds;
use crate::error::CliError;
use crate::output::{num, opt, Table};
use crate::Context;

pub fn run(ctx: &mut Context) -> Result<String, CliError> {
    let problem = ctx.cfg.problem()?;
    let validation = validate_hypotheses(problem.model(), 16);
    ctx.out.json("hypotheses.json", &validation)?;
    let disp = ctx.timed("minimal speed", |_| Ok(Dispersion::analyze(&problem)?))?;
    let a = ctx.config().analyze.clone();
    let speeds = resolve_speeds(
        "analyze",
        a.c,
        a.c_list.as_deref(),
        a.c_offsets.as_deref(),
        disp.c_star(),
        &[0.0, 0.1, 0.5, 1.0],
    )?;
    let report = ctx.timed("speed table", |_| Ok(disp.report(&speeds)?))?;
    ctx.out.json("dispersion_report.json", &report)?;

    let mut rows = Table::new(
        "characteristic roots and decay rates per speed",
        &[
            ("c", "wave speed"),
            ("lambda1", "smaller positive root of the characteristic function at 0 (left tail rate)"),
            ("lambda2", "larger positive root of the characteristic function at 0"),
            ("upsilon", "positive root of the characteristic function at K (right tail rate)"),
            ("mu", "predicted exponential decay rate of perturbations; empty at c*"),
            ("lambda_w", "weight exponent that attains mu"),
        ],
    );
    for r in &report.rows {
        rows.push(vec![
            num(r.c),
            num(r.lambda1),
            num(r.lambda2),
            num(r.upsilon),
            opt(r.decay.map(|d| d.mu)),
            opt(r.decay.map(|d| d.lambda)),
        ]);
    }
    ctx.out.csv("speeds.csv", &rows)?;

    let samples = a.lambda_samples.max(2);
    let lp = problem.lambda_plus();
    let cap = if lp.is_finite() { lp - Tolerances::DEFAULT.abscissa_margin } else { f64::INFINITY };
    let lambda_max = a.lambda_max.unwrap_or(3.0 * disp.lambda_star()).min(cap);
    if !(lambda_max > 0.0) {
        return Err(CliError::Config(format!("[analyze] lambda_max must be positive, got {lambda_max}")));
    }
    let mut table = Table::new(
        "characteristic function at the zero state",
        &[
            ("c", "wave speed"),
            ("lambda", "exponent of the trial tail e^{lambda xi}"),
            ("delta", "characteristic function; its zeros in lambda are the tail rates"),
        ],
    );
    ctx.timed("characteristic samples", |_| {
        for &c in std::iter::once(&disp.c_star()).chain(&speeds) {
            for j in 1..=samples {
                let lambda = lambda_max * j as f64 / samples as f64;
                table.push_nums(&[c, lambda, problem.delta(c, lambda)?]);
            }
        }
        Ok(())
    })?;
    ctx.out.csv("delta_samples.csv", &table)?;

    let mut s = String::new();
    let _ = writeln!(s, "model {} with kernel {}, d = {}, tau = {}", problem.model().name(), problem.kernel().type_name(), problem.d(), problem.tau());
    let _ = writeln!(s, "c* = {:.10}", report.c_star);
    let _ = writeln!(s, "lambda* = {:.10}", report.lambda_star);
    let _ = writeln!(s, "tangency residuals: {:.3e}, {:.3e}", report.residual_delta, report.residual_dlambda);
    for r in &report.rows {
        match r.decay {
            Some(d) => {
                let _ = writeln!(s, "c = {:.6}: lambda1 = {:.6}, lambda2 = {:.6}, mu = {:.6}", r.c, r.lambda1, r.lambda2, d.mu);
            }
            None => {
                let _ = writeln!(s, "c = {:.6}: critical speed, double root {:.6}", r.c, r.lambda1);
            }
        }
    }
    if !validation.all_passed() {
        let failed: Vec<&str> = validation.failures().map(|f| f.id).collect();
        let _ = writeln!(s, "sampled hypothesis checks failed: {}", failed.join(", "));
    }
    Ok(s)
}
