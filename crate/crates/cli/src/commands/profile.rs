use std::fmt::Write as _;

use ldfront_core::wavefront::{profile_residual, relax_profile, tail_slopes, LeftTail, ProfileDiagnostics, ResidualNorms, TailSlopes};
use ldfront_core::Dispersion;
use serde::Serialize;

use super::{relax_settings, require_front_speed};
use crate::config::resolve_speeds;
use crate::error::CliError;
use crate::output::Table;
use crate::Context;

#[derive(Serialize)]
struct ProfileReport {
    c: f64,
    c_star: f64,
    k: f64,
    m: usize,
    xi_min: f64,
    xi_max: f64,
    half_level: Option<f64>,
    left_tail: LeftTail,
    right_rate: f64,
    diagnostics: ProfileDiagnostics,
    residual: ResidualNorms,
    tail_slopes: Option<TailSlopes>,
    tail_slopes_error: Option<String>,
}

pub fn run(ctx: &mut Context) -> Result<String, CliError> {
    let problem = ctx.cfg.problem()?;
    let disp = ctx.timed("minimal speed", |_| Ok(Dispersion::analyze(&problem)?))?;
    let p = &ctx.config().profile;
    let speeds = resolve_speeds("profile", p.c, p.c_list.as_deref(), p.c_offsets.as_deref(), disp.c_star(), &[0.5])?;
    let &[c] = speeds.as_slice() else {
        return Err(CliError::Config("[profile] takes a single speed".into()));
    };
    require_front_speed(&disp, c)?;
    let settings = relax_settings(&ctx.cfg);
    let profile = ctx.timed("relaxation", |_| Ok(relax_profile(&disp, c, &settings)?))?;
    let residual = profile_residual(&problem, &profile)?;
    let (slopes, slopes_error) = match tail_slopes(&profile, &disp) {
        Ok(t) => (Some(t), None),
        Err(e) => (None, Some(e.to_string())),
    };

    let mut table = Table::new(
        "traveling-wave profile u(x,t) = phi(x + c t)",
        &[("xi", "moving coordinate x + c t"), ("phi", "profile value"), ("dphi", "derivative of the profile")],
    );
    table.note(format!("c = {c}, K = {}", profile.k));
    for i in 0..profile.len() {
        table.push_nums(&[profile.xi(i), profile.phi[i], profile.derivative(i)]);
    }
    ctx.out.csv("profile.csv", &table)?;
    let report = ProfileReport {
        c,
        c_star: disp.c_star(),
        k: profile.k,
        m: profile.m,
        xi_min: profile.xi_min,
        xi_max: profile.xi_max(),
        half_level: profile.half_level(),
        left_tail: profile.left_tail,
        right_rate: profile.right_rate,
        diagnostics: profile.diagnostics,
        residual,
        tail_slopes: slopes,
        tail_slopes_error: slopes_error,
    };
    ctx.out.json("profile_diagnostics.json", &report)?;

    let mut s = String::new();
    let _ = writeln!(s, "profile at c = {c:.6} (c* = {:.6}) on [{}, {}] with {} nodes", disp.c_star(), report.xi_min, report.xi_max, profile.len());
    let _ = writeln!(s, "residual sup = {:.3e} (K = {})", residual.sup, profile.k);
    match (&report.tail_slopes, &report.tail_slopes_error) {
        (Some(t), _) => {
            let _ = writeln!(s, "left tail slope {:.6} (predicted {:.6})", t.left_slope, t.lambda_pred);
            let _ = writeln!(s, "right tail slope {:.6} (predicted {:.6})", t.right_slope, t.upsilon_pred);
        }
        (None, Some(e)) => {
            let _ = writeln!(s, "tail slopes unavailable: {e}");
        }
        _ => {}
    }
    Ok(s)
}
