use std::fmt::Write as _;
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Mutex;

use ldfront_core::stability::{
    build_front_coefficients, build_weight, energy_diagnostics, make_perturbation, run_stability_experiment,
    weight_exponent, DecayFit, EnergyDiagnostics, ExperimentSettings, FitKind, Perturbation, PerturbationShape,
    WeightSpec,
};
use ldfront_core::wavefront::relax_profile;
use ldfront_core::Dispersion;
use serde::Serialize;

use super::{relax_settings, require_front_speed};
use crate::config::{resolve_speeds, ShapeKind};
use crate::error::CliError;
use crate::output::{num, opt, OutputDir, Table};
use crate::{Context, LoadedConfig};

struct Job {
    name: String,
    tau_index: usize,
    c: f64,
}

#[derive(Debug, Clone, Serialize)]
struct JobReport {
    c: f64,
    tau: f64,
    c_star: f64,
    critical: bool,
    dt: f64,
    profile_residual_sup: f64,
    weight: WeightSpec,
    perturbation: Perturbation,
    settings: ExperimentSettings,
    fit: Option<DecayFit>,
    mu_pred: Option<f64>,
    energy: Option<EnergyDiagnostics>,
    squeeze_violation: Option<f64>,
    contaminated_at: Option<f64>,
    min_value: f64,
    max_value: f64,
    final_sup: f64,
}

pub fn run(ctx: &mut Context) -> Result<String, CliError> {
    let cfg = ctx.config().clone();
    let st = &cfg.stability;
    let taus = st.taus.clone().unwrap_or_else(|| vec![cfg.problem.tau]);
    if taus.is_empty() {
        return Err(CliError::Config("[stability] taus is empty".into()));
    }
    // validate every job before any long run starts
    let disps = ctx.timed("minimal speeds", |ctx| {
        taus.iter().map(|&tau| Ok(Dispersion::analyze(&ctx.cfg.problem_with_tau(tau)?)?)).collect::<Result<Vec<_>, CliError>>()
    })?;
    let mut jobs = Vec::new();
    for (ti, disp) in disps.iter().enumerate() {
        let speeds =
            resolve_speeds("stability", st.c, st.c_list.as_deref(), st.c_offsets.as_deref(), disp.c_star(), &[0.5])?;
        for (ci, &c) in speeds.iter().enumerate() {
            require_front_speed(disp, c)?;
            jobs.push(Job { name: format!("run_t{ti:02}_c{ci:02}"), tau_index: ti, c });
        }
    }
    let fit_window = st.fit_window.unwrap_or([10.0, st.t_end]);
    if !(fit_window[0] < fit_window[1] && fit_window[1] <= st.t_end) {
        return Err(CliError::Config(format!("[stability] fit_window {fit_window:?} must be increasing and end by t_end")));
    }

    let results: Vec<Result<JobReport, CliError>> = ctx.timed("experiments", |ctx| {
        let next = AtomicUsize::new(0);
        let slots: Mutex<Vec<Option<Result<JobReport, CliError>>>> = Mutex::new((0..jobs.len()).map(|_| None).collect());
        let workers = ctx.jobs.min(jobs.len()).max(1);
        std::thread::scope(|scope| {
            for _ in 0..workers {
                scope.spawn(|| loop {
                    let i = next.fetch_add(1, Ordering::SeqCst);
                    let Some(job) = jobs.get(i) else { break };
                    ctx.log(format!("{}: c = {}, tau = {}", job.name, job.c, taus[job.tau_index]));
                    let r = ctx.out.child(&job.name).and_then(|dir| run_job(&ctx.cfg, &disps[job.tau_index], job, fit_window, &dir));
                    if let Err(e) = &r {
                        ctx.log(format!("{}: {e}", job.name));
                    }
                    slots.lock().expect("no panics while holding the lock")[i] = Some(r);
                });
            }
        });
        Ok(slots.into_inner().expect("workers joined").into_iter().map(|r| r.expect("every job ran")).collect())
    })?;

    let mut table = Table::new(
        "decay of perturbed fronts, one row per (c, tau)",
        &[
            ("run", "subdirectory holding the run"),
            ("c", "wave speed"),
            ("tau", "delay"),
            ("c_star", "minimal wave speed at this delay"),
            ("mu_pred", "predicted exponential decay rate (lower bound); empty at c*"),
            ("mu_hat", "fitted exponential decay rate of sup|u - phi|; empty for algebraic fits"),
            ("slope", "fitted slope of ln sup|u - phi| against t (exponential) or ln t (algebraic)"),
            ("r2", "coefficient of determination of the fit"),
            ("fit", "exponential or algebraic"),
            ("status", "ok, or the error that stopped the run"),
        ],
    );
    let mut summary = String::new();
    let mut first_error = None;
    for (job, r) in jobs.iter().zip(results) {
        let tau = taus[job.tau_index];
        let c_star = disps[job.tau_index].c_star();
        match r {
            Ok(rep) => {
                let (mu_hat, slope, r2, kind) = match rep.fit {
                    Some(f) if f.kind == FitKind::Exponential => (Some(f.rate), Some(-f.rate), Some(f.r2), "exponential"),
                    Some(f) => (None, Some(f.rate), Some(f.r2), "algebraic"),
                    None => (None, None, None, ""),
                };
                table.push(vec![
                    job.name.clone(),
                    num(job.c),
                    num(tau),
                    num(c_star),
                    opt(rep.mu_pred),
                    opt(mu_hat),
                    opt(slope),
                    opt(r2),
                    kind.into(),
                    "ok".into(),
                ]);
                let _ = write!(summary, "{}: c = {:.6}, tau = {tau}: ", job.name, job.c);
                match rep.fit {
                    Some(f) if f.kind == FitKind::Exponential => {
                        let _ = writeln!(
                            summary,
                            "fitted rate {:.6} vs predicted lower bound {:.6} (R^2 {:.5})",
                            f.rate,
                            rep.mu_pred.unwrap_or(0.0),
                            f.r2
                        );
                    }
                    Some(f) => {
                        let _ = writeln!(summary, "algebraic decay, log-log slope {:.4} (R^2 {:.4})", f.rate, f.r2);
                    }
                    None => {
                        let _ = writeln!(summary, "no fit");
                    }
                }
            }
            Err(e) => {
                let msg = e.to_string();
                table.push(vec![job.name.clone(), num(job.c), num(tau), num(c_star), String::new(), String::new(), String::new(), String::new(), String::new(), msg.clone()]);
                let _ = writeln!(summary, "{}: c = {:.6}, tau = {tau}: failed: {msg}", job.name, job.c);
                first_error.get_or_insert(e);
            }
        }
    }
    ctx.out.csv("summary.csv", &table)?;
    match first_error {
        Some(e) => {
            ctx.out.text("summary.txt", &summary)?;
            Err(e)
        }
        None => Ok(summary),
    }
}

fn shape(cfg: &LoadedConfig, k: f64) -> PerturbationShape {
    let p = &cfg.config.stability.perturbation;
    match p.shape {
        ShapeKind::Bump => PerturbationShape::Bump { amplitude: p.amplitude * k, center: p.center, width: p.width },
        ShapeKind::Shift => PerturbationShape::Shift { delta: p.delta },
        ShapeKind::LeftDecaying => PerturbationShape::LeftDecaying { amplitude: p.amplitude * k, rate: p.rate, center: p.center },
    }
}

fn run_job(cfg: &LoadedConfig, disp: &Dispersion, job: &Job, fit_window: [f64; 2], dir: &OutputDir) -> Result<JobReport, CliError> {
    let problem = disp.problem();
    let st = &cfg.config.stability;
    let dt = cfg.time_step(problem)?;
    let profile = relax_profile(disp, job.c, &relax_settings(cfg))?;
    let coeffs = build_front_coefficients(problem, &profile)?;
    let (lambda, mu) = weight_exponent(disp, profile.c)?;
    let weight = build_weight(problem, &coeffs, lambda, mu)?;
    let pert = make_perturbation(&profile, shape(cfg, profile.k), &weight)?;
    let settings = ExperimentSettings {
        t_end: st.t_end,
        dt: Some(dt),
        record_every: st.record_every,
        fit_window: (fit_window[0], fit_window[1]),
        fit_kind: None,
        squeeze: st.squeeze,
        orbital: st.orbital.unwrap_or(st.perturbation.shape == ShapeKind::Shift),
        margin: st.margin,
    };
    let run = run_stability_experiment(disp, &profile, &pert, &weight, &settings)?;

    let mut norms = Table::new(
        "norms of the perturbation v = u - phi(x + c t) in the co-moving window",
        &[
            ("t", "time"),
            ("sup", "sup|v|"),
            ("l1w", "weighted L1 norm of v"),
            ("l2w", "weighted L2 norm of v"),
            ("l2", "unweighted L2 norm of v"),
        ],
    );
    norms.note(format!("c = {}, tau = {}, weight exponent {} from x0 = {}", job.c, problem.tau(), weight.lambda, weight.x0));
    for s in &run.series {
        norms.push_nums(&[s.t, s.sup, s.l1w, s.l2w, s.l2]);
    }
    dir.csv("norms.csv", &norms)?;
    if settings.orbital {
        let mut tr = Table::new("best translate of the front", &[("t", "time"), ("shift", "phase of the closest translate")]);
        for (s, x) in run.series.iter().zip(&run.translates) {
            tr.push_nums(&[s.t, *x]);
        }
        dir.csv("translates.csv", &tr)?;
    }
    let energy = run.mu_pred.and_then(|m| energy_diagnostics(&run.series, m).ok());
    let report = JobReport {
        c: job.c,
        tau: problem.tau(),
        c_star: disp.c_star(),
        critical: disp.is_critical(job.c),
        dt,
        profile_residual_sup: profile.diagnostics.residual_sup,
        weight,
        perturbation: pert,
        settings,
        fit: run.fit,
        mu_pred: run.mu_pred,
        energy,
        squeeze_violation: run.squeeze_violation,
        contaminated_at: run.contaminated_at,
        min_value: run.min_value,
        max_value: run.max_value,
        final_sup: run.series.last().map_or(f64::NAN, |s| s.sup),
    };
    dir.json("fit.json", &report)?;
    Ok(report)
}
