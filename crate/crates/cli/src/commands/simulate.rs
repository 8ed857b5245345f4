use std::fmt::Write as _;

use ldfront_core::fit::fit_line;
use ldfront_core::lattice::{integrate, Grid, Recorder, RunSettings};
use ldfront_core::Dispersion;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::config::InitialKind;
use crate::error::CliError;
use crate::output::{num, opt, Table};
use crate::Context;

/// Leftmost crossing of the level `K/2`, linearly interpolated.
fn front_position(grid: &Grid, u: &[f64], k: f64) -> Option<f64> {
    let level = 0.5 * k;
    let i = u.iter().position(|&v| v >= level)?;
    if i == 0 {
        return Some(grid.x(0));
    }
    let (a, b) = (u[i - 1], u[i]);
    Some(grid.x(i - 1) + (level - a) / (b - a) * grid.spacing())
}

pub fn run(ctx: &mut Context) -> Result<String, CliError> {
    let problem = ctx.cfg.problem()?;
    let cfg = ctx.config().clone();
    let (n, s) = (&cfg.numerics, &cfg.simulate);
    let grid = Grid::new(n.x_min, n.x_max, n.m)?;
    let dt = ctx.cfg.time_step(&problem)?;
    if !(s.snapshot_every > 0.0) {
        return Err(CliError::Config("[simulate] snapshot_every must be positive".into()));
    }
    let mut settings = RunSettings::new(dt, n.t_end).with_boundary(s.boundary.into());
    settings.tail_tol = cfg.kernel.tail_tol;
    let k = problem.k();
    let x_min = n.x_min;
    let cells: Vec<f64> = {
        let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
        let count = (n.x_max - n.x_min).ceil() as usize + 1;
        (0..count).map(|_| rng.gen_range(0.0..=k)).collect()
    };
    let initial = s.initial;
    let u0 = move |x: f64, _s: f64| match initial {
        InitialKind::Step => {
            if x > 0.0 {
                k
            } else {
                0.0
            }
        }
        InitialKind::Bump => k * (-x * x).exp(),
        InitialKind::Random => cells[((x - x_min).floor().max(0.0) as usize).min(cells.len() - 1)],
    };
    let every = ((s.snapshot_every / dt).round() as u64).max(1);
    let run = ctx.timed("integration", |_| Ok(integrate(&problem, grid, &settings, u0, Recorder::default().snapshots_every(every))?))?;

    let mut snaps = Table::new(
        "lattice solution snapshots",
        &[("t", "time"), ("x", "lattice position"), ("u", "solution value")],
    );
    snaps.note(format!("dt = {dt}, grid spacing = {}, boundary = {:?}", grid.spacing(), s.boundary).to_lowercase());
    let mut front = Table::new(
        "front position and range per snapshot",
        &[
            ("t", "time"),
            ("position", "leftmost crossing of the level K/2; empty if none"),
            ("min", "smallest value"),
            ("max", "largest value"),
        ],
    );
    let mut track = Vec::new();
    for snap in &run.snapshots {
        for (x, u) in grid.xs().zip(&snap.u) {
            snaps.push_nums(&[snap.t, x, *u]);
        }
        let pos = front_position(&grid, &snap.u, k);
        let lo = snap.u.iter().copied().fold(f64::INFINITY, f64::min);
        let hi = snap.u.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        front.push(vec![num(snap.t), opt(pos), num(lo), num(hi)]);
        if let Some(p) = pos {
            track.push((snap.t, p));
        }
    }
    ctx.out.csv("snapshots.csv", &snaps)?;
    ctx.out.csv("front.csv", &front)?;

    let mut out = String::new();
    let _ = writeln!(out, "integrated to t = {} in {} steps of {dt}", run.t_end, run.steps);
    let _ = writeln!(out, "range of u over the run: [{:.6e}, {:.6e}] (K = {k})", run.min_value, run.max_value);
    // the front invades the zero state leftward, so its speed is minus the slope
    let late: Vec<(f64, f64)> = track.iter().copied().filter(|(t, _)| *t >= 0.5 * run.t_end).collect();
    if let Some(fit) = fit_line(late.iter().copied()).filter(|_| late.len() >= 3) {
        let _ = write!(out, "front speed over the second half: {:.6}", -fit.slope);
        match Dispersion::analyze(&problem) {
            Ok(d) => {
                let _ = writeln!(out, " (c* = {:.6})", d.c_star());
            }
            Err(_) => out.push('\n'),
        }
    }
    Ok(out)
}
