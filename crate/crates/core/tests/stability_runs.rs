mod common;

use common::*;
use ldfront_core::stability::{
    build_front_coefficients, build_weight, energy_diagnostics, make_perturbation, run_stability_experiment,
    weight_exponent, ExperimentSettings, PerturbationShape, StabilityError, StabilityRun,
};
use ldfront_core::wavefront::{relax_profile, RelaxSettings, WaveProfile};
use ldfront_core::Dispersion;

fn setup(tau: f64, dc: f64) -> (Dispersion, WaveProfile) {
    let d = analyzed(&host_vector(tau));
    let p = relax_profile(&d, d.c_star() + dc, &RelaxSettings::default()).unwrap();
    (d, p)
}

fn run(d: &Dispersion, p: &WaveProfile, shape: PerturbationShape, s: ExperimentSettings) -> Result<StabilityRun, StabilityError> {
    let co = build_front_coefficients(d.problem(), p)?;
    let (lambda, mu) = weight_exponent(d, p.c)?;
    let w = build_weight(d.problem(), &co, lambda, mu)?;
    let pert = make_perturbation(p, shape, &w)?;
    run_stability_experiment(d, p, &pert, &w, &s)
}

#[test]
fn zero_perturbation_stays_at_the_floor() {
    let (d, p) = setup(1.0, 0.5);
    let s = ExperimentSettings { t_end: 30.0, fit_window: (10.0, 30.0), ..Default::default() };
    let r = run(&d, &p, PerturbationShape::Bump { amplitude: 0.0, center: 0.0, width: 1.0 }, s).unwrap();
    assert!(r.series.iter().all(|s| s.sup == 0.0));
    let gap = r.profile_gap.iter().fold(0.0f64, |m, g| m.max(g.1));
    assert!(gap <= 5e-4 * p.k, "{gap}");
}

#[test]
fn energy_diagnostics_have_teeth() {
    let (d, p) = setup(1.0, 0.5);
    let s = ExperimentSettings { t_end: 60.0, ..Default::default() };
    let r = run(&d, &p, PerturbationShape::Bump { amplitude: 0.1 * p.k, center: 0.0, width: 1.0 }, s).unwrap();
    let mu = r.mu_pred.unwrap();
    let ok = energy_diagnostics(&r.series, mu).unwrap();
    assert!(ok.l1w_bounded && ok.l2w_converges, "{ok:?}");
    assert!(energy_diagnostics(&r.series, 0.0).unwrap().l1w_bounded);
    // the observed rate is about 3μ, so 3× and more must break the bound
    let bad = energy_diagnostics(&r.series, 3.0 * r.fit.unwrap().rate).unwrap();
    assert!(!bad.l1w_bounded, "{bad:?}");
    for s in &r.series {
        assert!(s.l2 <= s.l2w);
    }
}

#[test]
fn shifted_front_converges_to_a_translate() {
    let (d, p) = setup(1.0, 0.5);
    let s = ExperimentSettings { t_end: 40.0, fit_window: (10.0, 40.0), orbital: true, ..Default::default() };
    let r = run(&d, &p, PerturbationShape::Shift { delta: 0.5 }, s).unwrap();
    let last = r.series.last().unwrap();
    assert!(last.sup < 1e-6 * p.k, "{}", last.sup);
    // the history is shifted only at s = 0, so the limit phase is near δ
    let shift = *r.translates.last().unwrap();
    assert!((shift - 0.5).abs() < 0.1, "{shift}");
}

#[test]
fn slow_left_tail_is_rejected() {
    let (d, p) = setup(0.0, 0.5);
    let e = run(&d, &p, PerturbationShape::LeftDecaying { amplitude: 0.01, rate: 0.05, center: -5.0 }, ExperimentSettings::default());
    assert!(matches!(e, Err(StabilityError::NotWeighted { .. })));
    let fast = PerturbationShape::LeftDecaying { amplitude: 0.02, rate: 1.5, center: -5.0 };
    let r = run(&d, &p, fast, ExperimentSettings { t_end: 40.0, fit_window: (10.0, 40.0), ..Default::default() }).unwrap();
    assert!(r.fit.unwrap().rate > 0.0);
}

#[test]
fn short_grid_margin_is_reported() {
    let (d, p) = setup(1.0, 0.5);
    let s = ExperimentSettings { t_end: 20.0, fit_window: (10.0, 20.0), margin: 1e4, ..Default::default() };
    let e = run(&d, &p, PerturbationShape::Bump { amplitude: 0.1 * p.k, center: 0.0, width: 1.0 }, s);
    assert!(matches!(e, Err(StabilityError::BoundaryContamination { .. })));
}
