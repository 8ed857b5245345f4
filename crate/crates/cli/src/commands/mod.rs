//! One module per subcommand. Each returns the human-readable summary.

pub mod analyze;
pub mod green;
pub mod profile;
pub mod simulate;
pub mod stability;

use ldfront_core::wavefront::RelaxSettings;
use ldfront_core::Dispersion;

use crate::error::CliError;
use crate::LoadedConfig;

/// Rejects speeds below `c*`, where no front exists.
pub fn require_front_speed(disp: &Dispersion, c: f64) -> Result<(), CliError> {
    if c < disp.c_star() && !disp.is_critical(c) {
        return Err(CliError::Validation(format!(
            "c = {c} is below the minimal wave speed c* = {} (τ = {}): no traveling front exists below c*",
            disp.c_star(),
            disp.problem().tau()
        )));
    }
    Ok(())
}

pub fn relax_settings(cfg: &LoadedConfig) -> RelaxSettings {
    let c = &cfg.config;
    RelaxSettings {
        m: c.numerics.m,
        xi_min: c.profile.xi_min,
        xi_max: c.profile.xi_max,
        dt: None,
        t_relax: c.profile.t_relax,
        tol: c.profile.tol,
        polish: c.profile.polish,
        tail_tol: c.kernel.tail_tol,
        initial_shift: 0.0,
    }
}
