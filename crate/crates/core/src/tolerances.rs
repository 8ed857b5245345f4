//! Numerical tolerances shared by the solvers and their tests.

/// Single source of truth for solver tolerances.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize))]
pub struct Tolerances {
    /// Target residual of scalar root solves.
    pub root_residual: f64,
    /// Target `|∂λΔ|` at the double root.
    pub tangency: f64,
    /// Step for central finite differences.
    pub fd_step: f64,
    /// Offset kept from a finite exponential-moment abscissa.
    pub abscissa_margin: f64,
    /// Margin required by the weight threshold inequality.
    pub weight_margin: f64,
}

impl Tolerances {
    pub const DEFAULT: Tolerances = Tolerances {
        root_residual: 1e-10,
        tangency: 1e-8,
        fd_step: 1e-6,
        abscissa_margin: 1e-6,
        weight_margin: 1e-6,
    };
}

impl Default for Tolerances {
    fn default() -> Self {
        Self::DEFAULT
    }
}
