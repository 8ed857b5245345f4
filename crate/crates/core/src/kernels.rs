//! Nonlocal kernels `h` and their exponential moment
//! `G(λ) = ∫ h(y) e^{−λy} dy`.

use alloc::vec;
use alloc::vec::Vec;
use num_complex::Complex64;
#[allow(unused_imports)]
use num_traits::Float;
use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum KernelError {
    #[error("kernel parameter `{name}` must be positive and finite (got {value})")]
    NonPositive { name: &'static str, value: f64 },
    #[error("kernel weights must be nonnegative (found {value} at y = {at})")]
    Negative { at: f64, value: f64 },
    #[error("kernel is not even: h({at}) and h({}) differ by {gap:e}", -at)]
    NotEven { at: f64, gap: f64 },
    #[error("kernel mass is {mass}, expected 1")]
    Mass { mass: f64 },
    #[error("tabulated kernel needs a uniform grid symmetric about 0 with at least 3 samples")]
    BadTable,
    #[error("|λ| = {lambda} is outside the exponential-moment abscissa λ0 = {lambda0}")]
    Abscissa { lambda: f64, lambda0: f64 },
    #[error("lattice offset {offset} does not land on a node of spacing {spacing}")]
    Incommensurate { offset: i64, spacing: f64 },
    #[error("grid spacing must be positive and finite (got {0})")]
    Spacing(f64),
    #[error("tail tolerance must lie in (0, 1e-2] (got {0})")]
    TailTol(f64),
}

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize))]
#[cfg_attr(feature = "serde", serde(tag = "type", rename_all = "snake_case"))]
pub enum KernelShape {
    /// Point mass at 0, `h = δ`.
    Dirac,
    /// Point masses `J(j)` at integer offsets `j`.
    LatticeSum { offsets: Vec<i64>, weights: Vec<f64> },
    /// Heat kernel `(4πα)^{−1/2} e^{−y²/(4α)}`, variance `2α`.
    Gaussian { alpha: f64 },
    /// Samples of `h` on the uniform grid `y_i = −R + i·dy`.
    Tabulated { half_width: f64, spacing: f64, samples: Vec<f64> },
}

/// An even probability kernel together with its abscissa `λ0`.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize))]
pub struct Kernel {
    shape: KernelShape,
    lambda0: f64,
}

const EVEN_TOL: f64 = 1e-12;
const MASS_TOL: f64 = 1e-10;

impl Kernel {
    pub fn dirac() -> Kernel {
        Kernel { shape: KernelShape::Dirac, lambda0: f64::INFINITY }
    }

    /// Point masses from `(j, J(j))` pairs. Repeated offsets are summed.
    pub fn lattice_sum(points: &[(i64, f64)]) -> Result<Kernel, KernelError> {
        let mut pairs: Vec<(i64, f64)> = Vec::new();
        for &(j, w) in points {
            if !(w >= 0.0 && w.is_finite()) {
                return Err(KernelError::Negative { at: j as f64, value: w });
            }
            match pairs.iter_mut().find(|(o, _)| *o == j) {
                Some(p) => p.1 += w,
                None => pairs.push((j, w)),
            }
        }
        pairs.retain(|&(_, w)| w > 0.0);
        pairs.sort_by_key(|&(j, _)| j);
        let weight_at = |j: i64| pairs.iter().find(|(o, _)| *o == j).map_or(0.0, |p| p.1);
        for &(j, w) in &pairs {
            let gap = (w - weight_at(-j)).abs();
            if gap > EVEN_TOL {
                return Err(KernelError::NotEven { at: j as f64, gap });
            }
        }
        let mass: f64 = pairs.iter().map(|p| p.1).sum();
        if (mass - 1.0).abs() > MASS_TOL {
            return Err(KernelError::Mass { mass });
        }
        let (offsets, weights) = pairs.into_iter().unzip();
        Ok(Kernel { shape: KernelShape::LatticeSum { offsets, weights }, lambda0: f64::INFINITY })
    }

    pub fn gaussian(alpha: f64) -> Result<Kernel, KernelError> {
        if !(alpha > 0.0 && alpha.is_finite()) {
            return Err(KernelError::NonPositive { name: "alpha", value: alpha });
        }
        Ok(Kernel { shape: KernelShape::Gaussian { alpha }, lambda0: f64::INFINITY })
    }

    /// Tabulated kernel from samples `(y_i, h(y_i))` on a uniform grid that is
    /// symmetric about 0. The samples are rescaled so that the trapezoid mass
    /// is exactly 1.
    pub fn tabulated(ys: &[f64], hs: &[f64]) -> Result<Kernel, KernelError> {
        let n = ys.len();
        if n < 3 || hs.len() != n || n % 2 == 0 {
            return Err(KernelError::BadTable);
        }
        let half_width = ys[n - 1];
        let spacing = 2.0 * half_width / (n - 1) as f64;
        if !(spacing > 0.0 && spacing.is_finite()) {
            return Err(KernelError::BadTable);
        }
        for (i, &y) in ys.iter().enumerate() {
            let expect = -half_width + spacing * i as f64;
            if (y - expect).abs() > 1e-9 * half_width {
                return Err(KernelError::BadTable);
            }
        }
        let peak = hs.iter().fold(0.0f64, |m, &h| m.max(h));
        for (i, &h) in hs.iter().enumerate() {
            if !(h >= 0.0 && h.is_finite()) {
                return Err(KernelError::Negative { at: ys[i], value: h });
            }
            let gap = (h - hs[n - 1 - i]).abs();
            if gap > EVEN_TOL * peak.max(1.0) {
                return Err(KernelError::NotEven { at: ys[i], gap });
            }
        }
        let mass = crate::quadrature::trapezoid(hs, spacing);
        if !(mass > 0.0) {
            return Err(KernelError::Mass { mass });
        }
        // symmetrize exactly, then normalize
        let samples = (0..n).map(|i| 0.5 * (hs[i] + hs[n - 1 - i]) / mass).collect();
        Ok(Kernel {
            shape: KernelShape::Tabulated { half_width, spacing, samples },
            lambda0: f64::INFINITY,
        })
    }

    /// Declares a finite exponential-moment abscissa, e.g. for a table that
    /// truncates a kernel with exponential tails.
    pub fn with_abscissa(mut self, lambda0: f64) -> Result<Kernel, KernelError> {
        if !(lambda0 > 0.0) {
            return Err(KernelError::NonPositive { name: "lambda0", value: lambda0 });
        }
        self.lambda0 = lambda0;
        Ok(self)
    }

    pub fn shape(&self) -> &KernelShape {
        &self.shape
    }

    pub fn lambda0(&self) -> f64 {
        self.lambda0
    }

    pub fn is_dirac(&self) -> bool {
        matches!(self.shape, KernelShape::Dirac)
    }

    pub fn type_name(&self) -> &'static str {
        match self.shape {
            KernelShape::Dirac => "dirac",
            KernelShape::LatticeSum { .. } => "lattice_sum",
            KernelShape::Gaussian { .. } => "gaussian",
            KernelShape::Tabulated { .. } => "tabulated",
        }
    }

    fn check(&self, lambda: f64) -> Result<(), KernelError> {
        if lambda.is_finite() && lambda.abs() < self.lambda0 {
            Ok(())
        } else {
            Err(KernelError::Abscissa { lambda: lambda.abs(), lambda0: self.lambda0 })
        }
    }

    fn tabulated_nodes(half_width: f64, spacing: f64, samples: &[f64]) -> impl Iterator<Item = (f64, f64)> + '_ {
        let last = samples.len() - 1;
        samples.iter().enumerate().map(move |(i, &h)| {
            let w = if i == 0 || i == last { 0.5 } else { 1.0 };
            (-half_width + spacing * i as f64, w * spacing * h)
        })
    }

    /// `G(λ)`.
    pub fn eval_g(&self, lambda: f64) -> Result<f64, KernelError> {
        self.check(lambda)?;
        Ok(match &self.shape {
            KernelShape::Dirac => 1.0,
            KernelShape::LatticeSum { offsets, weights } => offsets
                .iter()
                .zip(weights)
                .map(|(&j, &w)| w * (-lambda * j as f64).exp())
                .sum(),
            KernelShape::Gaussian { alpha } => (alpha * lambda * lambda).exp(),
            KernelShape::Tabulated { half_width, spacing, samples } => {
                Self::tabulated_nodes(*half_width, *spacing, samples)
                    .map(|(y, w)| w * (-lambda * y).exp())
                    .sum()
            }
        })
    }

    /// `G(λ)` together with an estimate of the truncation error of a
    /// tabulated kernel (mass beyond the table extrapolated from the edge
    /// samples). Exact kernels report 0.
    pub fn eval_g_with_error(&self, lambda: f64) -> Result<(f64, f64), KernelError> {
        let g = self.eval_g(lambda)?;
        let err = match &self.shape {
            KernelShape::Tabulated { half_width, spacing, samples } => {
                let edge = samples[0].max(samples[samples.len() - 1]);
                edge * spacing * (lambda.abs() * half_width).exp()
            }
            _ => 0.0,
        };
        Ok((g, err))
    }

    /// `(G′(λ), G″(λ))`.
    pub fn eval_g_derivs(&self, lambda: f64) -> Result<(f64, f64), KernelError> {
        self.check(lambda)?;
        Ok(match &self.shape {
            KernelShape::Dirac => (0.0, 0.0),
            KernelShape::LatticeSum { offsets, weights } => {
                offsets.iter().zip(weights).fold((0.0, 0.0), |(d1, d2), (&j, &w)| {
                    let y = j as f64;
                    let e = w * (-lambda * y).exp();
                    (d1 - y * e, d2 + y * y * e)
                })
            }
            KernelShape::Gaussian { alpha } => {
                let g = (alpha * lambda * lambda).exp();
                (2.0 * alpha * lambda * g, (2.0 * alpha + 4.0 * alpha * alpha * lambda * lambda) * g)
            }
            KernelShape::Tabulated { half_width, spacing, samples } => {
                Self::tabulated_nodes(*half_width, *spacing, samples).fold((0.0, 0.0), |(d1, d2), (y, w)| {
                    let e = w * (-lambda * y).exp();
                    (d1 - y * e, d2 + y * y * e)
                })
            }
        })
    }

    /// `G(z)` for complex `z`, `|Re z| < λ0`.
    pub fn eval_g_complex(&self, z: Complex64) -> Result<Complex64, KernelError> {
        self.check(z.re)?;
        Ok(match &self.shape {
            KernelShape::Dirac => Complex64::new(1.0, 0.0),
            KernelShape::LatticeSum { offsets, weights } => offsets
                .iter()
                .zip(weights)
                .map(|(&j, &w)| (-z * j as f64).exp() * w)
                .sum(),
            KernelShape::Gaussian { alpha } => (z * z * *alpha).exp(),
            KernelShape::Tabulated { half_width, spacing, samples } => {
                Self::tabulated_nodes(*half_width, *spacing, samples)
                    .map(|(y, w)| (-z * y).exp() * w)
                    .sum()
            }
        })
    }

    /// Kernel density `h(y)` for the continuous variants, `None` for point masses.
    pub fn density(&self, y: f64) -> Option<f64> {
        match &self.shape {
            KernelShape::Gaussian { alpha } => {
                Some((-y * y / (4.0 * alpha)).exp() / (4.0 * core::f64::consts::PI * alpha).sqrt())
            }
            KernelShape::Tabulated { half_width, spacing, samples } => {
                let pos = (y + half_width) / spacing;
                if pos < 0.0 || pos > (samples.len() - 1) as f64 {
                    return Some(0.0);
                }
                let i = (pos.floor() as usize).min(samples.len() - 2);
                let t = pos - i as f64;
                Some(samples[i] * (1.0 - t) + samples[i + 1] * t)
            }
            _ => None,
        }
    }

    /// Quadrature weights on the nodes `k·spacing`, nonnegative, symmetric
    /// and renormalized to sum to 1. The truncation radius discards less
    /// than `tail_tol` of the mass.
    pub fn discretize(&self, spacing: f64, tail_tol: f64) -> Result<KernelWeights, KernelError> {
        if !(spacing > 0.0 && spacing.is_finite()) {
            return Err(KernelError::Spacing(spacing));
        }
        if !(tail_tol > 0.0 && tail_tol <= 1e-2) {
            return Err(KernelError::TailTol(tail_tol));
        }
        let raw: Vec<f64> = match &self.shape {
            KernelShape::Dirac => vec![1.0],
            KernelShape::LatticeSum { offsets, weights } => {
                let stride = (1.0 / spacing).round();
                if stride < 1.0 || (stride * spacing - 1.0).abs() > 1e-12 {
                    let offset = offsets.iter().copied().find(|&j| j != 0).unwrap_or(1);
                    return Err(KernelError::Incommensurate { offset, spacing });
                }
                let stride = stride as i64;
                let reach = offsets.iter().map(|j| j.abs()).max().unwrap_or(0) * stride;
                let mut w = vec![0.0; (2 * reach + 1) as usize];
                for (&j, &v) in offsets.iter().zip(weights) {
                    w[(j * stride + reach) as usize] += v;
                }
                w
            }
            KernelShape::Gaussian { alpha } => {
                // P(|Y| > R) = erfc(R / (2√α))
                let scale = 2.0 * alpha.sqrt();
                let mut radius = 0usize;
                while libm::erfc((radius as f64 + 0.5) * spacing / scale) >= tail_tol {
                    radius += 1;
                }
                let h = |y: f64| self.density(y).unwrap_or(0.0);
                (0..=2 * radius).map(|i| h((i as f64 - radius as f64) * spacing)).collect()
            }
            KernelShape::Tabulated { half_width, .. } => {
                let reach = (half_width / spacing + 1e-9).floor() as i64;
                let mut w: Vec<f64> = (-reach..=reach)
                    .map(|k| self.density(k as f64 * spacing).unwrap_or(0.0))
                    .collect();
                let total: f64 = w.iter().sum();
                // trim outer pairs while the discarded mass stays below tail_tol
                let mut dropped = 0.0;
                while w.len() > 1 {
                    let pair = w[0] + w[w.len() - 1];
                    if (dropped + pair) / total >= tail_tol {
                        break;
                    }
                    dropped += pair;
                    w.pop();
                    w.remove(0);
                }
                w
            }
        };
        let total: f64 = raw.iter().sum();
        let radius = raw.len() / 2;
        let mut weights: Vec<f64> = raw.iter().map(|w| w / total).collect();
        for k in 0..radius {
            let avg = 0.5 * (weights[k] + weights[2 * radius - k]);
            weights[k] = avg;
            weights[2 * radius - k] = avg;
        }
        Ok(KernelWeights { spacing, radius, weights })
    }
}

/// Discrete convolution weights `w_k` at offsets `k·spacing`, `|k| ≤ radius`.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize))]
pub struct KernelWeights {
    spacing: f64,
    radius: usize,
    weights: Vec<f64>,
}

impl KernelWeights {
    pub fn spacing(&self) -> f64 {
        self.spacing
    }

    pub fn radius(&self) -> usize {
        self.radius
    }

    /// Weights ordered from offset `−radius` to `+radius`.
    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn weight(&self, k: i64) -> f64 {
        let idx = k + self.radius as i64;
        if idx < 0 || idx as usize >= self.weights.len() {
            0.0
        } else {
            self.weights[idx as usize]
        }
    }

    pub fn is_identity(&self) -> bool {
        self.radius == 0
    }

    /// Discrete moment `Σ w_k e^{−λ k·spacing}`.
    pub fn moment(&self, lambda: f64) -> f64 {
        self.weights
            .iter()
            .enumerate()
            .map(|(i, w)| w * (-lambda * (i as f64 - self.radius as f64) * self.spacing).exp())
            .sum()
    }

    /// `out[i] = Σ_k w_k field[i−k]`, reading edge values beyond the ends.
    pub fn convolve_into(&self, field: &[f64], out: &mut [f64]) {
        let n = field.len();
        assert_eq!(out.len(), n);
        if self.radius == 0 {
            out.copy_from_slice(field);
            return;
        }
        let r = self.radius as isize;
        let last = n as isize - 1;
        for (i, o) in out.iter_mut().enumerate() {
            let i = i as isize;
            let mut acc = 0.0;
            if i - r >= 0 && i + r <= last {
                let window = &field[(i - r) as usize..=(i + r) as usize];
                // w is symmetric so the reversal in i−k is immaterial
                for (w, u) in self.weights.iter().zip(window) {
                    acc += w * u;
                }
            } else {
                for (k, w) in self.weights.iter().enumerate() {
                    let j = (i - (k as isize - r)).clamp(0, last);
                    acc += w * field[j as usize];
                }
            }
            *o = acc;
        }
    }

    pub fn convolve(&self, field: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; field.len()];
        self.convolve_into(field, &mut out);
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn dirac_moment_is_one() {
        let k = Kernel::dirac();
        assert_eq!(k.eval_g(3.7).unwrap(), 1.0);
        assert_eq!(k.eval_g_derivs(2.0).unwrap(), (0.0, 0.0));
    }

    #[test]
    fn nearest_neighbour_sum_is_cosh() {
        let k = Kernel::lattice_sum(&[(-1, 0.5), (1, 0.5)]).unwrap();
        assert!((k.eval_g(1.0).unwrap() - 0.5 * ((-1.0f64).exp() + 1.0f64.exp())).abs() < 1e-15);
        let (d1, d2) = k.eval_g_derivs(0.5).unwrap();
        assert!((d1 - 0.5f64.sinh()).abs() < 1e-15);
        assert!((d2 - 0.5f64.cosh()).abs() < 1e-15);
    }

    #[test]
    fn gaussian_derivatives_at_zero() {
        let k = Kernel::gaussian(0.25).unwrap();
        let (d1, d2) = k.eval_g_derivs(0.0).unwrap();
        assert_eq!(d1, 0.0);
        assert!((d2 - 0.5).abs() < 1e-15);
    }

    #[test]
    fn rejects_bad_kernels() {
        assert!(matches!(Kernel::lattice_sum(&[(1, 1.0)]), Err(KernelError::NotEven { .. })));
        assert!(matches!(Kernel::lattice_sum(&[(1, 0.4), (-1, 0.4)]), Err(KernelError::Mass { .. })));
        assert!(matches!(Kernel::gaussian(0.0), Err(KernelError::NonPositive { .. })));
        assert!(Kernel::tabulated(&[-1.0, 0.0, 1.0], &[0.1, 1.0, 0.2]).is_err());
    }

    #[test]
    fn finite_abscissa_is_enforced() {
        let k = Kernel::gaussian(0.25).unwrap().with_abscissa(2.0).unwrap();
        assert!(k.eval_g(1.9).is_ok());
        assert!(matches!(k.eval_g(-2.0), Err(KernelError::Abscissa { .. })));
    }

    #[test]
    fn lattice_sum_needs_commensurate_spacing() {
        let k = Kernel::lattice_sum(&[(0, 1.0)]).unwrap();
        let w = k.discretize(0.5, 1e-8).unwrap();
        assert_eq!(w.weights(), &[1.0]);
        let k = Kernel::lattice_sum(&[(-1, 0.25), (0, 0.5), (1, 0.25)]).unwrap();
        assert!(matches!(k.discretize(0.3, 1e-8), Err(KernelError::Incommensurate { .. })));
        let w = k.discretize(0.25, 1e-8).unwrap();
        assert_eq!(w.radius(), 4);
        assert_eq!(w.weight(-4), 0.25);
        assert_eq!(w.weight(0), 0.5);
        assert_eq!(w.weight(1), 0.0);
    }

    #[test]
    fn gaussian_weights_radius() {
        let k = Kernel::gaussian(0.25).unwrap();
        let w = k.discretize(0.1, 1e-8).unwrap();
        let sigma = 0.5f64.sqrt();
        let r = w.radius() as f64 * 0.1;
        assert!(r > 5.0 * sigma && r < 7.0 * sigma, "radius {r}");
        assert!((w.weights().iter().sum::<f64>() - 1.0).abs() < 1e-14);
    }

    #[test]
    fn convolution_reads_clamped_extension() {
        let w = Kernel::lattice_sum(&[(-1, 0.5), (1, 0.5)]).unwrap().discretize(1.0, 1e-8).unwrap();
        let out = w.convolve(&[1.0, 2.0, 4.0]);
        assert_eq!(out, vec![1.5, 2.5, 3.0]);
    }
}
