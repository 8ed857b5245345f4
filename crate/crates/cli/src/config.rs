//! Experiment configuration files (TOML, strict).

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};

use ldfront_core::lattice::{dt_max, Boundary};
use ldfront_core::{Kernel, Model, Problem};
use serde::{Deserialize, Serialize};

use crate::error::CliError;
use crate::tabulated::read_kernel_table;

#[derive(Debug, Clone, PartialEq, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub model: ModelSection,
    #[serde(default)]
    pub kernel: KernelSection,
    #[serde(default)]
    pub problem: ProblemSection,
    #[serde(default)]
    pub numerics: NumericsSection,
    #[serde(default)]
    pub analyze: AnalyzeSection,
    #[serde(default)]
    pub profile: ProfileSection,
    #[serde(default)]
    pub simulate: SimulateSection,
    #[serde(default)]
    pub stability: StabilitySection,
    #[serde(default)]
    pub green: GreenSection,
    /// Output directory, relative to the working directory. `--out` wins.
    #[serde(default)]
    pub output: Option<PathBuf>,
    #[serde(default)]
    pub seed: u64,
}

#[derive(Debug, Clone, PartialEq, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
pub struct ModelSection {
    pub name: String,
    #[serde(default)]
    pub params: BTreeMap<String, f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Deserialize, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum KernelType {
    #[default]
    Dirac,
    Gaussian,
    LatticeSum,
    Tabulated,
}

#[derive(Debug, Clone, PartialEq, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
pub struct KernelSection {
    #[serde(rename = "type", default)]
    pub kind: KernelType,
    #[serde(default)]
    pub alpha: Option<f64>,
    #[serde(default)]
    pub offsets: Option<Vec<i64>>,
    #[serde(default)]
    pub weights: Option<Vec<f64>>,
    /// Two-column CSV `(y, h(y))`, relative to the config file.
    #[serde(default)]
    pub file: Option<PathBuf>,
    #[serde(default)]
    pub lambda0: Option<f64>,
    #[serde(default = "default_tail_tol")]
    pub tail_tol: f64,
}

impl Default for KernelSection {
    fn default() -> Self {
        KernelSection { kind: KernelType::Dirac, alpha: None, offsets: None, weights: None, file: None, lambda0: None, tail_tol: default_tail_tol() }
    }
}

fn default_tail_tol() -> f64 {
    1e-12
}

#[derive(Debug, Clone, Copy, PartialEq, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
pub struct ProblemSection {
    #[serde(default = "one")]
    pub d: f64,
    #[serde(default)]
    pub tau: f64,
}

impl Default for ProblemSection {
    fn default() -> Self {
        ProblemSection { d: 1.0, tau: 0.0 }
    }
}

fn one() -> f64 {
    1.0
}

/// A time step given as a number or `"auto"`.
#[derive(Debug, Clone, Copy, PartialEq, Default, Deserialize, Serialize)]
#[serde(try_from = "StepRepr", into = "StepRepr")]
pub enum TimeStep {
    #[default]
    Auto,
    Value(f64),
}

#[derive(Deserialize, Serialize)]
#[serde(untagged)]
enum StepRepr {
    Number(f64),
    Text(String),
}

impl TryFrom<StepRepr> for TimeStep {
    type Error = String;

    fn try_from(r: StepRepr) -> Result<Self, String> {
        match r {
            StepRepr::Number(v) => Ok(TimeStep::Value(v)),
            StepRepr::Text(s) if s == "auto" => Ok(TimeStep::Auto),
            StepRepr::Text(s) => Err(format!("dt must be a number or \"auto\", got {s:?}")),
        }
    }
}

impl From<TimeStep> for StepRepr {
    fn from(t: TimeStep) -> StepRepr {
        match t {
            TimeStep::Auto => StepRepr::Text("auto".into()),
            TimeStep::Value(v) => StepRepr::Number(v),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
pub struct NumericsSection {
    /// Grid nodes per unit length.
    #[serde(default = "default_m")]
    pub m: usize,
    #[serde(default)]
    pub dt: TimeStep,
    /// Domain and horizon of `simulate`.
    #[serde(default = "default_x_min")]
    pub x_min: f64,
    #[serde(default = "default_x_max")]
    pub x_max: f64,
    #[serde(default = "default_sim_t")]
    pub t_end: f64,
}

impl Default for NumericsSection {
    fn default() -> Self {
        NumericsSection {
            m: default_m(),
            dt: TimeStep::Auto,
            x_min: default_x_min(),
            x_max: default_x_max(),
            t_end: default_sim_t(),
        }
    }
}

fn default_m() -> usize {
    10
}

/// Speeds given as `c`, `c_list` (absolute) or `c_offsets` (added to `c*`),
/// at most one of them; `fallback` offsets apply when none is.
pub fn resolve_speeds(
    section: &str,
    c: Option<f64>,
    c_list: Option<&[f64]>,
    c_offsets: Option<&[f64]>,
    c_star: f64,
    fallback: &[f64],
) -> Result<Vec<f64>, CliError> {
    let speeds = match (c, c_list, c_offsets) {
        (Some(c), None, None) => vec![c],
        (None, Some(list), None) => list.to_vec(),
        (None, None, Some(offsets)) => offsets.iter().map(|o| c_star + o).collect(),
        (None, None, None) => fallback.iter().map(|o| c_star + o).collect(),
        _ => return Err(CliError::Config(format!("[{section}]: give at most one of `c`, `c_list` and `c_offsets`"))),
    };
    if speeds.is_empty() {
        return Err(CliError::Config(format!("[{section}]: the speed list is empty")));
    }
    Ok(speeds)
}

#[derive(Debug, Clone, PartialEq, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
pub struct AnalyzeSection {
    #[serde(default)]
    pub c: Option<f64>,
    #[serde(default)]
    pub c_list: Option<Vec<f64>>,
    #[serde(default)]
    pub c_offsets: Option<Vec<f64>>,
    /// λ samples per speed in the Δ(c, λ) table.
    #[serde(default = "default_lambda_samples")]
    pub lambda_samples: usize,
    #[serde(default)]
    pub lambda_max: Option<f64>,
}

impl Default for AnalyzeSection {
    fn default() -> Self {
        AnalyzeSection { c: None,
            c_list: None,
            c_offsets: None, lambda_samples: default_lambda_samples(), lambda_max: None }
    }
}

fn default_lambda_samples() -> usize {
    200
}

#[derive(Debug, Clone, PartialEq, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
pub struct ProfileSection {
    #[serde(default)]
    pub c: Option<f64>,
    #[serde(default)]
    pub c_list: Option<Vec<f64>>,
    #[serde(default)]
    pub c_offsets: Option<Vec<f64>>,
    #[serde(default)]
    pub xi_min: Option<f64>,
    #[serde(default)]
    pub xi_max: Option<f64>,
    #[serde(default = "default_t_relax")]
    pub t_relax: f64,
    #[serde(default = "default_relax_tol")]
    pub tol: f64,
    #[serde(default = "yes")]
    pub polish: bool,
}

impl Default for ProfileSection {
    fn default() -> Self {
        ProfileSection {
            c: None,
            c_list: None,
            c_offsets: None,
            xi_min: None,
            xi_max: None,
            t_relax: default_t_relax(),
            tol: default_relax_tol(),
            polish: true,
        }
    }
}

fn default_t_relax() -> f64 {
    5000.0
}

fn default_relax_tol() -> f64 {
    1e-6
}

fn yes() -> bool {
    true
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Deserialize, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum BoundaryKind {
    #[default]
    Equilibria,
    Hold,
}

impl From<BoundaryKind> for Boundary {
    fn from(b: BoundaryKind) -> Boundary {
        match b {
            BoundaryKind::Equilibria => Boundary::Equilibria,
            BoundaryKind::Hold => Boundary::Hold,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Deserialize, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum InitialKind {
    /// `K` right of 0, `0` left of it.
    #[default]
    Step,
    /// `clip(K·Gaussian)` centered at 0.
    Bump,
    /// Independent uniform samples in `[0, K]` per unit cell, drawn from `seed`.
    Random,
}

#[derive(Debug, Clone, PartialEq, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
pub struct SimulateSection {
    #[serde(default)]
    pub initial: InitialKind,
    #[serde(default)]
    pub boundary: BoundaryKind,
    /// Time between snapshots.
    #[serde(default = "default_snapshot_every")]
    pub snapshot_every: f64,
}

impl Default for SimulateSection {
    fn default() -> Self {
        SimulateSection {
            initial: InitialKind::Step,
            boundary: BoundaryKind::Equilibria,
            snapshot_every: default_snapshot_every(),
        }
    }
}

fn default_x_min() -> f64 {
    -100.0
}

fn default_x_max() -> f64 {
    20.0
}

fn default_sim_t() -> f64 {
    40.0
}

fn default_snapshot_every() -> f64 {
    5.0
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Deserialize, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum ShapeKind {
    #[default]
    Bump,
    Shift,
    LeftDecaying,
}

#[derive(Debug, Clone, Copy, PartialEq, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
pub struct PerturbationSection {
    #[serde(default)]
    pub shape: ShapeKind,
    /// In units of `K`.
    #[serde(default = "default_amplitude")]
    pub amplitude: f64,
    #[serde(default)]
    pub center: f64,
    #[serde(default = "one")]
    pub width: f64,
    #[serde(default = "default_delta")]
    pub delta: f64,
    #[serde(default = "one")]
    pub rate: f64,
}

impl Default for PerturbationSection {
    fn default() -> Self {
        PerturbationSection {
            shape: ShapeKind::Bump,
            amplitude: default_amplitude(),
            center: 0.0,
            width: 1.0,
            delta: default_delta(),
            rate: 1.0,
        }
    }
}

fn default_amplitude() -> f64 {
    0.1
}

fn default_delta() -> f64 {
    0.5
}

#[derive(Debug, Clone, PartialEq, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
pub struct StabilitySection {
    #[serde(default)]
    pub c: Option<f64>,
    #[serde(default)]
    pub c_list: Option<Vec<f64>>,
    #[serde(default)]
    pub c_offsets: Option<Vec<f64>>,
    /// Delays to sweep; the problem's `tau` when absent.
    #[serde(default)]
    pub taus: Option<Vec<f64>>,
    #[serde(default = "default_stab_t")]
    pub t_end: f64,
    #[serde(default = "default_record_every")]
    pub record_every: f64,
    /// Defaults to `[10, t_end]`.
    #[serde(default)]
    pub fit_window: Option<[f64; 2]>,
    #[serde(default = "yes")]
    pub squeeze: bool,
    /// Measure against the best translate (default for shift perturbations).
    #[serde(default)]
    pub orbital: Option<bool>,
    #[serde(default = "default_margin")]
    pub margin: f64,
    #[serde(default)]
    pub perturbation: PerturbationSection,
}

impl Default for StabilitySection {
    fn default() -> Self {
        StabilitySection {
            c: None,
            c_list: None,
            c_offsets: None,
            taus: None,
            t_end: default_stab_t(),
            record_every: default_record_every(),
            fit_window: None,
            squeeze: true,
            orbital: None,
            margin: default_margin(),
            perturbation: PerturbationSection::default(),
        }
    }
}

fn default_stab_t() -> f64 {
    60.0
}

fn default_record_every() -> f64 {
    0.5
}

fn default_margin() -> f64 {
    10.0
}

#[derive(Debug, Clone, PartialEq, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
pub struct GreenSection {
    /// The constant `ε ∈ (0, 1)` of the heat-kernel bound.
    #[serde(default = "default_eps")]
    pub eps: f64,
    #[serde(default = "default_times")]
    pub times: Vec<f64>,
    /// Defaults to `λ*` of the configured problem.
    #[serde(default)]
    pub lambda_star: Option<f64>,
    /// Rates `b` of the delayed-exponential table.
    #[serde(default = "default_rates")]
    pub rates: Vec<f64>,
    /// Delay of the table; the problem's `tau` (or 1 when that is 0) when absent.
    #[serde(default)]
    pub table_tau: Option<f64>,
    #[serde(default = "default_table_t")]
    pub table_t_max: f64,
    #[serde(default = "default_table_samples")]
    pub table_samples: usize,
}

impl Default for GreenSection {
    fn default() -> Self {
        GreenSection {
            eps: default_eps(),
            times: default_times(),
            lambda_star: None,
            rates: default_rates(),
            table_tau: None,
            table_t_max: default_table_t(),
            table_samples: default_table_samples(),
        }
    }
}

fn default_eps() -> f64 {
    0.5
}

fn default_times() -> Vec<f64> {
    vec![0.1, 1.0, 10.0, 100.0]
}

fn default_rates() -> Vec<f64> {
    vec![-1.0, 0.5, 1.0]
}

fn default_table_t() -> f64 {
    4.0
}

fn default_table_samples() -> usize {
    81
}

/// A parsed config with the directory used to resolve relative paths.
#[derive(Debug, Clone)]
pub struct LoadedConfig {
    pub config: ExperimentConfig,
    pub base_dir: PathBuf,
    pub source: PathBuf,
}

pub fn parse_config(text: &str, origin: &str) -> Result<ExperimentConfig, CliError> {
    toml::from_str(text).map_err(|e| {
        let place = e
            .span()
            .map(|s| {
                let line = text[..s.start.min(text.len())].matches('\n').count() + 1;
                format!(" (line {line})")
            })
            .unwrap_or_default();
        CliError::Config(format!("{origin}{place}: {}", e.message()))
    })
}

pub fn load_config(path: &Path) -> Result<LoadedConfig, CliError> {
    let text = fs::read_to_string(path).map_err(|e| CliError::Config(format!("cannot read {}: {e}", path.display())))?;
    let config = parse_config(&text, &path.display().to_string())?;
    let base_dir = path.parent().map(Path::to_path_buf).unwrap_or_default();
    Ok(LoadedConfig { config, base_dir, source: path.to_path_buf() })
}

impl LoadedConfig {
    /// The model; for `age_structured`, whose `K` depends on the delay, the
    /// `tau` parameter follows the problem's delay.
    pub fn model_with_tau(&self, tau: f64) -> Result<Model, CliError> {
        let m = &self.config.model;
        let mut params: Vec<(&str, f64)> = m.params.iter().map(|(k, v)| (k.as_str(), *v)).collect();
        if m.name == "age_structured" {
            match m.params.get("tau") {
                Some(&t) if t != self.config.problem.tau => {
                    return Err(CliError::Config(format!(
                        "[model.params] tau = {t} differs from [problem] tau = {}",
                        self.config.problem.tau
                    )));
                }
                _ => {}
            }
            params.retain(|(k, _)| *k != "tau");
            params.push(("tau", tau));
        }
        Ok(Model::make_builtin(&m.name, &params)?)
    }

    pub fn kernel(&self) -> Result<Kernel, CliError> {
        let k = &self.config.kernel;
        let name = match k.kind {
            KernelType::Dirac => "dirac",
            KernelType::Gaussian => "gaussian",
            KernelType::LatticeSum => "lattice_sum",
            KernelType::Tabulated => "tabulated",
        };
        let given = [
            ("alpha", k.alpha.is_some()),
            ("offsets", k.offsets.is_some()),
            ("weights", k.weights.is_some()),
            ("file", k.file.is_some()),
        ];
        let wanted: &[&str] = match k.kind {
            KernelType::Dirac => &[],
            KernelType::Gaussian => &["alpha"],
            KernelType::LatticeSum => &["offsets", "weights"],
            KernelType::Tabulated => &["file"],
        };
        for (key, present) in given {
            if present != wanted.contains(&key) {
                let verb = if present { "does not take" } else { "needs" };
                return Err(CliError::Config(format!("[kernel] type {name} {verb} `{key}`")));
            }
        }
        let kernel = match k.kind {
            KernelType::Dirac => Kernel::dirac(),
            KernelType::Gaussian => Kernel::gaussian(k.alpha.unwrap_or_default())?,
            KernelType::LatticeSum => {
                let (offsets, weights) = (k.offsets.as_deref().unwrap_or_default(), k.weights.as_deref().unwrap_or_default());
                if offsets.len() != weights.len() {
                    return Err(CliError::Config("[kernel] `offsets` and `weights` differ in length".into()));
                }
                let pairs: Vec<(i64, f64)> = offsets.iter().copied().zip(weights.iter().copied()).collect();
                Kernel::lattice_sum(&pairs)?
            }
            KernelType::Tabulated => {
                let file = self.base_dir.join(k.file.as_ref().expect("checked above"));
                let (ys, hs) = read_kernel_table(&file)?;
                Kernel::tabulated(&ys, &hs)?
            }
        };
        Ok(match k.lambda0 {
            Some(l0) => kernel.with_abscissa(l0)?,
            None => kernel,
        })
    }

    pub fn problem_with_tau(&self, tau: f64) -> Result<Problem, CliError> {
        Ok(Problem::new(self.model_with_tau(tau)?, self.kernel()?, self.config.problem.d, tau)?)
    }

    pub fn problem(&self) -> Result<Problem, CliError> {
        self.problem_with_tau(self.config.problem.tau)
    }

    /// The configured step, checked against the stability bound.
    pub fn time_step(&self, problem: &Problem) -> Result<f64, CliError> {
        let bound = dt_max(problem);
        match self.config.numerics.dt {
            TimeStep::Auto => Ok(bound),
            TimeStep::Value(dt) if dt > 0.0 && dt <= bound * (1.0 + 1e-12) => Ok(dt),
            TimeStep::Value(dt) => Err(CliError::Validation(format!(
                "[numerics] dt = {dt} must lie in (0, {bound}], the stability bound for this problem"
            ))),
        }
    }
}
