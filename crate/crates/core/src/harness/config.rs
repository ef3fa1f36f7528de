//! JSON run configuration with sections `model`, `grid`, `run` and `report`.

use std::collections::BTreeMap;
use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::exponents::ModelParams;
use crate::grid::GridSpec;
use crate::ode::Tolerances;
use crate::semilinear_solver::{Frame, NonlinearRunConfig, Nonlinearity};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Config {
    pub model: ModelSection,
    pub grid: GridSection,
    #[serde(default)]
    pub run: RunSection,
    #[serde(default)]
    pub report: ReportSection,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelSection {
    pub n: u32,
    pub ell: f64,
    pub beta: f64,
    /// Power of the nonlinearity; unused by linear runs and sweeps.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub p: Option<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridSection {
    pub points_per_axis: usize,
    pub half_length: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunSection {
    pub horizon: f64,
    /// Amplitude of the initial velocity bump.
    pub delta: f64,
    pub width: f64,
    pub rtol: f64,
    pub atol: f64,
    pub blowup_threshold: f64,
    pub nonlinearity: Nonlinearity,
    pub frame: Frame,
    pub output_start: f64,
    pub outputs_per_decade: usize,
    /// Powers visited by a dichotomy sweep.
    pub p_list: Vec<f64>,
    /// Sampling plan of a multiplier verification.
    pub samples: SampleSpec,
}

impl Default for RunSection {
    fn default() -> Self {
        let tol = Tolerances::default();
        Self {
            horizon: 1000.0,
            delta: 1.0,
            width: 1.0,
            rtol: tol.rtol,
            atol: tol.atol,
            blowup_threshold: 1e6,
            nonlinearity: Nonlinearity::Power,
            frame: Frame::Physical,
            output_start: 1.0,
            outputs_per_decade: 64,
            p_list: Vec::new(),
            samples: SampleSpec::default(),
        }
    }
}

/// Random `(t, s, ξ, ℓ, β)` points for multiplier verification. `s` is
/// uniform on `[0, s_max]`, `t` uniform on `[s, t_max]`, `ξ` log-uniform on
/// `[xi_min, xi_max]`; `ℓ` and `β` are drawn from the lists.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SampleSpec {
    pub count: usize,
    pub t_max: f64,
    pub s_max: f64,
    pub xi_min: f64,
    pub xi_max: f64,
    pub ells: Vec<f64>,
    pub betas: Vec<f64>,
    /// Largest acceptable `rel_err_m1`.
    pub tolerance: f64,
}

impl Default for SampleSpec {
    fn default() -> Self {
        Self {
            count: 1000,
            t_max: 50.0,
            s_max: 10.0,
            xi_min: 1e-2,
            xi_max: 20.0,
            ells: vec![0.25, 0.5, 2.0 / 3.0],
            betas: vec![1.5, 2.0, 3.0],
            tolerance: 1e-6,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ReportSection {
    /// Norm exponents recorded besides `L²` and `L^∞`.
    pub qs: Vec<f64>,
    /// Fit window; `[T/10, T]` when absent.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub window: Option<(f64, f64)>,
    /// Allowed distance between measured and predicted exponents.
    pub tolerance: f64,
    /// Per-norm overrides of `tolerance`, keyed by column label (`l2`,
    /// `linf`, `lq_6`).
    pub tolerances: BTreeMap<String, f64>,
    /// The `ε` of estimates that hold for every `ε > 0`.
    pub epsilon: f64,
}

impl Default for ReportSection {
    fn default() -> Self {
        Self { qs: Vec::new(), window: None, tolerance: 0.1, tolerances: BTreeMap::new(), epsilon: 1e-6 }
    }
}

impl ReportSection {
    pub fn tolerance_for(&self, label: &str) -> f64 {
        self.tolerances.get(label).copied().unwrap_or(self.tolerance)
    }
}

impl Config {
    pub fn load(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).map_err(|source| Error::Io { path: path.into(), source })?;
        serde_json::from_str(&text).map_err(|e| Error::Parse { path: path.into(), reason: e.to_string() })
    }

    pub fn grid_spec(&self) -> Result<GridSpec> {
        GridSpec::new(self.model.n, self.grid.points_per_axis, self.grid.half_length)
    }

    /// Model parameters with power `p`, falling back to the configured one.
    pub fn params_with(&self, p: Option<f64>) -> Result<ModelParams> {
        let p = p.or(self.model.p).ok_or_else(|| Error::config("model.p is required for this run"))?;
        ModelParams::new(self.model.n, self.model.ell, self.model.beta, p)
    }

    /// Parameters for linear runs, where `p` plays no role.
    pub(crate) fn linear_params(&self) -> ModelParams {
        ModelParams { n: self.model.n, ell: self.model.ell, beta: self.model.beta, p: self.model.p.unwrap_or(f64::NAN) }
    }

    pub fn window(&self) -> (f64, f64) {
        self.report.window.unwrap_or((0.1 * self.run.horizon, self.run.horizon))
    }

    pub fn tolerances(&self) -> Tolerances {
        Tolerances::new(self.run.rtol, self.run.atol)
    }

    /// Solver configuration for a semilinear run with power `p`.
    pub fn nonlinear_run(&self, p: Option<f64>) -> Result<NonlinearRunConfig> {
        let mut cfg = NonlinearRunConfig::new(self.params_with(p)?, self.grid_spec()?, self.run.horizon, self.run.delta);
        cfg.width = self.run.width;
        cfg.blowup_threshold = self.run.blowup_threshold;
        cfg.tolerances = self.tolerances();
        cfg.nonlinearity = self.run.nonlinearity;
        cfg.frame = self.run.frame;
        cfg.qs = self.report.qs.clone();
        cfg.output_start = self.run.output_start;
        cfg.outputs_per_decade = self.run.outputs_per_decade;
        cfg.validate()?;
        Ok(cfg)
    }
}
