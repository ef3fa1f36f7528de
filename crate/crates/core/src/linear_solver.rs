//! Spectral solution of the linear problem
//! `u_tt − (1+t)^{−2ℓ}Δu + β/(1+t) u_t = 0` on a periodic box.
//!
//! Every Fourier mode evolves independently, so the propagator is applied
//! mode by mode, either through the closed-form multipliers (data with
//! `u(s) = 0`) or by integrating each mode's ODE (general data). Modes with
//! equal `|ξ|` share one evaluation.

use std::collections::BTreeMap;

use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::exponents::ModelParams;
use crate::decay::NormSample;
use crate::grid::{hermitian_defect, GridSpec, Transform};
use crate::multipliers::{mode_ode, multiplier_eval, multiplier_m1, ModeSolution, PhasePoint};
use crate::ode::Tolerances;

/// `exp(−1/(1−(r/w)²))` on `r < w`, zero outside.
pub fn bump(r: f64, width: f64) -> f64 {
    let x = r / width;
    if x.abs() >= 1.0 { 0.0 } else { (-1.0 / (1.0 - x * x)).exp() }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SpectralState {
    pub u_hat: Vec<Complex64>,
    pub ut_hat: Vec<Complex64>,
    pub t: f64,
    pub grid: GridSpec,
}

impl SpectralState {
    pub fn zeros(grid: GridSpec, t: f64) -> Self {
        let len = grid.len();
        Self { u_hat: vec![Complex64::default(); len], ut_hat: vec![Complex64::default(); len], t, grid }
    }

    /// State with `u = 0` and `u_t = amplitude · bump(|x|, width)` at time `t`.
    pub fn bump_velocity(grid: GridSpec, t: f64, amplitude: f64, width: f64) -> Result<Self> {
        let tr = Transform::new(grid)?;
        let field = grid.sample_radial(|r| amplitude * bump(r, width));
        let mut st = Self::zeros(grid, t);
        st.ut_hat = tr.forward_real(&field);
        Ok(st)
    }

    /// State from physical fields `(u, u_t)`.
    pub fn from_fields(grid: GridSpec, t: f64, u: &[f64], ut: &[f64]) -> Result<Self> {
        if u.len() != grid.len() || ut.len() != grid.len() {
            return Err(Error::config("field length does not match the grid"));
        }
        let tr = Transform::new(grid)?;
        Ok(Self { u_hat: tr.forward_real(u), ut_hat: tr.forward_real(ut), t, grid })
    }

    pub fn hermitian_defect(&self) -> f64 {
        hermitian_defect(&self.grid, &self.u_hat).max(hermitian_defect(&self.grid, &self.ut_hat))
    }

    pub fn is_finite(&self) -> bool {
        self.u_hat.iter().chain(&self.ut_hat).all(|v| v.re.is_finite() && v.im.is_finite())
    }

    /// Physical displacement field.
    pub fn displacement(&self, tr: &Transform) -> Vec<f64> {
        tr.inverse_real(&self.u_hat).0
    }

    /// Radius outside which both physical fields are below `1e−10` of their
    /// peaks.
    pub fn support_radius(&self, tr: &Transform) -> f64 {
        let u = tr.inverse_real(&self.u_hat).0;
        let ut = tr.inverse_real(&self.ut_hat).0;
        self.grid.support_radius(&u, SUPPORT_THRESHOLD).max(self.grid.support_radius(&ut, SUPPORT_THRESHOLD))
    }
}

const SUPPORT_THRESHOLD: f64 = 1e-10;

/// How modes are advanced in time.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Propagation {
    /// Closed-form multipliers; needs `u(s) = 0`.
    Multiplier,
    /// Per-mode ODE integration; any data.
    ModeOde,
}

/// Distinct `|ξ|²/dk²` values with the flattened indices that carry them.
fn radial_groups(grid: &GridSpec) -> BTreeMap<u64, Vec<usize>> {
    let mut groups: BTreeMap<u64, Vec<usize>> = BTreeMap::new();
    for (idx, key) in grid.squared_index().into_iter().enumerate() {
        groups.entry(key).or_default().push(idx);
    }
    groups
}

/// Precomputed shell structure of a grid, reusable across output times.
#[derive(Debug, Clone)]
pub struct Shells {
    keys: Vec<u64>,
    /// Shell number of every flattened index.
    shell_of: Vec<u32>,
    dk: f64,
}

impl Shells {
    pub fn new(grid: &GridSpec) -> Self {
        let groups = radial_groups(grid);
        let mut shell_of = vec![0u32; grid.len()];
        let mut keys = Vec::with_capacity(groups.len());
        for (shell, (key, members)) in groups.into_iter().enumerate() {
            keys.push(key);
            for idx in members {
                shell_of[idx] = shell as u32;
            }
        }
        Self { keys, shell_of, dk: grid.dk() }
    }

    pub fn len(&self) -> usize {
        self.keys.len()
    }

    pub fn is_empty(&self) -> bool {
        self.keys.is_empty()
    }

    pub fn xi(&self, shell: usize) -> f64 {
        self.dk * (self.keys[shell] as f64).sqrt()
    }

    /// Evaluates `f(|ξ|)` once per shell, in parallel.
    pub fn evaluate<T: Send>(&self, f: impl Fn(f64) -> Result<T> + Sync) -> Result<Vec<T>> {
        (0..self.keys.len()).into_par_iter().map(|s| f(self.xi(s))).collect()
    }

    pub fn shell_of(&self, idx: usize) -> usize {
        self.shell_of[idx] as usize
    }
}

fn check_linear_params(params: &ModelParams) -> Result<()> {
    if !(params.ell >= 0.0 && params.ell < 1.0) {
        return Err(Error::config(format!("ℓ must lie in [0, 1), got {}", params.ell)));
    }
    if !(params.beta > 1.0) {
        return Err(Error::config(format!("β must exceed 1, got {}", params.beta)));
    }
    Ok(())
}

/// Advances `state` from `state.t` to `t`. Fails with a configuration
/// error when the front would wrap around the periodic box.
pub fn propagate_linear(state: &SpectralState, t: f64, params: &ModelParams, how: Propagation) -> Result<SpectralState> {
    check_linear_params(params)?;
    let s = state.t;
    if !(t >= s) {
        return Err(Error::domain(format!("cannot propagate backwards from {s} to {t}")));
    }
    if t == s {
        return Ok(state.clone());
    }
    let tr = Transform::new(state.grid)?;
    state.grid.check_reach(s, t, params.ell, state.support_radius(&tr))?;
    let shells = Shells::new(&state.grid);
    let ell = params.ell;
    let beta = params.beta;
    // (m0, dt_m0, m1, dt_m1) with m0 normalized to 1 at t = s.
    let fundamentals: Vec<ModeSolution> = match how {
        Propagation::Multiplier => {
            if state.u_hat.iter().any(|v| *v != Complex64::default()) {
                return Err(Error::config(
                    "the multiplier path needs zero displacement data; use the mode ODE path",
                ));
            }
            shells.evaluate(|xi| {
                let m = multiplier_eval(&PhasePoint::new(t, s, xi, ell)?, beta)?;
                Ok(ModeSolution { m0: f64::NAN, dt_m0: f64::NAN, m1: m.m1.re, dt_m1: m.dt_m1.re })
            })?
        }
        Propagation::ModeOde => {
            let tol = Tolerances::new(1e-12, 1e-15);
            shells.evaluate(|xi| mode_ode(&PhasePoint::new(t, s, xi, ell)?, beta, &tol))?
        }
    };
    let mut out = SpectralState::zeros(state.grid, t);
    let zero_u = how == Propagation::Multiplier;
    out.u_hat
        .par_iter_mut()
        .zip(out.ut_hat.par_iter_mut())
        .enumerate()
        .with_min_len(1024)
        .for_each(|(idx, (u, ut))| {
            let f = &fundamentals[shells.shell_of(idx)];
            let (g1, g2) = (state.u_hat[idx], state.ut_hat[idx]);
            if zero_u {
                *u = g2 * f.m1;
                *ut = g2 * f.dt_m1;
            } else {
                *u = g1 * f.m0 + g2 * f.m1;
                *ut = g1 * f.dt_m0 + g2 * f.dt_m1;
            }
        });
    Ok(out)
}

/// Displacement spectra at several times for data `(0, ĝ₂)` given at `s`,
/// sharing one shell decomposition. Only `m₁` is evaluated.
pub struct VelocityDataEvolution {
    grid: GridSpec,
    shells: Shells,
    ut_hat: Vec<Complex64>,
    s: f64,
    params: ModelParams,
    support: f64,
}

impl VelocityDataEvolution {
    pub fn new(state: &SpectralState, params: &ModelParams) -> Result<Self> {
        check_linear_params(params)?;
        if state.u_hat.iter().any(|v| *v != Complex64::default()) {
            return Err(Error::config("velocity-data evolution needs zero displacement data"));
        }
        let support = state.support_radius(&Transform::new(state.grid)?);
        Ok(Self {
            grid: state.grid,
            shells: Shells::new(&state.grid),
            ut_hat: state.ut_hat.clone(),
            s: state.t,
            params: *params,
            support,
        })
    }

    pub fn grid(&self) -> &GridSpec {
        &self.grid
    }

    /// `û(t) = m₁(t,s,|ξ|) ĝ₂`.
    pub fn displacement_spectrum(&self, t: f64) -> Result<Vec<Complex64>> {
        let (s, ell, beta) = (self.s, self.params.ell, self.params.beta);
        self.grid.check_reach(s, t, ell, self.support)?;
        let m1 = self.shells.evaluate(|xi| multiplier_m1(&PhasePoint::new(t, s, xi, ell)?, beta))?;
        Ok(self
            .ut_hat
            .par_iter()
            .enumerate()
            .with_min_len(1024)
            .map(|(idx, g)| g * m1[self.shells.shell_of(idx)])
            .collect())
    }
}

/// Norm samples of the velocity-data solution at each of `times`.
pub fn linear_norm_series(
    state: &SpectralState,
    params: &ModelParams,
    times: &[f64],
    qs: &[f64],
) -> Result<Vec<NormSample>> {
    let evo = VelocityDataEvolution::new(state, params)?;
    let tr = Transform::new(state.grid)?;
    times
        .iter()
        .map(|&t| {
            let mut spec = evo.displacement_spectrum(t)?;
            tr.inverse_in_place(&mut spec);
            let field: Vec<f64> = spec.iter().map(|v| v.re).collect();
            NormSample::of_field(t, &field, &state.grid, qs)
        })
        .collect()
}
