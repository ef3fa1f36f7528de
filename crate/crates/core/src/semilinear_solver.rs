//! Pseudospectral method of lines for
//! `u_tt − (1+t)^{−2ℓ}Δu + β/(1+t) u_t = f(u)`, `u(0) = 0`, `u_t(0) = δ g`.
//!
//! Every Fourier mode obeys `û″ = −c(t)²|ξ|²û − b(t)û′ + a(t) f̂(u)`. The
//! nonlinearity is evaluated in physical space and returned through a 2/3
//! dealiasing mask. The same system is solved in the time variable `τ` with
//! `1+τ = (1+t)^{1−ℓ}/(1−ℓ)`, where the speed is constant:
//! `v_ττ − Δv + μ/(1+τ) v_τ = ((1−ℓ)(1+τ))^{2ℓ/(1−ℓ)} f(v)`, `μ = (β−ℓ)/(1−ℓ)`.

use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::decay::{log_times, DecaySeries, NormSample};
use crate::error::{Error, Result};
use crate::exponents::ModelParams;
use crate::grid::{lq_norm, GridSpec, Transform, PAR_CHUNK};
use crate::linear_solver::{SpectralState, VelocityDataEvolution};
use crate::multipliers::{multiplier_m1, PhasePoint};
use crate::ode::{integrate, Control, OdeSystem, StepStats, Termination, Tolerances};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Nonlinearity {
    /// `|u|^p`
    Power,
    /// `|u|^{p−1}u`
    SignedPower,
    /// `0`, for checks against the linear solver.
    Zero,
}

impl Nonlinearity {
    pub fn apply(self, u: f64, p: f64) -> f64 {
        match self {
            Nonlinearity::Power => u.abs().powf(p),
            Nonlinearity::SignedPower => u.abs().powf(p - 1.0) * u,
            Nonlinearity::Zero => 0.0,
        }
    }
}

/// Time variable the system is integrated in.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Frame {
    /// Original time `t` with decaying speed.
    Physical,
    /// `τ` with unit speed.
    Tau,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NonlinearRunConfig {
    pub params: ModelParams,
    pub grid: GridSpec,
    pub horizon: f64,
    pub delta: f64,
    /// Radius of the bump carried by the initial velocity.
    pub width: f64,
    pub blowup_threshold: f64,
    pub tolerances: Tolerances,
    pub nonlinearity: Nonlinearity,
    pub frame: Frame,
    /// Norm exponents recorded besides `L²` and `L^∞`.
    pub qs: Vec<f64>,
    /// First output time; outputs are log-spaced from here to the horizon.
    pub output_start: f64,
    pub outputs_per_decade: usize,
}

impl NonlinearRunConfig {
    pub fn new(params: ModelParams, grid: GridSpec, horizon: f64, delta: f64) -> Self {
        Self {
            params,
            grid,
            horizon,
            delta,
            width: 1.0,
            blowup_threshold: 1e6,
            tolerances: Tolerances::default(),
            nonlinearity: Nonlinearity::Power,
            frame: Frame::Physical,
            qs: Vec::new(),
            output_start: 1.0,
            outputs_per_decade: 64,
        }
    }

    pub fn validate(&self) -> Result<()> {
        self.grid.validate()?;
        let ModelParams { ell, beta, p, .. } = self.params;
        if !(ell >= 0.0 && ell < 1.0) {
            return Err(Error::config(format!("ℓ must lie in [0, 1), got {ell}")));
        }
        if !beta.is_finite() {
            return Err(Error::config("β must be finite"));
        }
        if !(p > 1.0) {
            return Err(Error::config(format!("the power must exceed 1, got {p}")));
        }
        if !(self.delta > 0.0) {
            return Err(Error::config(format!("amplitude must be positive, got {}", self.delta)));
        }
        if !(self.width > 0.0) {
            return Err(Error::config("bump width must be positive"));
        }
        if !(self.horizon > 0.0 && self.output_start > 0.0 && self.output_start < self.horizon) {
            return Err(Error::config(format!(
                "need 0 < output start < horizon, got {} and {}",
                self.output_start, self.horizon
            )));
        }
        if !(self.blowup_threshold >= 0.0) {
            return Err(Error::config("blow-up threshold must be non-negative"));
        }
        for &q in &self.qs {
            if !(q >= 1.0) {
                return Err(Error::config(format!("norm exponent {q} is below 1")));
            }
        }
        self.grid.check_horizon(self.horizon, ell, self.width)
    }

    /// Output times in the original time variable.
    pub fn output_times(&self) -> Result<Vec<f64>> {
        log_times(self.output_start, self.horizon, self.outputs_per_decade)
    }
}

/// `τ(t)` with `1+τ = (1+t)^{1−ℓ}/(1−ℓ)`; the identity for `ℓ = 0`.
pub fn tau_of_t(t: f64, ell: f64) -> f64 {
    if ell == 0.0 {
        return t;
    }
    (1.0 + t).powf(1.0 - ell) / (1.0 - ell) - 1.0
}

/// Inverse of [`tau_of_t`]: `t = ((1−ℓ)(1+τ))^{1/(1−ℓ)} − 1`.
pub fn t_of_tau(tau: f64, ell: f64) -> f64 {
    if ell == 0.0 {
        return tau;
    }
    ((1.0 - ell) * (1.0 + tau)).powf(1.0 / (1.0 - ell)) - 1.0
}

/// The constant-speed problem in `τ`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TauFrameConfig {
    pub base: NonlinearRunConfig,
    /// `τ` at `t = 0`: `ℓ/(1−ℓ)`.
    pub start: f64,
    /// `(β−ℓ)/(1−ℓ)`.
    pub mu: f64,
    /// `2ℓ/(1−ℓ)`, the power of `(1−ℓ)(1+τ)` weighting the nonlinearity.
    pub weight_power: f64,
    /// Output times in `τ`.
    pub outputs: Vec<f64>,
}

/// Rewrites a run in the `τ` variable. The initial velocity is unchanged
/// because `dτ/dt = 1` at `t = 0`.
pub fn to_tau_frame(config: &NonlinearRunConfig) -> Result<TauFrameConfig> {
    config.validate()?;
    let ell = config.params.ell;
    let outputs = config.output_times()?.into_iter().map(|t| tau_of_t(t, ell)).collect();
    let mut base = config.clone();
    base.frame = Frame::Tau;
    Ok(TauFrameConfig {
        base,
        start: tau_of_t(0.0, ell),
        mu: (config.params.beta - ell) / (1.0 - ell),
        weight_power: 2.0 * ell / (1.0 - ell),
        outputs,
    })
}

/// Maps a series sampled in `τ` back to `t`.
pub fn from_tau_frame(series: &DecaySeries, ell: f64) -> DecaySeries {
    let mut out = series.clone();
    for row in &mut out.rows {
        row.t = t_of_tau(row.t, ell);
    }
    out
}

/// `(c², b, a)` at the given time: squared speed, damping, source weight.
#[derive(Debug, Clone, Copy)]
struct Coefficients {
    frame: Frame,
    ell: f64,
    beta: f64,
    mu: f64,
    weight_power: f64,
}

impl Coefficients {
    fn new(frame: Frame, params: &ModelParams) -> Self {
        let ell = params.ell;
        Self {
            frame,
            ell,
            beta: params.beta,
            mu: (params.beta - ell) / (1.0 - ell),
            weight_power: 2.0 * ell / (1.0 - ell),
        }
    }

    fn at(&self, time: f64) -> (f64, f64, f64) {
        match self.frame {
            Frame::Physical => ((1.0 + time).powf(-2.0 * self.ell), self.beta / (1.0 + time), 1.0),
            Frame::Tau => {
                let a = if self.ell == 0.0 { 1.0 } else { ((1.0 - self.ell) * (1.0 + time)).powf(self.weight_power) };
                (1.0, self.mu / (1.0 + time), a)
            }
        }
    }
}

/// `1` for modes kept by the 2/3 rule, `0` otherwise.
pub fn dealias_mask(grid: &GridSpec) -> Vec<f64> {
    let n = grid.points_per_axis;
    let keep = |i: usize| 3 * grid.wave_index(i).unsigned_abs() as usize <= n;
    match grid.n {
        1 => (0..n).map(|i| if keep(i) { 1.0 } else { 0.0 }).collect(),
        _ => (0..n * n).map(|idx| if keep(idx / n) && keep(idx % n) { 1.0 } else { 0.0 }).collect(),
    }
}

/// `f(u)` for a spectral field: inverse transform, pointwise power,
/// forward transform and 2/3 mask. Overwrites `work`.
pub fn nonlinearity(
    tr: &Transform,
    mask: &[f64],
    u_hat: &[Complex64],
    p: f64,
    kind: Nonlinearity,
    work: &mut Vec<Complex64>,
) {
    work.clear();
    if kind == Nonlinearity::Zero {
        work.resize(u_hat.len(), Complex64::default());
        return;
    }
    // Both transform scalings are folded into the copy and the mask pass.
    let inv = tr.inverse_scale();
    work.extend(u_hat.iter().map(|v| v * inv));
    tr.inverse_unscaled(work);
    let power = |v: &mut Complex64| *v = Complex64::new(kind.apply(v.re, p), 0.0);
    match integer_power(p) {
        Some(k) => work.par_iter_mut().with_min_len(PAR_CHUNK).for_each(|v| {
            let a = v.re.abs().powi(k - 1);
            *v = Complex64::new(if kind == Nonlinearity::Power { a * v.re.abs() } else { a * v.re }, 0.0);
        }),
        None => work.par_iter_mut().with_min_len(PAR_CHUNK).for_each(power),
    }
    tr.forward_unscaled(work);
    let fwd = tr.forward_scale();
    work.par_iter_mut().zip(mask.par_iter()).with_min_len(PAR_CHUNK).for_each(|(v, m)| *v *= m * fwd);
}

/// `p` as an `i32` when it is a small positive integer.
fn integer_power(p: f64) -> Option<i32> {
    (p.fract() == 0.0 && (1.0..=64.0).contains(&p)).then_some(p as i32)
}

struct SemilinearSystem {
    tr: Transform,
    mask: Vec<f64>,
    xi2: Vec<f64>,
    coef: Coefficients,
    p: f64,
    kind: Nonlinearity,
    work: Vec<Complex64>,
}

impl OdeSystem for SemilinearSystem {
    type Scalar = Complex64;
    fn rhs(&mut self, time: f64, y: &[Complex64], dy: &mut [Complex64]) {
        let n = self.xi2.len();
        let (u, ut) = y.split_at(n);
        nonlinearity(&self.tr, &self.mask, u, self.p, self.kind, &mut self.work);
        let (c2, b, a) = self.coef.at(time);
        let (du, dut) = dy.split_at_mut(n);
        du.copy_from_slice(ut);
        let (xi2, f) = (&self.xi2, &self.work);
        dut.par_iter_mut().enumerate().with_min_len(PAR_CHUNK).for_each(|(i, d)| {
            *d = u[i] * (-c2 * xi2[i]) - ut[i] * b + f[i] * a;
        });
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RunStatus {
    Completed,
    BlowupDetected,
}

impl RunStatus {
    pub fn as_str(self) -> &'static str {
        match self {
            RunStatus::Completed => "completed",
            RunStatus::BlowupDetected => "blowup_detected",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunOutcome {
    pub status: RunStatus,
    /// Norms at the output times, always in the original time `t`.
    pub series: DecaySeries,
    pub blowup_time: Option<f64>,
    pub diagnostic: Option<String>,
    pub steps: StepStats,
}

/// First time at which the field exceeds `threshold` in `L^∞` or stops being
/// finite. A threshold of 0 trips on the first nonzero field.
pub fn detect_blowup(field: &[f64], t: f64, threshold: f64) -> Option<f64> {
    if field.iter().any(|v| !v.is_finite()) {
        return Some(t);
    }
    let linf = lq_norm(field, f64::INFINITY, 1.0).unwrap_or(f64::INFINITY);
    if linf > threshold || (threshold == 0.0 && linf >= 0.0) { Some(t) } else { None }
}

fn initial_state(config: &NonlinearRunConfig) -> Result<SpectralState> {
    SpectralState::bump_velocity(config.grid, 0.0, config.delta, config.width)
}

/// Integrates the run and records norms at the output times.
pub fn solve_semilinear(config: &NonlinearRunConfig) -> Result<RunOutcome> {
    Ok(solve_semilinear_with_field(config)?.0)
}

/// As [`solve_semilinear`], also returning the physical displacement at the
/// last time reached.
pub fn solve_semilinear_with_field(config: &NonlinearRunConfig) -> Result<(RunOutcome, Vec<f64>)> {
    config.validate()?;
    let ell = config.params.ell;
    let (start, outputs) = match config.frame {
        Frame::Physical => (0.0, config.output_times()?),
        Frame::Tau => {
            let tau = to_tau_frame(config)?;
            (tau.start, tau.outputs)
        }
    };
    let grid = config.grid;
    let tr = Transform::new(grid)?;
    let st = initial_state(config)?;
    let n = grid.len();
    let dk2 = grid.dk() * grid.dk();
    let mut sys = SemilinearSystem {
        tr: tr.clone(),
        mask: dealias_mask(&grid),
        xi2: grid.squared_index().into_iter().map(|k| k as f64 * dk2).collect(),
        coef: Coefficients::new(config.frame, &config.params),
        p: config.params.p,
        kind: config.nonlinearity,
        work: Vec::with_capacity(n),
    };
    let mut y = Vec::with_capacity(2 * n);
    y.extend_from_slice(&st.u_hat);
    y.extend_from_slice(&st.ut_hat);

    let mut series = DecaySeries::new(config.qs.clone());
    let mut blowup = None;
    let mut row_error = None;
    let mut field = vec![Complex64::default(); n];
    let to_t = |time: f64| match config.frame {
        Frame::Physical => time,
        Frame::Tau => t_of_tau(time, ell),
    };
    let (term, steps) = integrate(&mut sys, start, &mut y, &outputs, &config.tolerances, |time, y| {
        field.copy_from_slice(&y[..n]);
        tr.inverse_in_place(&mut field);
        let re: Vec<f64> = field.iter().map(|v| v.re).collect();
        let t = to_t(time);
        if let Some(tb) = detect_blowup(&re, t, config.blowup_threshold) {
            blowup = Some(tb);
            return Control::Stop;
        }
        match NormSample::of_field(t, &re, &grid, &config.qs).and_then(|row| series.push(row)) {
            Ok(()) => Control::Continue,
            Err(e) => {
                row_error = Some(e);
                Control::Stop
            }
        }
    })?;
    if let Some(e) = row_error {
        return Err(e);
    }
    let (status, blowup_time, diagnostic) = match term {
        Termination::Completed => (RunStatus::Completed, None, None),
        Termination::Stopped(_) => (
            RunStatus::BlowupDetected,
            blowup,
            Some(format!("L^∞ norm exceeded {} or became non-finite", config.blowup_threshold)),
        ),
        Termination::Failed { t, reason } => (RunStatus::BlowupDetected, Some(to_t(t)), Some(reason)),
    };
    let last = tr.inverse_real(&y[..n]).0;
    Ok((RunOutcome { status, series, blowup_time, diagnostic, steps }, last))
}

/// Norms of the linear solution with the run's data at its output times.
pub fn linear_reference(config: &NonlinearRunConfig) -> Result<DecaySeries> {
    config.validate()?;
    let st = initial_state(config)?;
    let evo = VelocityDataEvolution::new(&st, &config.params)?;
    let tr = Transform::new(config.grid)?;
    let mut series = DecaySeries::new(config.qs.clone());
    for t in config.output_times()? {
        let mut spec = evo.displacement_spectrum(t)?;
        tr.inverse_in_place(&mut spec);
        let re: Vec<f64> = spec.iter().map(|v| v.re).collect();
        series.push(NormSample::of_field(t, &re, &config.grid, &config.qs)?)?;
    }
    Ok(series)
}

/// Gauss–Legendre nodes and weights on `[-1, 1]`.
pub fn gauss_legendre(order: usize) -> (Vec<f64>, Vec<f64>) {
    let mut nodes = vec![0.0; order];
    let mut weights = vec![0.0; order];
    let nf = order as f64;
    for i in 0..order.div_ceil(2) {
        let mut x = (std::f64::consts::PI * (i as f64 + 0.75) / (nf + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            let (mut p0, mut p1) = (1.0, x);
            for k in 2..=order {
                let kf = k as f64;
                let p2 = ((2.0 * kf - 1.0) * x * p1 - (kf - 1.0) * p0) / kf;
                p0 = p1;
                p1 = p2;
            }
            dp = nf * (x * p1 - p0) / (x * x - 1.0);
            let dx = p1 / dp;
            x -= dx;
            if dx.abs() < 1e-16 {
                break;
            }
        }
        nodes[i] = -x;
        nodes[order - 1 - i] = x;
        let w = 2.0 / ((1.0 - x * x) * dp * dp);
        weights[i] = w;
        weights[order - 1 - i] = w;
    }
    (nodes, weights)
}

/// Duhamel iteration `u^{k+1}(t) = u⁰(t) + ∫₀ᵗ K(t,s) ∗ f(u^k(s)) ds`, with the
/// kernel applied as the multiplier `m₁(t,s,ξ)` and the time integral by
/// composite Gauss–Legendre quadrature. Only the physical-time frame is
/// supported; meant for short horizons and small grids.
pub struct PicardIteration {
    config: NonlinearRunConfig,
    tr: Transform,
    mask: Vec<f64>,
    linear: VelocityDataEvolution,
    shells_xi: Vec<f64>,
    shell_of: Vec<usize>,
    panels: usize,
    order: usize,
}

impl PicardIteration {
    pub fn new(config: &NonlinearRunConfig, panels: usize, order: usize) -> Result<Self> {
        config.validate()?;
        if config.frame != Frame::Physical {
            return Err(Error::config("Picard validation runs in the physical time frame"));
        }
        let st = initial_state(config)?;
        let grid = config.grid;
        let keys = grid.squared_index();
        let mut distinct = keys.clone();
        distinct.sort_unstable();
        distinct.dedup();
        let shell_of = keys.iter().map(|k| distinct.binary_search(k).unwrap_or(0)).collect();
        let shells_xi = distinct.iter().map(|&k| grid.dk() * (k as f64).sqrt()).collect();
        Ok(Self {
            config: config.clone(),
            tr: Transform::new(grid)?,
            mask: dealias_mask(&grid),
            linear: VelocityDataEvolution::new(&st, &config.params)?,
            shells_xi,
            shell_of,
            panels: panels.max(1),
            order: order.max(2),
        })
    }

    fn nodes(&self, t: f64) -> Vec<(f64, f64)> {
        let (x, w) = gauss_legendre(self.order);
        let h = t / self.panels as f64;
        (0..self.panels)
            .flat_map(|k| {
                let a = k as f64 * h;
                x.iter().zip(&w).map(move |(xi, wi)| (a + 0.5 * h * (xi + 1.0), 0.5 * h * wi)).collect::<Vec<_>>()
            })
            .collect()
    }

    /// Spectrum of the `k`-th iterate at time `t`; iterate 0 is the linear
    /// solution.
    pub fn iterate(&self, k: usize, t: f64) -> Result<Vec<Complex64>> {
        let mut out = self.linear.displacement_spectrum(t)?;
        if k == 0 || t == 0.0 {
            return Ok(out);
        }
        let p = self.config.params;
        let mut work = Vec::new();
        for (s, w) in self.nodes(t) {
            let prev = self.iterate(k - 1, s)?;
            nonlinearity(&self.tr, &self.mask, &prev, p.p, self.config.nonlinearity, &mut work);
            let m1: Vec<f64> = self
                .shells_xi
                .par_iter()
                .map(|&xi| multiplier_m1(&PhasePoint::new(t, s, xi, p.ell)?, p.beta))
                .collect::<Result<_>>()?;
            out.iter_mut().enumerate().for_each(|(i, o)| *o += work[i] * (w * m1[self.shell_of[i]]));
        }
        Ok(out)
    }

    /// Physical field of the `k`-th iterate at `t`.
    pub fn field(&self, k: usize, t: f64) -> Result<Vec<f64>> {
        Ok(self.tr.inverse_real(&self.iterate(k, t)?).0)
    }
}
