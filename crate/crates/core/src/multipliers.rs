//! Fourier multipliers of the linear problem
//! `u_tt − (1+t)^{−2ℓ}Δu + β/(1+t) u_t = 0`.
//!
//! For a mode of frequency `ξ` the solution started at time `s` is
//! `û(t) = m₀(t,s,ξ) û(s) + m₁(t,s,ξ) û_t(s)`. With `z = (1+t)^{1−ℓ}|ξ|/(1−ℓ)`
//! and `ρ = (1−β)/(2(1−ℓ))` the multipliers are Hankel determinants
//!
//! ```text
//! ψ_{j,γ,δ}(t,s,ξ) = |ξ|^j (H⁻_γ(z_s) H⁺_{γ+δ}(z_t) − H⁺_γ(z_s) H⁻_{γ+δ}(z_t))
//! ∂_t^j m_k = ((−1)^k πi / (4(1−ℓ))) (1+s)^{(1+β)/2} (1+t)^{(1−β)/2 − jℓ} ψ_{1+j−k, ρ+k−1, 1−j−k}
//! ```
//!
//! The `m₀` expression equals `(1+s)^ℓ` at `t = s` rather than 1; it is
//! returned as written and alongside a normalized copy (see
//! [`MultiplierEval::m0_normalized`]).

use std::f64::consts::PI;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::ode::{integrate, Control, OdeSystem, Termination, Tolerances};
use crate::special_functions::{bessel_jy, cos_pi, hankel, sin_pi, HankelKind};

/// Below this Bessel argument, or this gap `z_t − z_s`, the closed form is
/// replaced by integrating the mode ODE.
pub const FALLBACK_THRESHOLD: f64 = 1e-3;

/// Orders closer than this to an integer use the `J/Y` form of `ψ`.
const NEAR_INTEGER: f64 = 1e-2;

/// Arguments below this count as small when picking the `ψ` form.
const SMALL_ARGUMENT: f64 = 2.0;

const ORACLE_TOL: Tolerances = Tolerances { rtol: 1e-12, atol: 1e-15, h_max: None, max_steps: 50_000_000 };

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PhasePoint {
    pub t: f64,
    pub s: f64,
    pub xi: f64,
    pub ell: f64,
}

impl PhasePoint {
    pub fn new(t: f64, s: f64, xi: f64, ell: f64) -> Result<Self> {
        let p = Self { t, s, xi, ell };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.s >= 0.0 && self.t >= self.s && self.t.is_finite()) {
            return Err(Error::domain(format!("need t ≥ s ≥ 0, got t = {}, s = {}", self.t, self.s)));
        }
        if !(self.xi >= 0.0 && self.xi.is_finite()) {
            return Err(Error::domain(format!("frequency magnitude must be ≥ 0, got {}", self.xi)));
        }
        if !(self.ell >= 0.0 && self.ell < 1.0) {
            return Err(Error::domain(format!("ℓ must lie in [0, 1), got {}", self.ell)));
        }
        Ok(())
    }

    /// Bessel argument at the initial time.
    pub fn z_s(&self) -> f64 {
        (1.0 + self.s).powf(1.0 - self.ell) * self.xi / (1.0 - self.ell)
    }

    /// Bessel argument at the current time.
    pub fn z_t(&self) -> f64 {
        (1.0 + self.t).powf(1.0 - self.ell) * self.xi / (1.0 - self.ell)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Zone {
    Z1,
    Z2,
    Z3,
}

impl Zone {
    pub const ALL: [Zone; 3] = [Zone::Z1, Zone::Z2, Zone::Z3];

    pub fn as_str(self) -> &'static str {
        match self {
            Zone::Z1 => "Z1",
            Zone::Z2 => "Z2",
            Zone::Z3 => "Z3",
        }
    }
}

impl std::fmt::Display for Zone {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

/// How a [`MultiplierEval`] was obtained.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EvalPath {
    ClosedForm,
    ModeOde,
    ZeroFrequency,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MultiplierEval {
    /// `m₀` as given by the determinant formula.
    pub m0: Complex64,
    pub m1: Complex64,
    pub dt_m0: Complex64,
    pub dt_m1: Complex64,
    pub zone: Zone,
    pub path: EvalPath,
    /// `(1+s)^ℓ`, the value of the formula's `m₀` at `t = s`.
    pub m0_scale: f64,
}

impl MultiplierEval {
    /// `m₀` rescaled so that `m₀(s,s,ξ) = 1`.
    pub fn m0_normalized(&self) -> Complex64 {
        self.m0 / self.m0_scale
    }

    pub fn dt_m0_normalized(&self) -> Complex64 {
        self.dt_m0 / self.m0_scale
    }
}

fn nonzero_frequency(point: &PhasePoint) -> Result<()> {
    point.validate()?;
    if point.xi == 0.0 {
        return Err(Error::Singularity("ψ is singular at zero frequency".into()));
    }
    Ok(())
}

/// `ψ_{j,γ,δ}` from the Hankel-function definition.
pub fn psi(j: f64, gamma: f64, delta: f64, point: &PhasePoint) -> Result<Complex64> {
    nonzero_frequency(point)?;
    let (a, b) = (point.z_s(), point.z_t());
    let det = hankel(HankelKind::Minus, gamma, a)? * hankel(HankelKind::Plus, gamma + delta, b)?
        - hankel(HankelKind::Plus, gamma, a)? * hankel(HankelKind::Minus, gamma + delta, b)?;
    Ok(det * point.xi.powf(j))
}

/// `ψ_{j,γ,δ} = 2i|ξ|^j (J_γ(z_s) Y_{γ+δ}(z_t) − Y_γ(z_s) J_{γ+δ}(z_t))`.
pub fn psi_bessel_form(j: f64, gamma: f64, delta: f64, point: &PhasePoint) -> Result<Complex64> {
    nonzero_frequency(point)?;
    Ok(Complex64::new(0.0, 2.0 * point.xi.powf(j) * jy_determinant(gamma, delta, point.z_s(), point.z_t())?))
}

/// `ψ_{j,γ,δ} = 2i csc(γπ) |ξ|^j (J_{−γ}(z_s) J_{γ+δ}(z_t) − (−1)^δ J_γ(z_s) J_{−γ−δ}(z_t))`
/// for non-integer `γ` and integer `δ`.
pub fn psi_fractional_form(j: f64, gamma: f64, delta: f64, point: &PhasePoint) -> Result<Complex64> {
    nonzero_frequency(point)?;
    if gamma == gamma.round() {
        return Err(Error::domain(format!("the fractional form needs a non-integer order, got {gamma}")));
    }
    if delta != delta.round() {
        return Err(Error::domain(format!("the fractional form needs an integer shift, got {delta}")));
    }
    Ok(Complex64::new(0.0, 2.0 * point.xi.powf(j) * fractional_determinant(gamma, delta, point.z_s(), point.z_t())?))
}

fn jy_determinant(gamma: f64, delta: f64, a: f64, b: f64) -> Result<f64> {
    // Negative orders come from rotating (J_ν, Y_ν), and the rotated Y·Y
    // products cancel in the determinant. The rotation has determinant one,
    // so for integer δ the determinant equals (−1)^δ times the one at the
    // reflected orders; use whichever pair is less negative.
    let negativity = |g: f64, h: f64| (-g).max(-h).max(0.0);
    if delta == delta.round() && negativity(-gamma, -gamma - delta) < negativity(gamma, gamma + delta) {
        return Ok(cos_pi(delta) * jy_determinant_direct(-gamma, -delta, a, b)?);
    }
    jy_determinant_direct(gamma, delta, a, b)
}

fn jy_determinant_direct(gamma: f64, delta: f64, a: f64, b: f64) -> Result<f64> {
    let (ja, ya) = bessel_jy(gamma, a)?;
    let (jb, yb) = bessel_jy(gamma + delta, b)?;
    Ok(ja * yb - ya * jb)
}

fn fractional_determinant(gamma: f64, delta: f64, a: f64, b: f64) -> Result<f64> {
    let jm_a = bessel_jy(-gamma, a)?.0;
    let jp_a = bessel_jy(gamma, a)?.0;
    let jp_b = bessel_jy(gamma + delta, b)?.0;
    let jm_b = bessel_jy(-gamma - delta, b)?.0;
    let sign = cos_pi(delta);
    Ok((jm_a * jp_b - sign * jp_a * jm_b) / sin_pi(gamma))
}

/// `Im ψ_{j,γ,δ} / (2|ξ|^j)` in the numerically preferable form: the
/// fractional form when both arguments are small and `γ` is clearly
/// non-integer (the `J/Y` form cancels there like `z^{2|γ|}`), and the
/// `J/Y` form otherwise.
fn stable_determinant(gamma: f64, delta: f64, a: f64, b: f64) -> Result<f64> {
    let dist = (gamma - gamma.round()).abs();
    if b < SMALL_ARGUMENT && dist >= NEAR_INTEGER {
        fractional_determinant(gamma, delta, a, b)
    } else {
        jy_determinant(gamma, delta, a, b)
    }
}

fn check_beta(beta: f64) -> Result<()> {
    if !(beta > 1.0 && beta.is_finite()) {
        return Err(Error::regime(format!("the multiplier formulas are used for β > 1, got {beta}")));
    }
    Ok(())
}

/// `ρ = (1−β)/(2(1−ℓ))`.
pub fn rho(ell: f64, beta: f64) -> f64 {
    (1.0 - beta) / (2.0 * (1.0 - ell))
}

/// Evaluates the four multipliers, falling back to the mode ODE near
/// `z_s = 0` and near `t = s` where the determinant loses accuracy, and to
/// the closed form at `ξ = 0`.
pub fn multiplier_eval(point: &PhasePoint, beta: f64) -> Result<MultiplierEval> {
    point.validate()?;
    check_beta(beta)?;
    if point.xi == 0.0 {
        return Ok(zero_frequency_eval(point, beta));
    }
    let (a, b) = (point.z_s(), point.z_t());
    if a < FALLBACK_THRESHOLD || b - a < FALLBACK_THRESHOLD {
        return mode_ode_eval(point, beta);
    }
    multiplier_eval_closed_form(point, beta)
}

/// The determinant formulas without any fallback.
pub fn multiplier_eval_closed_form(point: &PhasePoint, beta: f64) -> Result<MultiplierEval> {
    nonzero_frequency(point)?;
    check_beta(beta)?;
    let PhasePoint { t, s, xi, ell } = *point;
    let r = rho(ell, beta);
    let (a, b) = (point.z_s(), point.z_t());
    let base = PI / (4.0 * (1.0 - ell)) * (1.0 + s).powf(0.5 * (1.0 + beta)) * (1.0 + t).powf(0.5 * (1.0 - beta));
    let lag = (1.0 + t).powf(-ell);
    // The i in the prefactor times the 2i|ξ|^j of ψ leaves a real value.
    let assemble = |k: i32, j: i32, det: f64| {
        let sign = if k == 0 { 1.0 } else { -1.0 };
        let jf = f64::from(1 + j - k);
        let val = sign * base * lag.powi(j) * (-2.0) * xi.powf(jf) * det;
        Complex64::new(val, 0.0)
    };
    let m1 = assemble(1, 0, stable_determinant(r, 0.0, a, b)?);
    let dt_m1 = assemble(1, 1, stable_determinant(r, -1.0, a, b)?);
    let m0 = assemble(0, 0, stable_determinant(r - 1.0, 1.0, a, b)?);
    let dt_m0 = assemble(0, 1, stable_determinant(r - 1.0, 0.0, a, b)?);
    Ok(MultiplierEval {
        m0,
        m1,
        dt_m0,
        dt_m1,
        zone: zone_classify(point),
        path: EvalPath::ClosedForm,
        m0_scale: (1.0 + s).powf(ell),
    })
}

/// `m₁` alone, the only multiplier needed for data `(0, g)`.
pub fn multiplier_m1(point: &PhasePoint, beta: f64) -> Result<f64> {
    point.validate()?;
    check_beta(beta)?;
    if point.xi == 0.0 {
        return zero_frequency_m1(point.t, point.s, beta);
    }
    let (a, b) = (point.z_s(), point.z_t());
    if a < FALLBACK_THRESHOLD || b - a < FALLBACK_THRESHOLD {
        return Ok(mode_ode(point, beta, &ORACLE_TOL)?.m1);
    }
    let PhasePoint { t, s, xi: _, ell } = *point;
    let base = PI / (4.0 * (1.0 - ell)) * (1.0 + s).powf(0.5 * (1.0 + beta)) * (1.0 + t).powf(0.5 * (1.0 - beta));
    Ok(2.0 * base * stable_determinant(rho(ell, beta), 0.0, a, b)?)
}

/// `m₁` at `ξ = 0`: `∫ₛᵗ ((1+s)/(1+r))^β dr`.
pub fn zero_frequency_m1(t: f64, s: f64, beta: f64) -> Result<f64> {
    if !(s >= 0.0 && t >= s) {
        return Err(Error::domain(format!("need t ≥ s ≥ 0, got t = {t}, s = {s}")));
    }
    let ratio = (1.0 + s) / (1.0 + t);
    if beta == 1.0 {
        return Ok((1.0 + s) * ((1.0 + t) / (1.0 + s)).ln());
    }
    let e = beta - 1.0;
    // (1 − ratio^e)/e without cancellation for small e.
    Ok((1.0 + s) * -(e * ratio.ln()).exp_m1() / e)
}

fn zero_frequency_eval(point: &PhasePoint, beta: f64) -> MultiplierEval {
    let PhasePoint { t, s, ell, .. } = *point;
    let scale = (1.0 + s).powf(ell);
    let m1 = zero_frequency_m1(t, s, beta).unwrap_or(f64::NAN);
    let dt_m1 = ((1.0 + s) / (1.0 + t)).powf(beta);
    MultiplierEval {
        m0: Complex64::new(scale, 0.0),
        m1: Complex64::new(m1, 0.0),
        dt_m0: Complex64::new(0.0, 0.0),
        dt_m1: Complex64::new(dt_m1, 0.0),
        zone: Zone::Z3,
        path: EvalPath::ZeroFrequency,
        m0_scale: scale,
    }
}

/// Fundamental solutions of one Fourier mode, normalized at `t = s`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ModeSolution {
    /// Solution with `û(s) = 1`, `û′(s) = 0`.
    pub m0: f64,
    pub dt_m0: f64,
    /// Solution with `û(s) = 0`, `û′(s) = 1`.
    pub m1: f64,
    pub dt_m1: f64,
}

/// `û″ + β/(1+t) û′ + (1+t)^{−2ℓ} ξ² û = 0` for both fundamental solutions.
struct ModeSystem {
    xi2: f64,
    ell: f64,
    beta: f64,
}

impl OdeSystem for ModeSystem {
    type Scalar = f64;
    fn rhs(&mut self, t: f64, y: &[f64], dy: &mut [f64]) {
        let c2 = (1.0 + t).powf(-2.0 * self.ell) * self.xi2;
        let damp = self.beta / (1.0 + t);
        for k in 0..2 {
            let (u, v) = (y[2 * k], y[2 * k + 1]);
            dy[2 * k] = v;
            dy[2 * k + 1] = -c2 * u - damp * v;
        }
    }
}

/// Integrates the mode equation from `s` to `t`.
pub fn mode_ode(point: &PhasePoint, beta: f64, tol: &Tolerances) -> Result<ModeSolution> {
    point.validate()?;
    let mut sys = ModeSystem { xi2: point.xi * point.xi, ell: point.ell, beta };
    let mut y = vec![1.0, 0.0, 0.0, 1.0];
    if point.t > point.s {
        let (term, _) = integrate(&mut sys, point.s, &mut y, &[point.t], tol, |_, _| Control::Continue)?;
        if let Termination::Failed { t, reason } = term {
            return Err(Error::Integrator { t, reason });
        }
    }
    Ok(ModeSolution { m0: y[0], dt_m0: y[1], m1: y[2], dt_m1: y[3] })
}

fn mode_ode_eval(point: &PhasePoint, beta: f64) -> Result<MultiplierEval> {
    let sol = mode_ode(point, beta, &ORACLE_TOL)?;
    let scale = (1.0 + point.s).powf(point.ell);
    Ok(MultiplierEval {
        m0: Complex64::new(sol.m0 * scale, 0.0),
        m1: Complex64::new(sol.m1, 0.0),
        dt_m0: Complex64::new(sol.dt_m0 * scale, 0.0),
        dt_m1: Complex64::new(sol.dt_m1, 0.0),
        zone: zone_classify(point),
        path: EvalPath::ModeOde,
        m0_scale: scale,
    })
}

/// High (`Z1`), intermediate (`Z2`) and low (`Z3`) frequency zones.
pub fn zone_classify(point: &PhasePoint) -> Zone {
    let PhasePoint { t, s, xi, ell } = *point;
    if xi >= (1.0 + s).powf(ell - 1.0) {
        Zone::Z1
    } else if xi <= (1.0 + t).powf(ell - 1.0) {
        Zone::Z3
    } else {
        Zone::Z2
    }
}

fn glue(x: f64) -> f64 {
    if x > 0.0 { (-1.0 / x).exp() } else { 0.0 }
}

/// Smooth cutoff equal to 1 on `r ≤ 1/2` and 0 on `r ≥ 1`.
pub fn smooth_cutoff(r: f64) -> f64 {
    if r <= 0.5 {
        return 1.0;
    }
    if r >= 1.0 {
        return 0.0;
    }
    let u = 2.0 * r - 1.0;
    let (g0, g1) = (glue(1.0 - u), glue(u));
    g0 / (g0 + g1)
}

/// `(χ₁, χ₂, χ₃)` with `χ₁ = 1 − χ(a)`, `χ₂ = χ(a)(1 − χ(b))`, `χ₃ = χ(a)χ(b)`,
/// `a = (1+s)^{1−ℓ}|ξ|`, `b = (1+t)^{1−ℓ}|ξ|`.
pub fn cutoffs(point: &PhasePoint) -> (f64, f64, f64) {
    let PhasePoint { t, s, xi, ell } = *point;
    let ca = smooth_cutoff((1.0 + s).powf(1.0 - ell) * xi);
    let cb = smooth_cutoff((1.0 + t).powf(1.0 - ell) * xi);
    let chi3 = ca * cb;
    (1.0 - ca, ca - chi3, chi3)
}

/// `|ξ|^k |ψ_{0,γ,0}|` divided by the zone-wise bound
///
/// * `Z1`: `|ξ|^{k−1} (1+s)^{(ℓ−1)/2} (1+t)^{(ℓ−1)/2}`
/// * `Z2`: `|ξ|^{k−|γ|−1/2} (1+s)^{(ℓ−1)|γ|} (1+t)^{(ℓ−1)/2}`
/// * `Z3`: `|ξ|^k (1+s)^{(ℓ−1)|γ|} (1+t)^{(1−ℓ)|γ|}`
pub fn lemma1_margin(k: f64, gamma: f64, point: &PhasePoint) -> Result<(f64, Zone)> {
    nonzero_frequency(point)?;
    if gamma == 0.0 {
        return Err(Error::domain("the zone bounds need a nonzero order"));
    }
    if !(k >= 0.0) {
        return Err(Error::domain(format!("k must be ≥ 0, got {k}")));
    }
    let PhasePoint { t, s, xi, ell } = *point;
    let zone = zone_classify(point);
    let g = gamma.abs();
    // |ξ|^k cancels against every bound, so it is left out of both sides.
    let bound = match zone {
        Zone::Z1 => xi.recip() * ((1.0 + s) * (1.0 + t)).powf(0.5 * (ell - 1.0)),
        Zone::Z2 => xi.powf(-g - 0.5) * (1.0 + s).powf((ell - 1.0) * g) * (1.0 + t).powf(0.5 * (ell - 1.0)),
        Zone::Z3 => ((1.0 + t) / (1.0 + s)).powf((1.0 - ell) * g),
    };
    let psi = 2.0 * stable_determinant(gamma, 0.0, point.z_s(), point.z_t())?.abs();
    Ok((psi / bound, zone))
}
