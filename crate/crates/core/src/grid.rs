//! Periodic grids in one and two dimensions, their FFTs, and discrete norms.
//!
//! Spectral coefficients are scaled like the continuous Fourier transform,
//! `û(ξ) ≈ Σ u(x) e^{−iξ(x − x₀)} Δxⁿ`, with `x₀ = −L/2` the first grid point.

use std::f64::consts::PI;
use std::sync::Arc;

use num_complex::Complex64;
use rayon::prelude::*;
use rustfft::{Fft, FftPlanner};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GridSpec {
    pub n: u32,
    pub points_per_axis: usize,
    pub half_length: f64,
}

impl GridSpec {
    pub fn new(n: u32, points_per_axis: usize, half_length: f64) -> Result<Self> {
        let g = Self { n, points_per_axis, half_length };
        g.validate()?;
        Ok(g)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.n == 1 || self.n == 2) {
            return Err(Error::config(format!("only dimensions 1 and 2 are supported, got {}", self.n)));
        }
        if !self.points_per_axis.is_power_of_two() || self.points_per_axis < 8 {
            return Err(Error::config(format!(
                "points per axis must be a power of two ≥ 8, got {}",
                self.points_per_axis
            )));
        }
        if !(self.half_length > 0.0 && self.half_length.is_finite()) {
            return Err(Error::config(format!("half length must be positive, got {}", self.half_length)));
        }
        Ok(())
    }

    pub fn dx(&self) -> f64 {
        2.0 * self.half_length / self.points_per_axis as f64
    }

    /// `Δxⁿ`.
    pub fn cell_volume(&self) -> f64 {
        self.dx().powi(self.n as i32)
    }

    pub fn len(&self) -> usize {
        self.points_per_axis.pow(self.n)
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    /// Fundamental wavenumber `2π/L`.
    pub fn dk(&self) -> f64 {
        PI / self.half_length
    }

    /// Physical coordinate of index `i` along an axis.
    pub fn coordinate(&self, i: usize) -> f64 {
        -self.half_length + i as f64 * self.dx()
    }

    /// Signed integer wavenumber of FFT index `i` along an axis.
    pub fn wave_index(&self, i: usize) -> i64 {
        let n = self.points_per_axis;
        if i < n / 2 { i as i64 } else { i as i64 - n as i64 }
    }

    /// `|ξ|²/dk²` for each flattened index; an exact integer.
    pub fn squared_index(&self) -> Vec<u64> {
        let n = self.points_per_axis;
        match self.n {
            1 => (0..n).map(|i| self.wave_index(i).pow(2) as u64).collect(),
            _ => (0..n * n)
                .map(|idx| {
                    let (r, c) = (idx / n, idx % n);
                    (self.wave_index(r).pow(2) + self.wave_index(c).pow(2)) as u64
                })
                .collect(),
        }
    }

    /// Index of the mode `−k` for flattened index `idx`.
    pub fn mirror(&self, idx: usize) -> usize {
        let n = self.points_per_axis;
        let m = |i: usize| (n - i) % n;
        match self.n {
            1 => m(idx),
            _ => m(idx / n) * n + m(idx % n),
        }
    }

    /// Distance a front travels by time `horizon`: `((1+T)^{1−ℓ} − 1)/(1−ℓ)`.
    pub fn propagation_radius(horizon: f64, ell: f64) -> f64 {
        ((1.0 + horizon).powf(1.0 - ell) - 1.0) / (1.0 - ell)
    }

    /// Fails unless the box contains the data support plus everything the
    /// front can reach before `horizon`.
    pub fn check_horizon(&self, horizon: f64, ell: f64, support_radius: f64) -> Result<()> {
        self.check_reach(0.0, horizon, ell, support_radius)
    }

    /// As [`Self::check_horizon`] for data given at time `s` and carried to `t`.
    /// Data that already reaches the box edge is periodic to begin with and
    /// passes.
    pub fn check_reach(&self, s: f64, t: f64, ell: f64, support_radius: f64) -> Result<()> {
        if support_radius >= self.half_length - self.dx() {
            return Ok(());
        }
        let travel = Self::propagation_radius(t, ell) - Self::propagation_radius(s, ell);
        let reach = travel + support_radius;
        if !(self.half_length > reach) {
            return Err(Error::config(format!(
                "half length {} does not exceed the causal reach {reach} from t = {s} to {t}",
                self.half_length
            )));
        }
        Ok(())
    }

    /// Largest `|x|` at which `|field|` exceeds `rel` times its maximum.
    pub fn support_radius(&self, field: &[f64], rel: f64) -> f64 {
        let peak = field.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        let n = self.points_per_axis;
        let radius = |idx: usize| match self.n {
            1 => self.coordinate(idx).abs(),
            _ => self.coordinate(idx / n).hypot(self.coordinate(idx % n)),
        };
        field
            .iter()
            .enumerate()
            .filter(|(_, v)| v.abs() > rel * peak)
            .map(|(i, _)| radius(i))
            .fold(0.0, f64::max)
    }

    /// Samples `f(r)` at every grid point, `r = |x|`.
    pub fn sample_radial(&self, f: impl Fn(f64) -> f64 + Sync) -> Vec<f64> {
        let n = self.points_per_axis;
        match self.n {
            1 => (0..n).map(|i| f(self.coordinate(i).abs())).collect(),
            _ => (0..n * n)
                .into_par_iter()
                .map(|idx| f(self.coordinate(idx / n).hypot(self.coordinate(idx % n))))
                .collect(),
        }
    }

    /// Samples `f(x)` for `n = 1` or `f(x, y)` for `n = 2` (the second
    /// argument is 0 in one dimension).
    pub fn sample(&self, f: impl Fn(f64, f64) -> f64 + Sync) -> Vec<f64> {
        let n = self.points_per_axis;
        match self.n {
            1 => (0..n).map(|i| f(self.coordinate(i), 0.0)).collect(),
            _ => (0..n * n).into_par_iter().map(|idx| f(self.coordinate(idx / n), self.coordinate(idx % n))).collect(),
        }
    }
}

/// Smallest slice length worth splitting across threads for elementwise passes.
pub(crate) const PAR_CHUNK: usize = 1 << 15;

/// Forward and inverse transforms on one grid.
#[derive(Clone)]
pub struct Transform {
    grid: GridSpec,
    forward: Arc<dyn Fft<f64>>,
    inverse: Arc<dyn Fft<f64>>,
}

impl std::fmt::Debug for Transform {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("Transform").field("grid", &self.grid).finish()
    }
}

impl Transform {
    pub fn new(grid: GridSpec) -> Result<Self> {
        grid.validate()?;
        let mut planner = FftPlanner::new();
        let forward = planner.plan_fft_forward(grid.points_per_axis);
        let inverse = planner.plan_fft_inverse(grid.points_per_axis);
        Ok(Self { grid, forward, inverse })
    }

    pub fn grid(&self) -> &GridSpec {
        &self.grid
    }

    fn apply(&self, data: &mut [Complex64], fft: &Arc<dyn Fft<f64>>) {
        let n = self.grid.points_per_axis;
        match self.grid.n {
            1 => fft.process(data),
            _ => {
                data.par_chunks_mut(n).for_each(|row| fft.process(row));
                transpose(data, n);
                data.par_chunks_mut(n).for_each(|row| fft.process(row));
                transpose(data, n);
            }
        }
    }

    /// Physical real field to spectral coefficients.
    pub fn forward_real(&self, field: &[f64]) -> Vec<Complex64> {
        let mut data: Vec<Complex64> = field.iter().map(|&v| Complex64::new(v, 0.0)).collect();
        self.forward_in_place(&mut data);
        data
    }

    pub fn forward_in_place(&self, data: &mut [Complex64]) {
        self.forward_unscaled(data);
        let scale = self.forward_scale();
        data.par_iter_mut().with_min_len(PAR_CHUNK).for_each(|v| *v *= scale);
    }

    /// Bare forward DFT; multiply by [`Self::forward_scale`] afterwards.
    pub(crate) fn forward_unscaled(&self, data: &mut [Complex64]) {
        self.apply(data, &self.forward);
    }

    pub(crate) fn forward_scale(&self) -> f64 {
        self.grid.cell_volume()
    }

    /// Bare inverse DFT; multiply by [`Self::inverse_scale`] before or after.
    pub(crate) fn inverse_unscaled(&self, data: &mut [Complex64]) {
        self.apply(data, &self.inverse);
    }

    pub(crate) fn inverse_scale(&self) -> f64 {
        1.0 / (self.grid.cell_volume() * self.grid.len() as f64)
    }

    /// Spectral coefficients to the (complex) physical field.
    pub fn inverse(&self, spectrum: &[Complex64]) -> Vec<Complex64> {
        let mut data = spectrum.to_vec();
        self.inverse_in_place(&mut data);
        data
    }

    pub fn inverse_in_place(&self, data: &mut [Complex64]) {
        self.inverse_unscaled(data);
        let scale = self.inverse_scale();
        data.par_iter_mut().with_min_len(PAR_CHUNK).for_each(|v| *v *= scale);
    }

    /// Real part of the inverse transform, and the largest imaginary
    /// residue relative to the largest real value.
    pub fn inverse_real(&self, spectrum: &[Complex64]) -> (Vec<f64>, f64) {
        let data = self.inverse(spectrum);
        let re_max = data.iter().fold(0.0f64, |m, v| m.max(v.re.abs()));
        let im_max = data.iter().fold(0.0f64, |m, v| m.max(v.im.abs()));
        let residue = if re_max > 0.0 { im_max / re_max } else { im_max };
        (data.into_iter().map(|v| v.re).collect(), residue)
    }
}

fn transpose(data: &mut [Complex64], n: usize) {
    for r in 0..n {
        for c in r + 1..n {
            data.swap(r * n + c, c * n + r);
        }
    }
}

/// Largest `|û(k) − conj(û(−k))|` relative to the largest coefficient.
pub fn hermitian_defect(grid: &GridSpec, spectrum: &[Complex64]) -> f64 {
    let scale = spectrum.iter().fold(0.0f64, |m, v| m.max(v.norm()));
    if scale == 0.0 {
        return 0.0;
    }
    let worst = (0..spectrum.len())
        .map(|i| (spectrum[i] - spectrum[grid.mirror(i)].conj()).norm())
        .fold(0.0f64, f64::max);
    worst / scale
}

const PAIRWISE_BLOCK: usize = 256;

/// Sum with a fixed pairwise tree; the result does not depend on the thread
/// schedule.
pub fn pairwise_sum(v: &[f64]) -> f64 {
    if v.len() <= PAIRWISE_BLOCK {
        return v.iter().sum();
    }
    let (a, b) = v.split_at(v.len() / 2);
    if v.len() >= 1 << 16 {
        let (x, y) = rayon::join(|| pairwise_sum(a), || pairwise_sum(b));
        x + y
    } else {
        pairwise_sum(a) + pairwise_sum(b)
    }
}

/// `(Σ |u|^q Δxⁿ)^{1/q}`, or `max |u|` for `q = ∞`.
pub fn lq_norm(field: &[f64], q: f64, cell_volume: f64) -> Result<f64> {
    if !(q >= 1.0) {
        return Err(Error::domain(format!("L^q norms need q ≥ 1, got {q}")));
    }
    if q == f64::INFINITY {
        return Ok(field.iter().fold(0.0f64, |m, v| m.max(v.abs())));
    }
    let powered: Vec<f64> = if q == 2.0 {
        field.iter().map(|v| v * v).collect()
    } else {
        field.iter().map(|v| v.abs().powf(q)).collect()
    };
    Ok((pairwise_sum(&powered) * cell_volume).powf(1.0 / q))
}
