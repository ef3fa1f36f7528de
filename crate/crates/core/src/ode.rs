//! Adaptive Dormand–Prince 5(4) integrator for first-order systems
//! `y' = F(t, y)` over real or complex state vectors.

use std::ops::{Add, Mul, Sub};

use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Element type of a state vector.
pub trait OdeScalar:
    Copy + Default + Send + Sync + Add<Output = Self> + Sub<Output = Self> + Mul<f64, Output = Self>
{
    fn modulus(self) -> f64;
    fn is_finite_value(self) -> bool;
}

impl OdeScalar for f64 {
    fn modulus(self) -> f64 {
        self.abs()
    }
    fn is_finite_value(self) -> bool {
        self.is_finite()
    }
}

impl OdeScalar for Complex64 {
    fn modulus(self) -> f64 {
        // `norm` goes through `hypot`, several times slower; states never
        // come near overflow because blow-up is caught long before.
        self.norm_sqr().sqrt()
    }
    fn is_finite_value(self) -> bool {
        self.re.is_finite() && self.im.is_finite()
    }
}

pub trait OdeSystem {
    type Scalar: OdeScalar;
    fn rhs(&mut self, t: f64, y: &[Self::Scalar], dy: &mut [Self::Scalar]);
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct Tolerances {
    pub rtol: f64,
    pub atol: f64,
    /// Largest allowed step; `None` means unbounded.
    pub h_max: Option<f64>,
    pub max_steps: u64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Self { rtol: 1e-8, atol: 1e-12, h_max: None, max_steps: 10_000_000 }
    }
}

impl Tolerances {
    pub fn new(rtol: f64, atol: f64) -> Self {
        Self { rtol, atol, ..Self::default() }
    }

    fn validate(&self) -> Result<()> {
        if !(self.rtol > 0.0 && self.atol >= 0.0) {
            return Err(Error::config(format!(
                "tolerances must satisfy rtol > 0, atol ≥ 0 (got {}, {})",
                self.rtol, self.atol
            )));
        }
        Ok(())
    }
}

/// What the observer wants after seeing an output sample.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Control {
    Continue,
    Stop,
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct StepStats {
    pub accepted: u64,
    pub rejected: u64,
    pub rhs_evals: u64,
}

#[derive(Debug, Clone, PartialEq)]
pub enum Termination {
    /// All output times were reached.
    Completed,
    /// The observer asked to stop at this time.
    Stopped(f64),
    /// The state stopped being finite or the step size underflowed.
    Failed { t: f64, reason: String },
}

// Dormand–Prince coefficients.
const C2: f64 = 1.0 / 5.0;
const C3: f64 = 3.0 / 10.0;
const C4: f64 = 4.0 / 5.0;
const C5: f64 = 8.0 / 9.0;
const A21: f64 = 1.0 / 5.0;
const A31: f64 = 3.0 / 40.0;
const A32: f64 = 9.0 / 40.0;
const A41: f64 = 44.0 / 45.0;
const A42: f64 = -56.0 / 15.0;
const A43: f64 = 32.0 / 9.0;
const A51: f64 = 19372.0 / 6561.0;
const A52: f64 = -25360.0 / 2187.0;
const A53: f64 = 64448.0 / 6561.0;
const A54: f64 = -212.0 / 729.0;
const A61: f64 = 9017.0 / 3168.0;
const A62: f64 = -355.0 / 33.0;
const A63: f64 = 46732.0 / 5247.0;
const A64: f64 = 49.0 / 176.0;
const A65: f64 = -5103.0 / 18656.0;
const A71: f64 = 35.0 / 384.0;
const A73: f64 = 500.0 / 1113.0;
const A74: f64 = 125.0 / 192.0;
const A75: f64 = -2187.0 / 6784.0;
const A76: f64 = 11.0 / 84.0;
const E1: f64 = 71.0 / 57600.0;
const E3: f64 = -71.0 / 16695.0;
const E4: f64 = 71.0 / 1920.0;
const E5: f64 = -17253.0 / 339200.0;
const E6: f64 = 22.0 / 525.0;
const E7: f64 = -1.0 / 40.0;

const PAR_THRESHOLD: usize = 1 << 17;

/// `out = base + h Σ cⱼ kⱼ`, with `base = 0` when absent.
fn combine<T: OdeScalar>(out: &mut [T], base: Option<&[T]>, h: f64, terms: &[(f64, &[T])]) {
    // Cache-sized blocks, one axpy pass per term, so the inner loops vectorize.
    const BLOCK: usize = 1024;
    let block = |(b, o): (usize, &mut [T])| {
        let lo = b * BLOCK;
        let hi = lo + o.len();
        match base {
            Some(y) => o.copy_from_slice(&y[lo..hi]),
            None => o.fill(T::default()),
        }
        for &(c, k) in terms {
            let ch = c * h;
            for (x, &v) in o.iter_mut().zip(&k[lo..hi]) {
                *x = *x + v * ch;
            }
        }
    };
    if out.len() >= PAR_THRESHOLD {
        out.par_chunks_mut(BLOCK).enumerate().for_each(block);
    } else {
        out.chunks_mut(BLOCK).enumerate().for_each(block);
    }
}

fn error_norm<T: OdeScalar>(err: &[T], y: &[T], y_new: &[T], tol: &Tolerances) -> f64 {
    let term = |i: usize| {
        let sc = tol.atol + tol.rtol * y[i].modulus().max(y_new[i].modulus());
        let r = err[i].modulus() / sc;
        r * r
    };
    // Serial so that step acceptance does not depend on the thread count.
    let n = err.len();
    let sum: f64 = (0..n).map(term).sum();
    (sum / n.max(1) as f64).sqrt()
}

fn rms<T: OdeScalar>(v: &[T], y: &[T], tol: &Tolerances) -> f64 {
    let sum: f64 = v
        .iter()
        .zip(y)
        .map(|(a, b)| {
            let r = a.modulus() / (tol.atol + tol.rtol * b.modulus());
            r * r
        })
        .sum();
    (sum / v.len().max(1) as f64).sqrt()
}

/// Integrates from `t0` through each time in `outputs` (strictly increasing,
/// all greater than or equal to `t0`), calling `observer` with the state at
/// every output time. Steps are shortened so that they land exactly on the
/// output times. `y` holds the final state on return.
pub fn integrate<S, F>(
    sys: &mut S,
    t0: f64,
    y: &mut Vec<S::Scalar>,
    outputs: &[f64],
    tol: &Tolerances,
    mut observer: F,
) -> Result<(Termination, StepStats)>
where
    S: OdeSystem,
    F: FnMut(f64, &[S::Scalar]) -> Control,
{
    tol.validate()?;
    if outputs.windows(2).any(|w| !(w[1] > w[0])) || outputs.first().is_some_and(|&t| t < t0) {
        return Err(Error::config("output times must be increasing and not precede the start"));
    }
    let n = y.len();
    let zero = S::Scalar::default();
    let mut k1 = vec![zero; n];
    let mut k2 = vec![zero; n];
    let mut k3 = vec![zero; n];
    let mut k4 = vec![zero; n];
    let mut k5 = vec![zero; n];
    let mut k6 = vec![zero; n];
    let mut k7 = vec![zero; n];
    let mut ytmp = vec![zero; n];
    let mut ynew = vec![zero; n];
    let mut stats = StepStats::default();

    let mut t = t0;
    let mut out_idx = 0;
    while out_idx < outputs.len() && outputs[out_idx] == t0 {
        if observer(t0, y) == Control::Stop {
            return Ok((Termination::Stopped(t0), stats));
        }
        out_idx += 1;
    }
    if out_idx == outputs.len() {
        return Ok((Termination::Completed, stats));
    }

    sys.rhs(t, y, &mut k1);
    stats.rhs_evals += 1;
    let t_end = outputs[outputs.len() - 1];
    let h_max = tol.h_max.unwrap_or(f64::INFINITY).min(t_end - t0);

    // Initial step after Hairer–Nørsett–Wanner.
    let mut h = {
        let d0 = rms(y, y, tol);
        let d1 = rms(&k1, y, tol);
        let h0 = if d0 < 1e-5 || d1 < 1e-5 { 1e-6 } else { 0.01 * d0 / d1 };
        let h0 = h0.min(h_max);
        combine(&mut ytmp, Some(y), h0, &[(1.0, &k1)]);
        sys.rhs(t + h0, &ytmp, &mut k2);
        stats.rhs_evals += 1;
        let diff: Vec<S::Scalar> = k2.iter().zip(&k1).map(|(a, b)| *a - *b).collect();
        let d2 = rms(&diff, y, tol) / h0;
        let h1 = if d1.max(d2) <= 1e-15 {
            (h0 * 1e-3).max(1e-6)
        } else {
            (0.01 / d1.max(d2)).powf(0.2)
        };
        (100.0 * h0).min(h1).min(h_max)
    };

    let mut last_rejected = false;
    loop {
        if stats.accepted + stats.rejected >= tol.max_steps {
            return Ok((Termination::Failed { t, reason: "step budget exhausted".into() }, stats));
        }
        let target = outputs[out_idx];
        let mut landing = false;
        if t + h >= target || t + 1.01 * h >= target {
            h = target - t;
            landing = true;
        }
        if h <= 1e-14 * t.abs().max(1.0) {
            return Ok((Termination::Failed { t, reason: "step size underflow".into() }, stats));
        }

        combine(&mut ytmp, Some(y), h, &[(A21, &k1)]);
        sys.rhs(t + C2 * h, &ytmp, &mut k2);
        combine(&mut ytmp, Some(y), h, &[(A31, &k1), (A32, &k2)]);
        sys.rhs(t + C3 * h, &ytmp, &mut k3);
        combine(&mut ytmp, Some(y), h, &[(A41, &k1), (A42, &k2), (A43, &k3)]);
        sys.rhs(t + C4 * h, &ytmp, &mut k4);
        combine(&mut ytmp, Some(y), h, &[(A51, &k1), (A52, &k2), (A53, &k3), (A54, &k4)]);
        sys.rhs(t + C5 * h, &ytmp, &mut k5);
        combine(&mut ytmp, Some(y), h, &[(A61, &k1), (A62, &k2), (A63, &k3), (A64, &k4), (A65, &k5)]);
        sys.rhs(t + h, &ytmp, &mut k6);
        combine(&mut ynew, Some(y), h, &[(A71, &k1), (A73, &k3), (A74, &k4), (A75, &k5), (A76, &k6)]);
        let t_new = if landing { target } else { t + h };
        sys.rhs(t_new, &ynew, &mut k7);
        stats.rhs_evals += 6;

        combine(
            &mut ytmp,
            None,
            h,
            &[(E1, &k1), (E3, &k3), (E4, &k4), (E5, &k5), (E6, &k6), (E7, &k7)],
        );
        let err = error_norm(&ytmp, y, &ynew, tol);

        if !err.is_finite() {
            if ynew.iter().all(|v| v.is_finite_value()) && !last_rejected {
                h *= 0.1;
                stats.rejected += 1;
                last_rejected = true;
                continue;
            }
            return Ok((Termination::Failed { t, reason: "state is no longer finite".into() }, stats));
        }

        if err <= 1.0 {
            stats.accepted += 1;
            t = t_new;
            std::mem::swap(y, &mut ynew);
            std::mem::swap(&mut k1, &mut k7);
            let fac = if err == 0.0 { 5.0 } else { (0.9 * err.powf(-0.2)).clamp(0.2, 5.0) };
            let fac = if last_rejected { fac.min(1.0) } else { fac };
            last_rejected = false;
            if landing {
                if observer(t, y) == Control::Stop {
                    return Ok((Termination::Stopped(t), stats));
                }
                out_idx += 1;
                if out_idx == outputs.len() {
                    return Ok((Termination::Completed, stats));
                }
                // Do not let a short landing step shrink the next step.
                h = (h * fac).max(h).min(h_max);
            } else {
                h = (h * fac).min(h_max);
            }
        } else {
            stats.rejected += 1;
            last_rejected = true;
            h *= (0.9 * err.powf(-0.2)).clamp(0.1, 1.0);
        }
    }
}
