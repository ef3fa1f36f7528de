//! Norm time series and power-law decay fits.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::{lq_norm, GridSpec};

/// Norms of the physical field at one time.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NormSample {
    pub t: f64,
    pub l2: f64,
    pub linf: f64,
    /// One entry per exponent in [`DecaySeries::qs`].
    pub lq: Vec<f64>,
}

impl NormSample {
    pub fn of_field(t: f64, field: &[f64], grid: &GridSpec, qs: &[f64]) -> Result<Self> {
        let vol = grid.cell_volume();
        Ok(Self {
            t,
            l2: lq_norm(field, 2.0, vol)?,
            linf: lq_norm(field, f64::INFINITY, vol)?,
            lq: qs.iter().map(|&q| lq_norm(field, q, vol)).collect::<Result<_>>()?,
        })
    }
}

/// Which norm of a [`DecaySeries`] to read.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum NormKind {
    L2,
    Linf,
    Lq(f64),
}

impl NormKind {
    pub fn label(&self) -> String {
        match self {
            NormKind::L2 => "l2".into(),
            NormKind::Linf => "linf".into(),
            NormKind::Lq(q) => format!("lq_{q}"),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DecayFit {
    pub exponent: f64,
    /// Largest absolute deviation from the fitted line in log space.
    pub residual: f64,
    pub window: (f64, f64),
    pub samples: usize,
    /// Local slopes drift monotonically across the window, the signature of
    /// a logarithmic correction to a pure power law.
    pub log_factor: bool,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct DecaySeries {
    pub qs: Vec<f64>,
    pub rows: Vec<NormSample>,
}

impl DecaySeries {
    pub fn new(qs: Vec<f64>) -> Self {
        Self { qs, rows: Vec::new() }
    }

    pub fn push(&mut self, row: NormSample) -> Result<()> {
        if let Some(last) = self.rows.last() {
            if !(row.t > last.t) {
                return Err(Error::domain(format!("series times must increase: {} after {}", row.t, last.t)));
            }
        }
        if row.lq.len() != self.qs.len() {
            return Err(Error::domain("row does not carry one value per configured q"));
        }
        self.rows.push(row);
        Ok(())
    }

    pub fn times(&self) -> Vec<f64> {
        self.rows.iter().map(|r| r.t).collect()
    }

    pub fn values(&self, kind: NormKind) -> Result<Vec<f64>> {
        match kind {
            NormKind::L2 => Ok(self.rows.iter().map(|r| r.l2).collect()),
            NormKind::Linf => Ok(self.rows.iter().map(|r| r.linf).collect()),
            NormKind::Lq(q) => {
                if q == 2.0 {
                    return Ok(self.rows.iter().map(|r| r.l2).collect());
                }
                if q == f64::INFINITY {
                    return Ok(self.rows.iter().map(|r| r.linf).collect());
                }
                let i = self
                    .qs
                    .iter()
                    .position(|&x| x == q)
                    .ok_or_else(|| Error::Fit(format!("the series does not record L^{q}")))?;
                Ok(self.rows.iter().map(|r| r.lq[i]).collect())
            }
        }
    }

    pub fn fit(&self, kind: NormKind, window: (f64, f64)) -> Result<DecayFit> {
        fit_decay_exponent(&self.times(), &self.values(kind)?, window)
    }
}

/// Minimum number of samples a fit window must contain.
pub const MIN_FIT_SAMPLES: usize = 8;

fn least_squares(x: &[f64], y: &[f64]) -> (f64, f64) {
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let sxy: f64 = x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).sum();
    let sxx: f64 = x.iter().map(|a| (a - mx) * (a - mx)).sum();
    let slope = sxy / sxx;
    (slope, my - slope * mx)
}

/// Least-squares slope of `log(norm)` against `log(1+t)` for samples with
/// `t` in `[lo, hi]`.
pub fn fit_decay_exponent(times: &[f64], values: &[f64], window: (f64, f64)) -> Result<DecayFit> {
    if times.len() != values.len() {
        return Err(Error::Fit("times and values differ in length".into()));
    }
    let (lo, hi) = window;
    let mut xs = Vec::new();
    let mut ys = Vec::new();
    for (&t, &v) in times.iter().zip(values) {
        if t >= lo && t <= hi {
            if !(v > 0.0 && v.is_finite()) {
                return Err(Error::Fit(format!("norm {v} at t = {t} cannot be fitted in log space")));
            }
            xs.push((1.0 + t).ln());
            ys.push(v.ln());
        }
    }
    if xs.len() < MIN_FIT_SAMPLES {
        return Err(Error::Fit(format!(
            "window [{lo}, {hi}] holds {} samples, need at least {MIN_FIT_SAMPLES}",
            xs.len()
        )));
    }
    let (slope, icpt) = least_squares(&xs, &ys);
    let residual = xs.iter().zip(&ys).map(|(x, y)| (y - (slope * x + icpt)).abs()).fold(0.0, f64::max);

    // Local slopes on four consecutive sub-windows.
    let quarter = xs.len() / 4;
    let log_factor = if quarter >= 2 {
        let slopes: Vec<f64> = (0..4)
            .map(|k| {
                let end = if k == 3 { xs.len() } else { (k + 1) * quarter };
                least_squares(&xs[k * quarter..end], &ys[k * quarter..end]).0
            })
            .collect();
        let up = slopes.windows(2).all(|w| w[1] > w[0]);
        let down = slopes.windows(2).all(|w| w[1] < w[0]);
        (up || down) && (slopes[3] - slopes[0]).abs() > 1e-3
    } else {
        false
    };
    Ok(DecayFit { exponent: slope, residual, window, samples: xs.len(), log_factor })
}

/// `per_decade` logarithmically spaced times from `start` to `end`, both
/// included.
pub fn log_times(start: f64, end: f64, per_decade: usize) -> Result<Vec<f64>> {
    if !(start > 0.0 && end > start) || per_decade == 0 {
        return Err(Error::config(format!("bad output time range [{start}, {end}]")));
    }
    let (e0, e1) = (start.log10(), end.log10());
    let count = ((e1 - e0) * per_decade as f64).ceil().max(1.0) as usize;
    let mut out: Vec<f64> = (0..=count)
        .map(|i| {
            let e = e0 + (e1 - e0) * i as f64 / count as f64;
            // Land exactly on whole decades so that window edges like 100 are hit.
            if (e - e.round()).abs() < 1e-12 { 10f64.powi(e.round() as i32) } else { 10f64.powf(e) }
        })
        .collect();
    out[0] = start;
    out[count] = end;
    Ok(out)
}
