//! Critical exponents and predicted decay rates.
//!
//! Everything here is closed-form algebra in the model parameters
//! `(n, ℓ, β, p)` of
//!
//! ```text
//! u_tt − (1+t)^{−2ℓ} Δu + β/(1+t) u_t = |u|^p,   u(0) = 0,  u_t(0) = u₁.
//! ```
//!
//! Exponent arguments `q` may be `f64::INFINITY`; every formula is written in
//! terms of `1/q`, which is then exactly zero.
//!
//! Branch selection compares against thresholds such as
//! `β = ℓ + 2n(1−ℓ)(1−1/q) + 2k(1−ℓ)` with a relative band of `1e−12`, and an
//! argument inside the band selects the equality (logarithmic) branch.

use std::cmp::Ordering;
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Half-width of the band inside which two thresholds count as equal.
pub const EQUALITY_BAND: f64 = 1e-12;

/// Compare `a` with `b`, treating values within [`EQUALITY_BAND`] (relative)
/// as equal.
pub fn compare_banded(a: f64, b: f64) -> Ordering {
    let scale = 1.0 + a.abs().max(b.abs());
    if (a - b).abs() <= EQUALITY_BAND * scale {
        Ordering::Equal
    } else if a < b {
        Ordering::Less
    } else {
        Ordering::Greater
    }
}

/// `(n, ℓ, β, p)` for one instance of the model.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ModelParams {
    pub n: u32,
    pub ell: f64,
    pub beta: f64,
    pub p: f64,
}

/// Symbols derived from [`ModelParams`] that recur throughout the crate.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DerivedSymbols {
    /// Bessel order `(1−β)/(2(1−ℓ))` of the multipliers.
    pub rho: f64,
    /// Damping coefficient of the constant-speed problem, `(β−ℓ)/(1−ℓ)`.
    pub mu: f64,
    /// Intermediate-zone exponent `μ/2`.
    pub alpha: f64,
    /// Norm-split threshold `α − n/2`.
    pub k_bar: f64,
    /// Fujita-type exponent `1 + 2/(n(1−ℓ))`.
    pub p_c: f64,
}

impl ModelParams {
    pub fn new(n: u32, ell: f64, beta: f64, p: f64) -> Result<Self> {
        let params = ModelParams { n, ell, beta, p };
        params.validate()?;
        Ok(params)
    }

    pub fn validate(&self) -> Result<()> {
        if self.n == 0 {
            return Err(Error::domain("dimension n must be at least 1"));
        }
        if !(0.0..1.0).contains(&self.ell) {
            return Err(Error::domain(format!("ℓ = {} outside [0, 1)", self.ell)));
        }
        if !self.beta.is_finite() || self.beta < 0.0 {
            return Err(Error::domain(format!("β = {} must be finite and ≥ 0", self.beta)));
        }
        if !(self.p > 1.0) || !self.p.is_finite() {
            return Err(Error::domain(format!("p = {} must be finite and > 1", self.p)));
        }
        Ok(())
    }

    pub fn derived(&self) -> DerivedSymbols {
        let one_minus_ell = 1.0 - self.ell;
        let n = f64::from(self.n);
        let mu = (self.beta - self.ell) / one_minus_ell;
        let alpha = 0.5 * mu;
        DerivedSymbols {
            rho: (1.0 - self.beta) / (2.0 * one_minus_ell),
            mu,
            alpha,
            k_bar: alpha - 0.5 * n,
            p_c: 1.0 + 2.0 / (n * one_minus_ell),
        }
    }
}

/// Which estimate produced a [`RatePrediction`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum CaseTag {
    #[serde(rename = "PropLq-i")]
    PropLqI,
    #[serde(rename = "PropLq-ii")]
    PropLqII,
    #[serde(rename = "PropLq-iii")]
    PropLqIII,
    #[serde(rename = "Thm1-a")]
    Thm1A,
    #[serde(rename = "Thm1-b")]
    Thm1B,
    #[serde(rename = "Thm2-L2")]
    Thm2L2,
    #[serde(rename = "Thm2-Hk-a")]
    Thm2HkA,
    #[serde(rename = "Thm2-Hk-b")]
    Thm2HkB,
    #[serde(rename = "Thm2-Hk-c")]
    Thm2HkC,
    #[serde(rename = "Abbicco-a")]
    AbbiccoA,
    #[serde(rename = "Abbicco-b")]
    AbbiccoB,
}

impl CaseTag {
    pub fn as_str(&self) -> &'static str {
        match self {
            CaseTag::PropLqI => "PropLq-i",
            CaseTag::PropLqII => "PropLq-ii",
            CaseTag::PropLqIII => "PropLq-iii",
            CaseTag::Thm1A => "Thm1-a",
            CaseTag::Thm1B => "Thm1-b",
            CaseTag::Thm2L2 => "Thm2-L2",
            CaseTag::Thm2HkA => "Thm2-Hk-a",
            CaseTag::Thm2HkB => "Thm2-Hk-b",
            CaseTag::Thm2HkC => "Thm2-Hk-c",
            CaseTag::AbbiccoA => "Abbicco-a",
            CaseTag::AbbiccoB => "Abbicco-b",
        }
    }
}

impl fmt::Display for CaseTag {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// A predicted envelope `(1+t)^a (1+s)^b ln((e+t)/(e+s))^c`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RatePrediction {
    pub t_exponent: f64,
    pub s_exponent: f64,
    pub log_power: f64,
    pub case_tag: CaseTag,
}

impl RatePrediction {
    /// Value of the envelope at `(t, s)`, without the data-norm factor.
    pub fn envelope(&self, t: f64, s: f64) -> f64 {
        let log = if self.log_power == 0.0 {
            1.0
        } else {
            ((std::f64::consts::E + t) / (std::f64::consts::E + s))
                .ln()
                .powf(self.log_power)
        };
        (1.0 + t).powf(self.t_exponent) * (1.0 + s).powf(self.s_exponent) * log
    }
}

/// The two readings of the ε-slack exponent in the intermediate-β band of the
/// `L^{p_c} ∩ L^{q♯}` theorem.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SlackVariant {
    /// Final term `−(β−ℓ)/(2(1−ℓ))`, as the estimate is printed.
    AsPrinted,
    /// Final term `−(β−ℓ)/2`, obtained by mapping the constant-speed rate
    /// `(1+τ)^{−μ/2}` through `1+τ ∝ (1+t)^{1−ℓ}`.
    TauConsistent,
}

impl SlackVariant {
    pub const ALL: [SlackVariant; 2] = [SlackVariant::AsPrinted, SlackVariant::TauConsistent];

    pub fn as_str(&self) -> &'static str {
        match self {
            SlackVariant::AsPrinted => "as_printed",
            SlackVariant::TauConsistent => "tau_consistent",
        }
    }
}

/// Norm in which the higher-regularity theorem measures the solution.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SobolevNorm {
    L2,
    Hk,
}

fn recip(q: f64) -> f64 {
    // 1/∞ = 0 in IEEE arithmetic, which is the convention wanted here.
    1.0 / q
}

fn conjugate(q: f64) -> f64 {
    if q == 1.0 {
        f64::INFINITY
    } else if q.is_infinite() {
        1.0
    } else {
        q / (q - 1.0)
    }
}

/// Fujita exponent `p_F(d) = 1 + 2/d`.
pub fn fujita_exponent(d: f64) -> Result<f64> {
    if !(d > 0.0) || !d.is_finite() {
        return Err(Error::domain(format!("Fujita exponent needs d > 0, got {d}")));
    }
    Ok(1.0 + 2.0 / d)
}

/// `p_c(n, ℓ) = p_F(n(1−ℓ))`.
pub fn critical_exponent(n: u32, ell: f64) -> Result<f64> {
    check_ell(ell)?;
    fujita_exponent(f64::from(n) * (1.0 - ell))
}

fn check_ell(ell: f64) -> Result<()> {
    if !(0.0..1.0).contains(&ell) {
        return Err(Error::domain(format!("ℓ = {ell} outside [0, 1)")));
    }
    Ok(())
}

/// Positive root of `a p² + b p + c = 0` for `a > 0`, `c < 0`, computed
/// without subtracting nearly equal quantities.
fn positive_root(a: f64, b: f64, c: f64) -> f64 {
    let disc = (b * b - 4.0 * a * c).sqrt();
    let q = -0.5 * (b + b.signum() * disc);
    let (r1, r2) = (q / a, c / q);
    if r1 > 0.0 {
        r1
    } else {
        r2
    }
}

/// Positive root of
/// `(d−1+(β−ℓ)/(1−ℓ)) p² − (d+1+(β+3ℓ)/(1−ℓ)) p − 2 = 0` for a real
/// dimension-like parameter `d`.
fn strauss_root(d: f64, ell: f64, beta: f64) -> Result<f64> {
    check_ell(ell)?;
    let a = d - 1.0 + (beta - ell) / (1.0 - ell);
    let b = -(d + 1.0 + (beta + 3.0 * ell) / (1.0 - ell));
    if !(a > 0.0) {
        return Err(Error::regime(format!(
            "leading coefficient {a} of the Strauss quadratic is not positive"
        )));
    }
    Ok(positive_root(a, b, -2.0))
}

/// Generalized Strauss exponent `p_S(n, ℓ, β)`.
pub fn strauss_generalized(n: u32, ell: f64, beta: f64) -> Result<f64> {
    strauss_root(f64::from(n), ell, beta)
}

/// Classical Strauss exponent `p_S(d)`, the positive root of
/// `(d−1)p² − (d+1)p − 2 = 0`.
pub fn strauss_classic(d: f64) -> Result<f64> {
    if !(d > 1.0) {
        return Err(Error::domain(format!("classical Strauss exponent needs d > 1, got {d}")));
    }
    strauss_root(d, 0.0, 0.0)
}

/// `β_⋆(n) = (n²+n+2)/(n+2)`.
pub fn beta_star(n: u32) -> f64 {
    let n = f64::from(n);
    (n * n + n + 2.0) / (n + 2.0)
}

/// `β_c(n, ℓ) = ℓ + (1−ℓ)(n+1−2/p_c)`.
pub fn beta_critical(n: u32, ell: f64) -> Result<f64> {
    let p_c = critical_exponent(n, ell)?;
    Ok(ell + (1.0 - ell) * (f64::from(n) + 1.0 - 2.0 / p_c))
}

/// The rational closed form of `β_c(n, ℓ)`; must agree with
/// [`beta_critical`].
pub fn beta_critical_rational(n: u32, ell: f64) -> Result<f64> {
    check_ell(ell)?;
    let m = f64::from(n) * (1.0 - ell);
    Ok((m * m + m * (1.0 + 2.0 * ell) + 2.0) / (2.0 + m))
}

/// `q♯ = 2(n+1)/(n−1)`.
pub fn q_sharp(n: u32) -> Result<f64> {
    if n < 2 {
        return Err(Error::domain("q♯ is only defined for n ≥ 2"));
    }
    let n = f64::from(n);
    Ok(2.0 * (n + 1.0) / (n - 1.0))
}

/// `q̄ = 2(n p_c − 1)/(n+1)`, evaluated as `2(n − 1 + 2/(1−ℓ))/(n+1)` so
/// that `q̄(n, 0) = 2` holds exactly.
pub fn q_bar(n: u32, ell: f64) -> Result<f64> {
    critical_exponent(n, ell)?;
    let n = f64::from(n);
    Ok(2.0 * (n - 1.0 + 2.0 / (1.0 - ell)) / (n + 1.0))
}

/// `r(q)` defined by `n/r = 1/2 + n/2 + 1/q`.
pub fn r_of_q(n: u32, q: f64) -> Result<f64> {
    if n == 0 {
        return Err(Error::domain("dimension n must be at least 1"));
    }
    if !(q >= 2.0) {
        return Err(Error::domain(format!("r(q) needs q ≥ 2, got {q}")));
    }
    let n = f64::from(n);
    Ok(n / (0.5 + 0.5 * n + recip(q)))
}

/// The two-branch exponent `d(r, q)` of the constant-speed `L^r − L^q`
/// estimates, split at `r = q′`.
pub fn d_exponent(r: f64, q: f64, n: u32) -> Result<f64> {
    if !(r >= 1.0) || !(r <= q) {
        return Err(Error::domain(format!("d(r, q) needs 1 ≤ r ≤ q, got r = {r}, q = {q}")));
    }
    let nf = f64::from(n);
    if r <= conjugate(q) {
        Ok(nf / r - 0.5 * (nf - 1.0) - recip(q))
    } else {
        Ok(1.0 / r + 0.5 * (nf - 1.0) - nf * recip(q))
    }
}

/// `ℓ` below which `r(q) p_c < q♯` holds on all of `[p_c, q♯]`.
pub fn crucial_ell_threshold(n: u32) -> f64 {
    let n = f64::from(n);
    1.0 - (n - 1.0) / (2.0 * n)
}

/// `β` threshold of the higher-regularity theorem, `ℓ + n(1−ℓ)(1+ℓ)`.
pub fn theorem2_beta_threshold(n: u32, ell: f64) -> f64 {
    ell + f64::from(n) * (1.0 - ell) * (1.0 + ell)
}

/// Inputs of the linear `L^q` a priori estimate.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LinearRateQuery {
    pub n: u32,
    pub ell: f64,
    pub beta: f64,
    /// Lebesgue exponent, `≥ 2`; may be infinite.
    pub q: f64,
    /// Order of the homogeneous derivative `|D|^k`.
    pub k: f64,
    /// Auxiliary data exponent in `[1, 2]`, used only when `k < 1`.
    pub m: f64,
}

impl LinearRateQuery {
    pub fn new(n: u32, ell: f64, beta: f64, q: f64) -> Self {
        LinearRateQuery { n, ell, beta, q, k: 0.0, m: 2.0 }
    }

    /// `β` at which the estimate switches from the damping-limited branch to
    /// the diffusive branch.
    pub fn beta_threshold(&self) -> f64 {
        let one_minus_ell = 1.0 - self.ell;
        self.ell
            + 2.0 * f64::from(self.n) * one_minus_ell * (1.0 - recip(self.q))
            + 2.0 * self.k * one_minus_ell
    }

    fn check_admissible(&self) -> Result<()> {
        check_ell(self.ell)?;
        if self.n == 0 {
            return Err(Error::domain("dimension n must be at least 1"));
        }
        if !(self.q >= 2.0) {
            return Err(Error::domain(format!("q = {} must be ≥ 2", self.q)));
        }
        if !(self.k >= 0.0) {
            return Err(Error::domain(format!("k = {} must be ≥ 0", self.k)));
        }
        if self.k >= 1.0 {
            // Above first order the estimate is stated in the Ḣ^k norm only.
            if self.q != 2.0 {
                return Err(Error::domain("for k ≥ 1 the estimate is an L² (Ḣ^k) estimate"));
            }
            return Ok(());
        }
        if !(1.0..=2.0).contains(&self.m) {
            return Err(Error::domain(format!("m = {} outside [1, 2]", self.m)));
        }
        let n = f64::from(self.n);
        let (q, m, k) = (self.q, self.m, self.k);
        let m_lower = if q.is_infinite() {
            n / (1.0 - k)
        } else {
            n * q / (n + q * (1.0 - k))
        };
        if !(m > m_lower) {
            return Err(Error::domain(format!(
                "m = {m} must exceed nq/(n+q(1−k)) = {m_lower}"
            )));
        }
        let denom = n - m + m * k;
        if denom > 0.0 && !(q < n * m / denom) {
            return Err(Error::domain(format!(
                "q = {q} must be below nm/(n−m+mk) = {}",
                n * m / denom
            )));
        }
        Ok(())
    }
}

/// Dominant-term exponents of the linear a priori estimate for data
/// `(0, g₂)`.
pub fn linear_rate(query: &LinearRateQuery) -> Result<RatePrediction> {
    if !(query.beta > 1.0) {
        return Err(Error::regime(format!("β = {} must exceed 1", query.beta)));
    }
    query.check_admissible()?;
    let LinearRateQuery { n, ell, beta, q, k, .. } = *query;
    let n = f64::from(n);
    let spatial = if k >= 1.0 { 0.5 * n + k } else { n * (1.0 - recip(q)) + k };
    let diffusive = (ell - 1.0) * spatial;
    let prediction = match compare_banded(beta, query.beta_threshold()) {
        Ordering::Less => RatePrediction {
            t_exponent: 0.5 * (ell - beta),
            s_exponent: 1.0 + 0.5 * (beta - ell) + diffusive,
            log_power: 0.0,
            case_tag: CaseTag::PropLqI,
        },
        Ordering::Equal => RatePrediction {
            t_exponent: diffusive,
            s_exponent: 1.0,
            log_power: if k >= 1.0 { 0.5 } else { 1.0 - recip(q) },
            case_tag: CaseTag::PropLqII,
        },
        Ordering::Greater => RatePrediction {
            t_exponent: diffusive,
            s_exponent: 1.0,
            log_power: 0.0,
            case_tag: CaseTag::PropLqIII,
        },
    };
    Ok(prediction)
}

/// `ℓ` range of the `L^{p_c} ∩ L^{q♯}` theorem.
fn theorem1_ell_range(n: u32) -> Result<(f64, f64)> {
    let upper = crucial_ell_threshold(n);
    match n {
        2..=5 => Ok((0.0, upper)),
        6..=8 => {
            let nf = f64::from(n);
            Ok((1.0 - 2.0 * (nf + 1.0) / (nf * (nf - 3.0)), upper))
        }
        _ => Err(Error::regime(format!("the L^q theorem covers 2 ≤ n ≤ 8, got n = {n}"))),
    }
}

/// `β` below which the `L^{p_c} ∩ L^{q♯}` theorem makes no claim:
/// `ℓ + (n+1)(1−ℓ) − (2/q̄)(1−ℓ)`.
pub fn theorem1_beta_floor(n: u32, ell: f64) -> Result<f64> {
    let qb = q_bar(n, ell)?;
    Ok(ell + (1.0 - ell) * (f64::from(n) + 1.0 - 2.0 / qb))
}

/// `β` above which the undamped-by-slack rate `−n(1−1/q)(1−ℓ)` holds:
/// `ℓ + (n+1)(1−ℓ) − (2/q)(1−ℓ)`.
pub fn theorem1_beta_sharp(n: u32, ell: f64, q: f64) -> f64 {
    ell + (1.0 - ell) * (f64::from(n) + 1.0 - 2.0 * recip(q))
}

/// Decay exponent of `‖u(t)‖_{L^q}` for `p_c ≤ q ≤ q♯` from the
/// `L^{p_c} ∩ L^{q♯}` small-data theorem.
pub fn theorem1_rate(
    n: u32,
    ell: f64,
    beta: f64,
    q: f64,
    eps: f64,
    variant: SlackVariant,
) -> Result<RatePrediction> {
    let (lo, hi) = theorem1_ell_range(n)?;
    if !(ell >= lo && ell < hi) {
        return Err(Error::regime(format!("ℓ = {ell} outside [{lo}, {hi}) for n = {n}")));
    }
    if !(eps > 0.0) {
        return Err(Error::domain("ε must be positive"));
    }
    let p_c = critical_exponent(n, ell)?;
    let qs = q_sharp(n)?;
    if compare_banded(q, p_c) == Ordering::Less || compare_banded(q, qs) == Ordering::Greater {
        return Err(Error::regime(format!("q = {q} outside [p_c, q♯] = [{p_c}, {qs}]")));
    }
    let floor = theorem1_beta_floor(n, ell)?;
    if compare_banded(beta, floor) == Ordering::Less {
        return Err(Error::regime(format!("β = {beta} below the theorem's threshold {floor}")));
    }
    let nf = f64::from(n);
    let one_minus_ell = 1.0 - ell;
    if compare_banded(beta, theorem1_beta_sharp(n, ell, q)) == Ordering::Greater {
        return Ok(RatePrediction {
            t_exponent: -nf * (1.0 - recip(q)) * one_minus_ell,
            s_exponent: 0.0,
            log_power: 0.0,
            case_tag: CaseTag::Thm1A,
        });
    }
    let wave = (eps - (nf - 1.0) * (0.5 - recip(q))) * one_minus_ell;
    let damping = match variant {
        SlackVariant::AsPrinted => (beta - ell) / (2.0 * one_minus_ell),
        SlackVariant::TauConsistent => 0.5 * (beta - ell),
    };
    Ok(RatePrediction {
        t_exponent: wave - damping,
        s_exponent: 0.0,
        log_power: 0.0,
        case_tag: CaseTag::Thm1B,
    })
}

/// `ℓ` range of the higher-regularity theorem.
fn theorem2_ell_admissible(n: u32, ell: f64) -> bool {
    let nf = f64::from(n);
    match n {
        2..=4 => ell > 1.0 - 2.0 / nf && ell < 1.0,
        n if n >= 5 => ell >= 0.5 * (1.0 + (1.0 - 16.0 / (nf * nf)).sqrt()) && ell < 1.0,
        _ => false,
    }
}

/// Decay exponents of the higher-regularity small-data theorem, in `L²` or
/// in `Ḣ^k` with `k = 1 + nℓ/2`.
pub fn theorem2_rate(
    n: u32,
    ell: f64,
    beta: f64,
    norm: SobolevNorm,
    k: f64,
) -> Result<RatePrediction> {
    if !theorem2_ell_admissible(n, ell) {
        return Err(Error::regime(format!("ℓ = {ell} outside the theorem's range for n = {n}")));
    }
    let threshold = theorem2_beta_threshold(n, ell);
    if compare_banded(beta, threshold) == Ordering::Less {
        return Err(Error::regime(format!("β = {beta} below ℓ + n(1−ℓ)(1+ℓ) = {threshold}")));
    }
    let nf = f64::from(n);
    let k_expected = 1.0 + 0.5 * nf * ell;
    if compare_banded(k, k_expected) != Ordering::Equal {
        return Err(Error::regime(format!("the theorem fixes k = 1 + nℓ/2 = {k_expected}, got {k}")));
    }
    let one_minus_ell = 1.0 - ell;
    let prediction = match norm {
        SobolevNorm::L2 => RatePrediction {
            t_exponent: 0.5 * nf * (ell - 1.0),
            s_exponent: 0.0,
            log_power: 0.0,
            case_tag: CaseTag::Thm2L2,
        },
        SobolevNorm::Hk => {
            let split = ell + nf * one_minus_ell + 2.0 * k * one_minus_ell;
            match compare_banded(beta, split) {
                Ordering::Greater => RatePrediction {
                    t_exponent: (ell - 1.0) * (0.5 * nf + k),
                    s_exponent: 0.0,
                    log_power: 0.0,
                    case_tag: CaseTag::Thm2HkA,
                },
                Ordering::Equal => RatePrediction {
                    t_exponent: 0.5 * (ell - beta),
                    s_exponent: 0.0,
                    log_power: 0.5,
                    case_tag: CaseTag::Thm2HkB,
                },
                Ordering::Less => RatePrediction {
                    t_exponent: 0.5 * (ell - beta),
                    s_exponent: 0.0,
                    log_power: 0.0,
                    case_tag: CaseTag::Thm2HkC,
                },
            }
        }
    };
    Ok(prediction)
}

fn abbicco_q_admissible(n: u32, q: f64) -> bool {
    match n {
        2 => q > 2.0 && q <= 6.0,
        3 => q > 1.0 && q <= 4.0,
        n if n >= 4 => {
            let nf = f64::from(n);
            q >= 2.0 * (nf - 1.0) / (nf + 1.0) && q <= 2.0 * (nf + 1.0) / (nf - 1.0)
        }
        _ => false,
    }
}

/// `(L¹ ∩ L²) − L^q` decay of the constant-speed problem with damping
/// `μ/(1+τ)`. The exponents refer to `(1+τ)` and `(1+s)`.
pub fn abbicco_rate(n: u32, mu: f64, q: f64, eps: f64) -> Result<RatePrediction> {
    if !(mu >= 2.0) {
        return Err(Error::domain(format!("μ = {mu} must be ≥ 2")));
    }
    if !abbicco_q_admissible(n, q) {
        return Err(Error::domain(format!("q = {q} outside the admissible range for n = {n}")));
    }
    if !(eps > 0.0) {
        return Err(Error::domain("ε must be positive"));
    }
    let nf = f64::from(n);
    if compare_banded(mu, nf + 1.0 - 2.0 * recip(q)) == Ordering::Greater {
        Ok(RatePrediction {
            t_exponent: -nf * (1.0 - recip(q)),
            s_exponent: 1.0,
            log_power: 0.0,
            case_tag: CaseTag::AbbiccoA,
        })
    } else {
        Ok(RatePrediction {
            t_exponent: eps - (nf - 1.0) * (0.5 - recip(q)) - 0.5 * mu,
            s_exponent: 0.5 * mu - eps,
            log_power: 0.0,
            case_tag: CaseTag::AbbiccoB,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn close(a: f64, b: f64, tol: f64) -> bool {
        (a - b).abs() <= tol * (1.0 + b.abs())
    }

    #[test]
    fn fujita_values() {
        assert_eq!(fujita_exponent(2.0).unwrap(), 2.0);
        assert!(close(fujita_exponent(2.0 * (1.0 - 2.0 / 3.0)).unwrap(), 4.0, 1e-15));
        assert_eq!(fujita_exponent(1.0).unwrap(), 3.0);
        assert!(matches!(fujita_exponent(0.0), Err(Error::Domain(_))));
        assert!(matches!(fujita_exponent(-1.0), Err(Error::Domain(_))));
    }

    #[test]
    fn strauss_values() {
        // 3p² − 5p − 2 = (3p + 1)(p − 2)
        assert!(close(strauss_generalized(2, 0.0, 2.0).unwrap(), 2.0, 1e-15));
        let one_plus_sqrt2 = 1.0 + 2f64.sqrt();
        assert!(close(strauss_generalized(3, 0.0, 0.0).unwrap(), one_plus_sqrt2, 1e-15));
        assert!(close(strauss_classic(3.0).unwrap(), one_plus_sqrt2, 1e-15));
        assert!(close(strauss_classic(2.0).unwrap(), (3.0 + 17f64.sqrt()) / 2.0, 1e-15));
        assert!(matches!(strauss_classic(1.0), Err(Error::Domain(_))));
        // n = 1, β < ℓ makes the leading coefficient negative.
        assert!(matches!(strauss_generalized(1, 0.5, 0.2), Err(Error::Regime(_))));
    }

    #[test]
    fn strauss_root_is_stable_for_large_beta() {
        let p = strauss_generalized(2, 0.3, 1e8).unwrap();
        let (ell, beta, n) = (0.3, 1e8, 2.0);
        let a = n - 1.0 + (beta - ell) / (1.0 - ell);
        let b = -(n + 1.0 + (beta + 3.0 * ell) / (1.0 - ell));
        let residual = a * p * p + b * p - 2.0;
        assert!(residual.abs() <= 1e-6 * a, "residual {residual}");
        assert!(p > 1.0 && p < 1.0 + 1e-6);
    }

    #[test]
    fn beta_star_values() {
        assert_eq!(beta_star(2), 2.0);
        assert!(close(beta_star(1), 4.0 / 3.0, 1e-15));
        assert!(close(beta_star(3), 14.0 / 5.0, 1e-15));
    }

    #[test]
    fn beta_critical_values() {
        assert_eq!(beta_critical(2, 0.0).unwrap(), 2.0);
        let a = beta_critical(2, 2.0 / 3.0).unwrap();
        let b = beta_critical_rational(2, 2.0 / 3.0).unwrap();
        assert!(close(a, 1.5, 1e-14) && close(b, 1.5, 1e-14));
        assert!(matches!(beta_critical(2, 1.0), Err(Error::Domain(_))));
        assert!(close(beta_critical(1, 0.5).unwrap(), 1.3, 1e-14));
    }

    #[test]
    fn theorem2_threshold_at_einstein_de_sitter() {
        for n in 1..=8 {
            let nf = f64::from(n);
            let expect = (2.0 + 5.0 * nf / 3.0) / 3.0;
            assert!(close(theorem2_beta_threshold(n, 2.0 / 3.0), expect, 1e-14));
        }
    }

    #[test]
    fn q_values() {
        assert_eq!(q_sharp(3).unwrap(), 4.0);
        assert!(matches!(q_sharp(1), Err(Error::Domain(_))));
        assert_eq!(q_bar(2, 0.0).unwrap(), 2.0);
        assert!(close(q_bar(3, 0.0).unwrap(), 2.0, 1e-15));
    }

    #[test]
    fn r_of_q_values() {
        assert!(close(r_of_q(3, 4.0).unwrap(), 4.0 / 3.0, 1e-15));
        assert!(close(r_of_q(2, q_sharp(2).unwrap()).unwrap(), 6.0 / 5.0, 1e-15));
        assert!(matches!(r_of_q(2, 1.5), Err(Error::Domain(_))));
        for n in 2..=6 {
            let qb = q_bar(n, 0.2).unwrap();
            let p_c = critical_exponent(n, 0.2).unwrap();
            assert!(close(p_c * r_of_q(n, qb).unwrap(), qb, 1e-13));
        }
    }

    #[test]
    fn d_exponent_values() {
        assert!(close(d_exponent(4.0 / 3.0, 4.0, 3).unwrap(), 1.0, 1e-15));
        // Both branches agree at r = q′.
        for &(q, n) in &[(3.0, 2u32), (4.0, 3), (6.0, 5), (2.5, 1)] {
            let qp = q / (q - 1.0);
            let lhs = f64::from(n) / qp - 0.5 * (f64::from(n) - 1.0) - 1.0 / q;
            let rhs = 1.0 / qp + 0.5 * (f64::from(n) - 1.0) - f64::from(n) / q;
            assert!(close(lhs, rhs, 1e-14));
            assert!(close(d_exponent(qp, q, n).unwrap(), lhs, 1e-14));
        }
        // r = 1, q = 2, n = 1: 1 − 0 − 1/2 in the first branch.
        assert!(close(d_exponent(1.0, 2.0, 1).unwrap(), 0.5, 1e-15));
        assert!(matches!(d_exponent(3.0, 2.0, 2), Err(Error::Domain(_))));
        assert!(close(d_exponent(1.0, f64::INFINITY, 2).unwrap(), 1.5, 1e-15));
    }

    #[test]
    fn linear_rate_branches() {
        let iii = linear_rate(&LinearRateQuery { m: 1.0, ..LinearRateQuery::new(1, 0.5, 3.0, 2.0) })
            .unwrap();
        assert_eq!(iii.case_tag, CaseTag::PropLqIII);
        assert!(close(iii.t_exponent, -0.25, 1e-15));

        let i = linear_rate(&LinearRateQuery { m: 1.0, ..LinearRateQuery::new(1, 0.5, 1.1, 6.0) })
            .unwrap();
        assert_eq!(i.case_tag, CaseTag::PropLqI);
        assert!(close(i.t_exponent, -0.3, 1e-14));

        // β = ℓ + 2n(1−ℓ)(1−1/q) exactly: 0.5 + 5/6.
        let q = 6.0;
        let beta = 0.5 + 2.0 * 0.5 * (1.0 - 1.0 / q);
        let ii = linear_rate(&LinearRateQuery { m: 1.0, ..LinearRateQuery::new(1, 0.5, beta, q) })
            .unwrap();
        assert_eq!(ii.case_tag, CaseTag::PropLqII);
        assert!(close(ii.log_power, 1.0 - 1.0 / q, 1e-15));

        let hk = LinearRateQuery { k: 1.0, ..LinearRateQuery::new(1, 0.5, 0.5 + 0.5 + 1.0, 2.0) };
        let hk = linear_rate(&hk).unwrap();
        assert_eq!(hk.case_tag, CaseTag::PropLqII);
        assert_eq!(hk.log_power, 0.5);
    }

    #[test]
    fn linear_rate_rejects() {
        let q = LinearRateQuery::new(1, 0.5, 1.0, 2.0);
        assert!(matches!(linear_rate(&q), Err(Error::Regime(_))));
        let q = LinearRateQuery { m: 1.0, ..LinearRateQuery::new(2, 0.5, 3.0, 2.0) };
        assert!(matches!(linear_rate(&q), Err(Error::Domain(_))));
        let q = LinearRateQuery::new(2, 0.5, 3.0, 1.5);
        assert!(matches!(linear_rate(&q), Err(Error::Domain(_))));
        let q = LinearRateQuery { k: 2.0, ..LinearRateQuery::new(2, 0.5, 3.0, 4.0) };
        assert!(matches!(linear_rate(&q), Err(Error::Domain(_))));
    }

    #[test]
    fn theorem1_branches() {
        let a = theorem1_rate(2, 0.0, 3.0, 2.0, 1e-3, SlackVariant::AsPrinted).unwrap();
        assert_eq!(a.case_tag, CaseTag::Thm1A);
        assert!(close(a.t_exponent, -1.0, 1e-15));

        // threshold 3 − 2/6 = 8/3 > 2, so the slack branch applies.
        assert!(theorem1_beta_sharp(2, 0.0, 6.0) > 2.0);
        let eps = 1e-3;
        let b = theorem1_rate(2, 0.0, 2.0, 6.0, eps, SlackVariant::AsPrinted).unwrap();
        assert_eq!(b.case_tag, CaseTag::Thm1B);
        assert!(close(b.t_exponent, eps - 1.0 / 3.0 - 1.0, 1e-14));

        // Continuity of the sharp branch at q = p_c.
        let p_c = critical_exponent(2, 0.1).unwrap();
        let at = theorem1_rate(2, 0.1, 3.5, p_c, eps, SlackVariant::AsPrinted).unwrap();
        let near = theorem1_rate(2, 0.1, 3.5, p_c + 1e-7, eps, SlackVariant::AsPrinted).unwrap();
        assert!((at.t_exponent - near.t_exponent).abs() < 1e-6);

        assert!(matches!(
            theorem1_rate(2, 0.0, 1.5, 6.0, eps, SlackVariant::AsPrinted),
            Err(Error::Regime(_))
        ));
        assert!(matches!(
            theorem1_rate(2, 0.8, 3.0, 3.0, eps, SlackVariant::AsPrinted),
            Err(Error::Regime(_))
        ));
    }

    #[test]
    fn slack_variants_coincide_without_speed_decay() {
        for beta in [2.0, 2.3, 2.6] {
            let a = theorem1_rate(2, 0.0, beta, 6.0, 1e-3, SlackVariant::AsPrinted).unwrap();
            let b = theorem1_rate(2, 0.0, beta, 6.0, 1e-3, SlackVariant::TauConsistent).unwrap();
            assert!(close(a.t_exponent, b.t_exponent, 1e-15));
        }
        let a = theorem1_rate(2, 0.5, 1.7, 4.0, 1e-3, SlackVariant::AsPrinted).unwrap();
        let b = theorem1_rate(2, 0.5, 1.7, 4.0, 1e-3, SlackVariant::TauConsistent).unwrap();
        assert!(a.t_exponent < b.t_exponent);
    }

    #[test]
    fn theorem2_branches() {
        let k = 1.0 + 2.0 / 3.0;
        let l2 = theorem2_rate(2, 2.0 / 3.0, 2.0, SobolevNorm::L2, k).unwrap();
        assert!(close(l2.t_exponent, -1.0 / 3.0, 1e-15));
        let d = ModelParams { n: 2, ell: 2.0 / 3.0, beta: 2.0, p: 5.0 }.derived();
        assert!(close(d.k_bar, 1.0, 1e-14));
        let hk = theorem2_rate(2, 2.0 / 3.0, 2.0, SobolevNorm::Hk, k).unwrap();
        assert_eq!(hk.case_tag, CaseTag::Thm2HkC);
        assert!(close(hk.t_exponent, -2.0 / 3.0, 1e-14));

        let ell = 2.0 / 3.0;
        let split = ell + 2.0 * (1.0 - ell) + 2.0 * k * (1.0 - ell);
        let eq = theorem2_rate(2, ell, split, SobolevNorm::Hk, k).unwrap();
        assert_eq!(eq.case_tag, CaseTag::Thm2HkB);
        assert_eq!(eq.log_power, 0.5);
        let above = theorem2_rate(2, ell, split + 1.0, SobolevNorm::Hk, k).unwrap();
        assert_eq!(above.case_tag, CaseTag::Thm2HkA);
        assert!(close(above.t_exponent, (ell - 1.0) * (1.0 + k), 1e-14));

        assert!(matches!(
            theorem2_rate(2, 2.0 / 3.0, 1.5, SobolevNorm::L2, k),
            Err(Error::Regime(_))
        ));
        assert!(matches!(theorem2_rate(3, 0.2, 5.0, SobolevNorm::L2, 1.3), Err(Error::Regime(_))));
    }

    #[test]
    fn abbicco_branches() {
        let a = abbicco_rate(2, 4.0, 3.0, 1e-3).unwrap();
        assert_eq!(a.case_tag, CaseTag::AbbiccoA);
        assert!(close(a.t_exponent, -4.0 / 3.0, 1e-15));
        let eps = 1e-3;
        let b = abbicco_rate(2, 2.0, 6.0, eps).unwrap();
        assert_eq!(b.case_tag, CaseTag::AbbiccoB);
        assert!(close(b.t_exponent, eps - 4.0 / 3.0, 1e-14));
        // μ = n + 1 − 2/q exactly falls in the second branch.
        let edge = abbicco_rate(2, 3.0 - 2.0 / 3.0, 3.0, eps).unwrap();
        assert_eq!(edge.case_tag, CaseTag::AbbiccoB);
        assert!(matches!(abbicco_rate(2, 1.5, 3.0, eps), Err(Error::Domain(_))));
        assert!(matches!(abbicco_rate(2, 4.0, 2.0, eps), Err(Error::Domain(_))));
        assert!(matches!(abbicco_rate(1, 4.0, 2.0, eps), Err(Error::Domain(_))));
    }

    #[test]
    fn derived_symbols() {
        let d = ModelParams::new(1, 0.5, 3.0, 6.0).unwrap().derived();
        assert_eq!(d.rho, -2.0);
        assert_eq!(d.mu, 5.0);
        assert_eq!(d.alpha, 2.5);
        assert_eq!(d.k_bar, 2.0);
        assert_eq!(d.p_c, 5.0);
        assert!(ModelParams::new(1, 1.0, 3.0, 2.0).is_err());
        assert!(ModelParams::new(1, 0.5, 3.0, 1.0).is_err());
        assert!(ModelParams::new(0, 0.5, 3.0, 2.0).is_err());
    }

    #[test]
    fn envelope_matches_formula() {
        let r = RatePrediction { t_exponent: -0.5, s_exponent: 1.0, log_power: 0.5, case_tag: CaseTag::PropLqII };
        let (t, s) = (10.0f64, 1.0f64);
        let expect = 11f64.powf(-0.5) * 2.0 * ((std::f64::consts::E + t) / (std::f64::consts::E + s)).ln().sqrt();
        assert!(close(r.envelope(t, s), expect, 1e-15));
    }
}
