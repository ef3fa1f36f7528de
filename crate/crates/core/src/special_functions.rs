//! Bessel functions of the first and second kind and Hankel functions of real
//! order and positive real argument.
//!
//! Non-negative orders are evaluated with one of two methods:
//!
//! * for `x` large compared with `ν²`, Hankel's asymptotic expansion in
//!   modulus/phase form;
//! * otherwise Temme's method: a continued fraction for `J_ν'/J_ν`
//!   followed by Temme's series (`x < 2`) or Steed's complex continued
//!   fraction (`x ≥ 2`) for the pair `(J_μ, Y_μ)` with `|μ| ≤ 1/2`, and
//!   recurrence in the order. Integer orders need no special treatment.
//!
//! Negative orders use the exact rotation
//! `J_{−ν} = cos(νπ) J_ν − sin(νπ) Y_ν`, `Y_{−ν} = sin(νπ) J_ν + cos(νπ) Y_ν`,
//! with `sin(νπ)`, `cos(νπ)` exact at integers and half-integers.

use std::f64::consts::{FRAC_2_PI, PI};

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

const EPS: f64 = f64::EPSILON;
const FPMIN: f64 = f64::MIN_POSITIVE / f64::EPSILON;
const MAXIT: usize = 100_000;
const TEMME_XMIN: f64 = 2.0;

/// `H⁺ = J + iY` or `H⁻ = J − iY`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum HankelKind {
    Plus,
    Minus,
}

/// `sin(πx)`, exact at integers and half-integers.
pub fn sin_pi(x: f64) -> f64 {
    let r = x - 2.0 * (0.5 * x).round();
    if r == 0.0 || r.abs() == 1.0 {
        return 0.0;
    }
    if r == 0.5 {
        return 1.0;
    }
    if r == -0.5 {
        return -1.0;
    }
    (PI * r).sin()
}

/// `cos(πx)`, exact at integers and half-integers.
pub fn cos_pi(x: f64) -> f64 {
    let r = x - 2.0 * (0.5 * x).round();
    if r.abs() == 0.5 {
        return 0.0;
    }
    if r == 0.0 {
        return 1.0;
    }
    if r.abs() == 1.0 {
        return -1.0;
    }
    (PI * r).cos()
}

fn is_integer(x: f64) -> bool {
    x == x.round()
}

/// `J_γ(x)`.
pub fn bessel_j(gamma: f64, x: f64) -> Result<f64> {
    check_order(gamma)?;
    if x < 0.0 || x.is_nan() {
        return Err(Error::domain(format!("J_γ(x) needs x ≥ 0, got {x}")));
    }
    if x == 0.0 {
        return if gamma == 0.0 {
            Ok(1.0)
        } else if gamma > 0.0 || is_integer(gamma) {
            Ok(0.0)
        } else {
            Err(Error::Singularity(format!("J_{gamma}(0) is unbounded")))
        };
    }
    Ok(bessel_jy(gamma, x)?.0)
}

/// `Y_γ(x)`.
pub fn bessel_y(gamma: f64, x: f64) -> Result<f64> {
    check_order(gamma)?;
    if x == 0.0 {
        return Err(Error::Singularity(format!("Y_{gamma}(0) is unbounded")));
    }
    Ok(bessel_jy(gamma, x)?.1)
}

/// `(J_γ(x), Y_γ(x))` for `x > 0`.
pub fn bessel_jy(gamma: f64, x: f64) -> Result<(f64, f64)> {
    check_order(gamma)?;
    if !(x > 0.0) || !x.is_finite() {
        return Err(Error::domain(format!("Bessel evaluation needs finite x > 0, got {x}")));
    }
    if gamma >= 0.0 {
        return Ok(jy_nonneg(gamma, x));
    }
    let nu = -gamma;
    let (j, y) = jy_nonneg(nu, x);
    let (c, s) = (cos_pi(nu), sin_pi(nu));
    Ok((c * j - s * y, s * j + c * y))
}

/// `H^±_γ(x) = J_γ(x) ± i Y_γ(x)`.
pub fn hankel(kind: HankelKind, gamma: f64, x: f64) -> Result<Complex64> {
    let (j, y) = bessel_jy(gamma, x)?;
    Ok(match kind {
        HankelKind::Plus => Complex64::new(j, y),
        HankelKind::Minus => Complex64::new(j, -y),
    })
}

fn check_order(gamma: f64) -> Result<()> {
    if !gamma.is_finite() {
        return Err(Error::domain(format!("Bessel order must be finite, got {gamma}")));
    }
    Ok(())
}

fn asymptotic_applies(nu: f64, x: f64) -> bool {
    x >= 25.0 + 0.5 * nu * nu
}

fn jy_nonneg(nu: f64, x: f64) -> (f64, f64) {
    if asymptotic_applies(nu, x) {
        hankel_asymptotic(nu, x)
    } else {
        temme_steed(nu, x)
    }
}

/// Hankel's expansion `J ± iY = √(2/(πx)) (P ± iQ) e^{±iχ}`,
/// `χ = x − (ν/2 + 1/4)π`.
fn hankel_asymptotic(nu: f64, x: f64) -> (f64, f64) {
    let mu = 4.0 * nu * nu;
    let inv8x = 1.0 / (8.0 * x);
    let mut p = 1.0;
    let mut q = 0.0;
    let mut term = 1.0;
    let mut last = f64::INFINITY;
    for k in 1..200 {
        let odd = (2 * k - 1) as f64;
        term *= (mu - odd * odd) * inv8x / k as f64;
        if term.abs() > last {
            break;
        }
        last = term.abs();
        // Terms alternate in pairs: a₁/x → Q, −a₂/x² → P, −a₃/x³ → Q, a₄/x⁴ → P, ...
        match k % 4 {
            1 => q += term,
            2 => p -= term,
            3 => q -= term,
            _ => p += term,
        }
        if term.abs() < 0.1 * EPS * p.abs().max(q.abs()) {
            break;
        }
    }
    // cos(x − φ), sin(x − φ) via the angle-sum identities keep the full
    // accuracy of the library's reduction of x.
    let phi = 0.5 * nu + 0.25;
    let (sx, cx) = x.sin_cos();
    let (sp, cp) = (sin_pi(phi), cos_pi(phi));
    let cos_chi = cx * cp + sx * sp;
    let sin_chi = sx * cp - cx * sp;
    let amp = (FRAC_2_PI / x).sqrt();
    let j = amp * (p * cos_chi - q * sin_chi);
    let y = amp * (p * sin_chi + q * cos_chi);
    (j, y)
}

/// Evaluates a Chebyshev series with the first coefficient halved.
fn chebyshev(c: &[f64], x: f64) -> f64 {
    let (mut d, mut dd) = (0.0, 0.0);
    let y2 = 2.0 * x;
    for &cj in c[1..].iter().rev() {
        let sv = d;
        d = y2 * d - dd + cj;
        dd = sv;
    }
    x * d - dd + 0.5 * c[0]
}

/// `Γ₁(μ) = (1/Γ(1−μ) − 1/Γ(1+μ))/(2μ)`, `Γ₂(μ) = (1/Γ(1−μ) + 1/Γ(1+μ))/2`,
/// `1/Γ(1+μ)` and `1/Γ(1−μ)` for `|μ| ≤ 1/2`.
fn temme_gammas(mu: f64) -> (f64, f64, f64, f64) {
    const C1: [f64; 7] = [
        -1.142022680371168e0,
        6.5165112670737e-3,
        3.087090173086e-4,
        -3.4706269649e-6,
        6.9437664e-9,
        3.67795e-11,
        -1.356e-13,
    ];
    const C2: [f64; 8] = [
        1.843740587300905e0,
        -7.68528408447867e-2,
        1.2719271366546e-3,
        -4.9717367042e-6,
        -3.31261198e-8,
        2.423096e-10,
        -1.702e-13,
        -1.49e-15,
    ];
    let xx = 8.0 * mu * mu - 1.0;
    let gam1 = chebyshev(&C1, xx);
    let gam2 = chebyshev(&C2, xx);
    (gam1, gam2, gam2 - mu * gam1, gam2 + mu * gam1)
}

/// Temme's method for `ν ≥ 0`, `x > 0`.
fn temme_steed(nu: f64, x: f64) -> (f64, f64) {
    let nl = if x < TEMME_XMIN {
        (nu + 0.5) as usize
    } else {
        (nu - x + 1.5).max(0.0) as usize
    };
    let xmu = nu - nl as f64;
    let xmu2 = xmu * xmu;
    let xi = 1.0 / x;
    let xi2 = 2.0 * xi;
    let w = xi2 / PI;

    // CF1: J_ν'/J_ν by the modified Lentz method.
    let mut isign = 1.0;
    let mut h = (nu * xi).max(FPMIN);
    let mut b = xi2 * nu;
    let mut d = 0.0;
    let mut c = h;
    for _ in 0..MAXIT {
        b += xi2;
        d = b - d;
        if d.abs() < FPMIN {
            d = FPMIN;
        }
        c = b - 1.0 / c;
        if c.abs() < FPMIN {
            c = FPMIN;
        }
        d = 1.0 / d;
        let del = c * d;
        h *= del;
        if d < 0.0 {
            isign = -isign;
        }
        if (del - 1.0).abs() < EPS {
            break;
        }
    }

    // Downward recurrence from ν to μ on an unnormalized solution.
    let mut rjl = isign * FPMIN;
    let mut rjpl = h * rjl;
    let rjl1 = rjl;
    let rjp1 = rjpl;
    let mut fact = nu * xi;
    for _ in 0..nl {
        let rjtemp = fact * rjl + rjpl;
        fact -= xi;
        rjpl = fact * rjtemp - rjl;
        rjl = rjtemp;
    }
    if rjl == 0.0 {
        rjl = EPS;
    }
    let f = rjpl / rjl;

    let (rjmu, mut rymu, mut ry1);
    if x < TEMME_XMIN {
        let x2 = 0.5 * x;
        let pimu = PI * xmu;
        let fact = if pimu.abs() < EPS { 1.0 } else { pimu / pimu.sin() };
        let d = -x2.ln();
        let e = xmu * d;
        let fact2 = if e.abs() < EPS { 1.0 } else { e.sinh() / e };
        let (gam1, gam2, gampl, gammi) = temme_gammas(xmu);
        let mut ff = 2.0 / PI * fact * (gam1 * e.cosh() + gam2 * fact2 * d);
        let e = e.exp();
        let mut p = e / (gampl * PI);
        let mut q = 1.0 / (e * PI * gammi);
        let pimu2 = 0.5 * pimu;
        let fact3 = if pimu2.abs() < EPS { 1.0 } else { pimu2.sin() / pimu2 };
        let r = PI * pimu2 * fact3 * fact3;
        let mut c = 1.0;
        let d = -x2 * x2;
        let mut sum = ff + r * q;
        let mut sum1 = p;
        for i in 1..MAXIT {
            let fi = i as f64;
            ff = (fi * ff + p + q) / (fi * fi - xmu2);
            c *= d / fi;
            p /= fi - xmu;
            q /= fi + xmu;
            let del = c * (ff + r * q);
            sum += del;
            let del1 = c * p - fi * del;
            sum1 += del1;
            if del.abs() < (1.0 + sum.abs()) * EPS {
                break;
            }
        }
        rymu = -sum;
        ry1 = -sum1 * xi2;
        let rymup = xmu * xi * rymu - ry1;
        rjmu = w / (rymup - f * rymu);
    } else {
        // CF2: p + iq = (J_μ' + iY_μ')/(J_μ + iY_μ) by Steed's algorithm.
        let mut a = 0.25 - xmu2;
        let mut p = -0.5 * xi;
        let mut q = 1.0;
        let br = 2.0 * x;
        let mut bi = 2.0;
        let mut fact = a * xi / (p * p + q * q);
        let mut cr = br + q * fact;
        let mut ci = bi + p * fact;
        let mut den = br * br + bi * bi;
        let mut dr = br / den;
        let mut di = -bi / den;
        let mut dlr = cr * dr - ci * di;
        let mut dli = cr * di + ci * dr;
        let mut temp = p * dlr - q * dli;
        q = p * dli + q * dlr;
        p = temp;
        for i in 2..MAXIT {
            a += 2.0 * (i as f64 - 1.0);
            bi += 2.0;
            dr = a * dr + br;
            di = a * di + bi;
            if dr.abs() + di.abs() < FPMIN {
                dr = FPMIN;
            }
            fact = a / (cr * cr + ci * ci);
            cr = br + cr * fact;
            ci = bi - ci * fact;
            if cr.abs() + ci.abs() < FPMIN {
                cr = FPMIN;
            }
            den = dr * dr + di * di;
            dr /= den;
            di /= -den;
            dlr = cr * dr - ci * di;
            dli = cr * di + ci * dr;
            temp = p * dlr - q * dli;
            q = p * dli + q * dlr;
            p = temp;
            if (dlr - 1.0).abs() + dli.abs() < EPS {
                break;
            }
        }
        let gam = (p - f) / q;
        let mut j = (w / ((p - f) * gam + q)).sqrt();
        if rjl < 0.0 {
            j = -j;
        }
        rjmu = j;
        rymu = rjmu * gam;
        let rymup = rymu * (p + q / gam);
        ry1 = xmu * xi * rymu - rymup;
    }

    let scale = rjmu / rjl;
    let rj = rjl1 * scale;
    let _ = rjp1;
    // Upward recurrence for Y is stable.
    for i in 1..=nl {
        let rytemp = (xmu + i as f64) * xi2 * ry1 - rymu;
        rymu = ry1;
        ry1 = rytemp;
    }
    (rj, rymu)
}
