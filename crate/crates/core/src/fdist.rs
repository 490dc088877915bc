//! Regularized incomplete beta function and the Fisher–Snedecor distribution.

use statrs::function::beta::ln_beta;

use crate::error::{Error, Result};

const MAX_ITER: usize = 10_000;
const EPS: f64 = 1e-16;
const TINY: f64 = 1e-300;

/// Regularized incomplete beta function `I_x(a, b)`.
///
/// Continued fraction evaluated with the modified Lentz method, switching to
/// `1 − I_{1−x}(b, a)` when `x > (a + 1)/(a + b + 2)`.
pub fn reg_inc_beta(x: f64, a: f64, b: f64) -> Result<f64> {
    check_shapes(a, b)?;
    if !(0.0..=1.0).contains(&x) {
        return Err(Error::Domain(format!("incomplete beta argument {x} outside [0, 1]")));
    }
    if x == 0.0 {
        return Ok(0.0);
    }
    if x == 1.0 {
        return Ok(1.0);
    }
    if x > (a + 1.0) / (a + b + 2.0) {
        Ok(1.0 - beta_cf(1.0 - x, b, a))
    } else {
        Ok(beta_cf(x, a, b))
    }
}

/// Upper tail `1 − I_x(a, b)` without cancellation when the tail is small.
pub fn reg_inc_beta_upper(x: f64, a: f64, b: f64) -> Result<f64> {
    check_shapes(a, b)?;
    if !(0.0..=1.0).contains(&x) {
        return Err(Error::Domain(format!("incomplete beta argument {x} outside [0, 1]")));
    }
    if x == 0.0 {
        return Ok(1.0);
    }
    if x == 1.0 {
        return Ok(0.0);
    }
    if x > (a + 1.0) / (a + b + 2.0) {
        Ok(beta_cf(1.0 - x, b, a))
    } else {
        Ok(1.0 - beta_cf(x, a, b))
    }
}

fn check_shapes(a: f64, b: f64) -> Result<()> {
    if a > 0.0 && b > 0.0 && a.is_finite() && b.is_finite() {
        Ok(())
    } else {
        Err(Error::Domain(format!("beta shapes must be positive, got ({a}, {b})")))
    }
}

fn ln_prefix(x: f64, a: f64, b: f64) -> f64 {
    a * x.ln() + b * (-x).ln_1p() - ln_beta(a, b)
}

fn beta_cf(x: f64, a: f64, b: f64) -> f64 {
    let (qab, qap, qam) = (a + b, a + 1.0, a - 1.0);
    let guard = |v: f64| if v.abs() < TINY { TINY } else { v };

    let mut c = 1.0;
    let mut d = 1.0 / guard(1.0 - qab * x / qap);
    let mut h = d;
    for m in 1..=MAX_ITER {
        let m = m as f64;
        let m2 = 2.0 * m;
        let even = m * (b - m) * x / ((qam + m2) * (a + m2));
        d = 1.0 / guard(1.0 + even * d);
        c = guard(1.0 + even / c);
        h *= d * c;
        let odd = -(a + m) * (qab + m) * x / ((a + m2) * (qap + m2));
        d = 1.0 / guard(1.0 + odd * d);
        c = guard(1.0 + odd / c);
        let delta = d * c;
        h *= delta;
        if (delta - 1.0).abs() < EPS {
            break;
        }
    }
    (ln_prefix(x, a, b).exp() / a * h).clamp(0.0, 1.0)
}

fn beta_pdf(x: f64, a: f64, b: f64) -> f64 {
    ((a - 1.0) * x.ln() + (b - 1.0) * (-x).ln_1p() - ln_beta(a, b)).exp()
}

fn check_dof(d1: u64, d2: u64) -> Result<(f64, f64)> {
    if d1 == 0 || d2 == 0 {
        return Err(Error::Domain(format!("degrees of freedom must be positive, got ({d1}, {d2})")));
    }
    Ok((d1 as f64, d2 as f64))
}

/// `P(F ≤ f)` for `F ~ F(d1, d2)`.
pub fn f_cdf(f: f64, d1: u64, d2: u64) -> Result<f64> {
    let (n1, n2) = check_dof(d1, d2)?;
    if f.is_nan() || f < 0.0 {
        return Err(Error::Domain(format!("F statistic must be non-negative, got {f}")));
    }
    if f.is_infinite() {
        return Ok(1.0);
    }
    // d1 f / (d1 f + d2) and its complement, each formed without cancellation
    let x = n1 * f / (n1 * f + n2);
    let xc = n2 / (n1 * f + n2);
    if x > (n1 / 2.0 + 1.0) / ((n1 + n2) / 2.0 + 2.0) {
        reg_inc_beta_upper(xc, n2 / 2.0, n1 / 2.0)
    } else {
        reg_inc_beta(x, n1 / 2.0, n2 / 2.0)
    }
}

/// Survival function `P(F ≥ f)`; equals 1 for any `f ≤ 0`.
pub fn f_sf(f: f64, d1: u64, d2: u64) -> Result<f64> {
    let (n1, n2) = check_dof(d1, d2)?;
    if f.is_nan() {
        return Err(Error::Domain("F statistic is NaN".into()));
    }
    if f <= 0.0 {
        return Ok(1.0);
    }
    if f.is_infinite() {
        return Ok(0.0);
    }
    let xc = n2 / (n1 * f + n2);
    reg_inc_beta(xc, n2 / 2.0, n1 / 2.0)
}

/// Density of `F(d1, d2)`.
pub fn f_pdf(f: f64, d1: u64, d2: u64) -> Result<f64> {
    let (n1, n2) = check_dof(d1, d2)?;
    if f < 0.0 {
        return Err(Error::Domain(format!("F statistic must be non-negative, got {f}")));
    }
    if f == 0.0 {
        return Ok(match d1 {
            1 => f64::INFINITY,
            2 => 1.0,
            _ => 0.0,
        });
    }
    let x = n1 * f / (n1 * f + n2);
    // dx/df = d1 d2 / (d1 f + d2)²
    Ok(beta_pdf(x, n1 / 2.0, n2 / 2.0) * n1 * n2 / (n1 * f + n2).powi(2))
}

/// Quantile of `F(d1, d2)`: bisection on the beta scale, then safeguarded Newton.
pub fn f_quantile(p: f64, d1: u64, d2: u64) -> Result<f64> {
    let (n1, n2) = check_dof(d1, d2)?;
    if !(p > 0.0 && p < 1.0) {
        return Err(Error::Domain(format!("probability {p} outside (0, 1)")));
    }
    let (a, b) = (n1 / 2.0, n2 / 2.0);
    let cdf = |x: f64| reg_inc_beta(x, a, b).expect("shapes validated");

    let (mut lo, mut hi) = (0.0_f64, 1.0_f64);
    for _ in 0..40 {
        let mid = 0.5 * (lo + hi);
        if cdf(mid) < p {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    let mut x = 0.5 * (lo + hi);
    for _ in 0..100 {
        let err = cdf(x) - p;
        if err == 0.0 {
            break;
        }
        if err < 0.0 {
            lo = x;
        } else {
            hi = x;
        }
        let dens = beta_pdf(x, a, b);
        let mut next = x - err / dens;
        if !(next > lo && next < hi) || !dens.is_finite() || dens <= 0.0 {
            next = 0.5 * (lo + hi);
        }
        if (next - x).abs() <= 1e-16 * x.max(1e-300) {
            x = next;
            break;
        }
        x = next;
    }
    Ok(n2 * x / (n1 * (1.0 - x)))
}
