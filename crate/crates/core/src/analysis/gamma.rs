//! Complete and incomplete gamma functions.
//!
//! The incomplete functions are unregularised. The lower function uses its
//! power series for `x < a + 1` and the upper one a continued fraction
//! (modified Lentz) otherwise; each is obtained from the other through
//! `γ(a, x) + Γ(a, x) = Γ(a)` on the opposite side of the split.

use crate::error::{domain, Result};

const LANCZOS_G: f64 = 7.0;
const LANCZOS_COEFFS: [f64; 9] = [
    0.999_999_999_999_809_93,
    676.520_368_121_885_1,
    -1_259.139_216_722_402_8,
    771.323_428_777_653_13,
    -176.615_029_162_140_59,
    12.507_343_278_686_905,
    -0.138_571_095_265_720_12,
    9.984_369_578_019_571_6e-6,
    1.505_632_735_149_311_6e-7,
];

const EPS: f64 = 1e-16;
const TINY: f64 = 1e-300;
const MAX_ITER: usize = 1000;

/// `ln Γ(x)` for `x > 0`.
pub fn ln_gamma(x: f64) -> f64 {
    if x < 0.5 {
        // reflection
        let s = (std::f64::consts::PI * x).sin();
        return (std::f64::consts::PI / s).ln() - ln_gamma(1.0 - x);
    }
    let x = x - 1.0;
    let mut acc = LANCZOS_COEFFS[0];
    for (i, &c) in LANCZOS_COEFFS.iter().enumerate().skip(1) {
        acc += c / (x + i as f64);
    }
    let t = x + LANCZOS_G + 0.5;
    0.5 * (2.0 * std::f64::consts::PI).ln() + (x + 0.5) * t.ln() - t + acc.ln()
}

pub fn gamma(x: f64) -> f64 {
    ln_gamma(x).exp()
}

fn check(a: f64, x: f64) -> Result<()> {
    if !(a > 0.0 && a.is_finite()) {
        return Err(domain(format!("incomplete gamma needs a > 0, got {a}")));
    }
    if !(x >= 0.0) {
        return Err(domain(format!("incomplete gamma needs x >= 0, got {x}")));
    }
    Ok(())
}

/// Lower incomplete gamma `γ(a, x) = ∫₀ˣ t^(a-1) e^(-t) dt`.
pub fn lower_incomplete_gamma(a: f64, x: f64) -> Result<f64> {
    check(a, x)?;
    Ok(lower_unchecked(a, x))
}

/// Upper incomplete gamma `Γ(a, x) = ∫ₓ^∞ t^(a-1) e^(-t) dt`.
pub fn upper_incomplete_gamma(a: f64, x: f64) -> Result<f64> {
    check(a, x)?;
    Ok(upper_unchecked(a, x))
}

pub(crate) fn lower_unchecked(a: f64, x: f64) -> f64 {
    if x == 0.0 {
        0.0
    } else if x.is_infinite() {
        gamma(a)
    } else if x < a + 1.0 {
        lower_series(a, x)
    } else {
        gamma(a) - upper_fraction(a, x)
    }
}

pub(crate) fn upper_unchecked(a: f64, x: f64) -> f64 {
    if x == 0.0 {
        gamma(a)
    } else if x.is_infinite() {
        0.0
    } else if x < a + 1.0 {
        gamma(a) - lower_series(a, x)
    } else {
        upper_fraction(a, x)
    }
}

/// `x^a e^(-x)` computed in log space so that it stays accurate for large x.
fn prefactor(a: f64, x: f64) -> f64 {
    (a * x.ln() - x).exp()
}

fn lower_series(a: f64, x: f64) -> f64 {
    let mut denom = a;
    let mut term = 1.0 / a;
    let mut sum = term;
    for _ in 0..MAX_ITER {
        denom += 1.0;
        term *= x / denom;
        sum += term;
        if term.abs() < sum.abs() * EPS {
            break;
        }
    }
    sum * prefactor(a, x)
}

fn upper_fraction(a: f64, x: f64) -> f64 {
    let mut b = x + 1.0 - a;
    let mut c = 1.0 / TINY;
    let mut d = 1.0 / b;
    let mut h = d;
    for i in 1..MAX_ITER {
        let an = -(i as f64) * (i as f64 - a);
        b += 2.0;
        d = an * d + b;
        if d.abs() < TINY {
            d = TINY;
        }
        c = b + an / c;
        if c.abs() < TINY {
            c = TINY;
        }
        d = 1.0 / d;
        let delta = d * c;
        h *= delta;
        if (delta - 1.0).abs() < EPS {
            break;
        }
    }
    h * prefactor(a, x)
}
