//! Gamma function on the positive axis.

use crate::error::{Error, Result};

const LANCZOS_G: f64 = 7.0;
const LANCZOS_COEFFS: [f64; 9] = [
    0.999_999_999_999_809_9,
    676.520_368_121_885_1,
    -1_259.139_216_722_402_8,
    771.323_428_777_653_1,
    -176.615_029_162_140_6,
    12.507_343_278_686_905,
    -0.138_571_095_265_720_12,
    9.984_369_578_019_572e-6,
    1.505_632_735_149_311_6e-7,
];

fn check(x: f64) -> Result<()> {
    if x > 0.0 && x.is_finite() {
        Ok(())
    } else {
        Err(Error::InvalidParameter {
            name: "x",
            value: x,
            reason: "gamma is evaluated on the positive axis only",
        })
    }
}

/// `(ln A, ln t)` of the Lanczos representation `Γ(x) = √(2π) t^{x−1/2} e^{−t} A`
/// for `x ≥ 1/2`.
fn lanczos_parts(x: f64) -> (f64, f64) {
    let z = x - 1.0;
    let mut a = LANCZOS_COEFFS[0];
    for (i, c) in LANCZOS_COEFFS.iter().enumerate().skip(1) {
        a += c / (z + i as f64);
    }
    (a.ln(), (z + LANCZOS_G + 0.5).ln())
}

fn ln_gamma_large(x: f64) -> f64 {
    let (ln_a, ln_t) = lanczos_parts(x);
    let t = (x - 1.0) + LANCZOS_G + 0.5;
    0.5 * (2.0 * std::f64::consts::PI).ln() + (x - 0.5) * ln_t - t + ln_a
}

/// `ln Γ(x)` for `x > 0`; finite for arguments where `Γ` itself overflows.
pub fn ln_gamma(x: f64) -> Result<f64> {
    check(x)?;
    if x < 0.5 {
        // Γ(x) = Γ(x + 1)/x.
        Ok(ln_gamma_large(x + 1.0) - x.ln())
    } else {
        Ok(ln_gamma_large(x))
    }
}

/// `Γ(x)` for `x > 0`, relative accuracy near 1e-15 below the overflow point.
pub fn gamma(x: f64) -> Result<f64> {
    check(x)?;
    if x < 0.5 {
        return Ok(gamma(x + 1.0)? / x);
    }
    if x == x.floor() && x <= 23.0 {
        return Ok((1..x as u64).map(|k| k as f64).product());
    }
    let (ln_a, ln_t) = lanczos_parts(x);
    let t = (x - 1.0) + LANCZOS_G + 0.5;
    let sqrt_two_pi = (2.0 * std::f64::consts::PI).sqrt();
    Ok(sqrt_two_pi * ((x - 0.5) * ln_t - t).exp() * ln_a.exp())
}
