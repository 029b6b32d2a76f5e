//! Modified Bessel function of the first kind, order zero.

use crate::error::{Error, Result};
use crate::units::PI;

/// Below this argument the power series is used, above it the large-argument
/// expansion. Both agree to about 1e-13 relative at the switch.
const SERIES_LIMIT: f64 = 15.0;

/// `I₀(x)` overflows an f64 a little above 713.
const MAX_ARG: f64 = 700.0;

/// `I₀(x)` for `0 ≤ x ≤ 700`.
pub fn bessel_i0(x: f64) -> Result<f64> {
    if !(0.0..=MAX_ARG).contains(&x) {
        return Err(Error::Domain { what: "bessel_i0 argument", value: x });
    }
    if x < SERIES_LIMIT {
        Ok(series(x))
    } else {
        Ok(libm::exp(x) * asymptotic_scaled(x))
    }
}

/// Exponentially scaled `e^{-x}·I₀(x)` for any finite `x ≥ 0`.
///
/// This is the shape of the Rayleigh roughness factor and does not overflow.
pub fn bessel_i0_scaled(x: f64) -> Result<f64> {
    if !(x >= 0.0 && x.is_finite()) {
        return Err(Error::Domain { what: "bessel_i0_scaled argument", value: x });
    }
    if x < SERIES_LIMIT {
        Ok(libm::exp(-x) * series(x))
    } else {
        Ok(asymptotic_scaled(x))
    }
}

// Σ (x/2)^{2k} / (k!)², all terms positive.
fn series(x: f64) -> f64 {
    let q = 0.25 * x * x;
    let mut term = 1.0;
    let mut sum = 1.0;
    let mut k = 1.0;
    loop {
        term *= q / (k * k);
        sum += term;
        if term <= sum * 1e-17 {
            return sum;
        }
        k += 1.0;
    }
}

// e^{-x} I₀(x) ~ (2πx)^{-1/2} Σ ((2k-1)!!)² / (k! (8x)^k)
fn asymptotic_scaled(x: f64) -> f64 {
    let mut term = 1.0;
    let mut sum = 1.0;
    for k in 1..60 {
        let kf = k as f64;
        let m = 2.0 * kf - 1.0;
        let next = term * m * m / (8.0 * kf * x);
        if next >= term {
            break;
        }
        term = next;
        sum += term;
        if term <= sum * 1e-17 {
            break;
        }
    }
    sum / libm::sqrt(2.0 * PI * x)
}
