//! Gamma function, sphere areas and exact combinatorics.

use crate::error::{CknError, Result};
use std::f64::consts::PI;

pub fn gamma(x: f64) -> f64 {
    libm::tgamma(x)
}

pub fn ln_gamma(x: f64) -> f64 {
    libm::lgamma(x)
}

pub fn ln_beta(a: f64, b: f64) -> f64 {
    ln_gamma(a) + ln_gamma(b) - ln_gamma(a + b)
}

/// Surface area of the unit sphere S^{n-1} in R^n, i.e. 2 pi^{n/2} / Gamma(n/2).
pub fn sphere_area(n: f64) -> f64 {
    2.0 * (0.5 * n * PI.ln() - ln_gamma(0.5 * n)).exp()
}

pub fn factorial(n: u32) -> Result<u128> {
    (1..=n as u128).try_fold(1u128, |acc, j| acc.checked_mul(j).ok_or(CknError::Overflow("factorial")))
}

/// Dimension of the space of degree-k spherical harmonics on S^{n-1}:
/// (n+2k-2)(n+k-3)! / ((n-2)! k!).
pub fn harmonic_multiplicity(n: u32, k: u32) -> Result<u128> {
    if n < 2 {
        return Err(CknError::DimensionTooSmall(n as usize, 2));
    }
    if k > 20 || n > 64 {
        return Err(CknError::Overflow("harmonic multiplicity (k <= 20, N <= 64)"));
    }
    if k == 0 {
        return Ok(1);
    }
    // (n+k-3)!/(n-2)! = prod_{j=n-1}^{n+k-3} j, empty when k = 1
    let rising = ((n as u128 - 1)..=(n as u128 + k as u128 - 3))
        .try_fold(1u128, |acc, j| acc.checked_mul(j))
        .ok_or(CknError::Overflow("harmonic multiplicity"))?;
    let num = rising
        .checked_mul(n as u128 + 2 * k as u128 - 2)
        .ok_or(CknError::Overflow("harmonic multiplicity"))?;
    Ok(num / factorial(k)?)
}
