//! Log-gamma and digamma through their Stirling remainders.
//!
//! Entropies of Beta and Dirichlet distributions combine `ln Γ` and `ψ`
//! terms whose magnitudes grow like `x ln x` while their sum stays O(ln x).
//! Evaluating the pieces separately loses roughly `log10(x)` digits once
//! pseudo-counts reach 1e5 and beyond. Exposing the remainders
//!
//! ```text
//! ln Γ(x) = (x - 1/2) ln x - x + ln(2π)/2 + stirling_remainder(x)
//! ψ(x)    = ln x - 1/(2x) - digamma_remainder(x)
//! ```
//!
//! lets the entropy code cancel the large terms symbolically.

use crate::real::Real;

/// Below this argument the upward recurrence is applied before the
/// asymptotic series.
const ASYMPTOTIC_MIN: f64 = 10.0;

/// B_{2k} / (2k (2k-1)) for k = 1..8.
const STIRLING_COEFFS: [f64; 8] = [
    1.0 / 12.0,
    -1.0 / 360.0,
    1.0 / 1260.0,
    -1.0 / 1680.0,
    1.0 / 1188.0,
    -691.0 / 360360.0,
    1.0 / 156.0,
    -3617.0 / 122400.0,
];

/// B_{2k} / (2k) for k = 1..8.
const DIGAMMA_COEFFS: [f64; 8] = [
    1.0 / 12.0,
    -1.0 / 120.0,
    1.0 / 252.0,
    -1.0 / 240.0,
    1.0 / 132.0,
    -691.0 / 32760.0,
    1.0 / 12.0,
    -3617.0 / 8160.0,
];

/// `ln Γ(x) - [(x - 1/2) ln x - x + ln(2π)/2]` for `x > 0`.
pub fn stirling_remainder<T: Real>(x: T) -> T {
    debug_assert!(x > T::zero());
    let one = T::one();
    let half = T::lit(0.5);
    let threshold = T::lit(ASYMPTOTIC_MIN);
    let mut shift = T::zero();
    let mut xx = x;
    while xx < threshold {
        // r(x) = r(x + 1) + (x + 1/2) ln(1 + 1/x) - 1
        shift += (xx + half) * (one / xx).ln_1p() - one;
        xx += one;
    }
    let inv = one / xx;
    let inv2 = inv * inv;
    let mut term = inv;
    let mut series = T::zero();
    for &c in &STIRLING_COEFFS {
        series += T::lit(c) * term;
        term *= inv2;
    }
    shift + series
}

/// `ln x - 1/(2x) - ψ(x)` for `x > 0`.
pub fn digamma_remainder<T: Real>(x: T) -> T {
    debug_assert!(x > T::zero());
    let one = T::one();
    let half = T::lit(0.5);
    let threshold = T::lit(ASYMPTOTIC_MIN);
    let mut shift = T::zero();
    let mut xx = x;
    while xx < threshold {
        // s(x) = s(x + 1) - ln(1 + 1/x) + 1/(2x) + 1/(2(x + 1))
        shift += half / xx + half / (xx + one) - (one / xx).ln_1p();
        xx += one;
    }
    let inv2 = one / (xx * xx);
    let mut term = inv2;
    let mut series = T::zero();
    for &c in &DIGAMMA_COEFFS {
        series += T::lit(c) * term;
        term *= inv2;
    }
    shift + series
}

/// Natural log of the gamma function for `x > 0`.
pub fn ln_gamma<T: Real>(x: T) -> T {
    let half = T::lit(0.5);
    let half_ln_two_pi = T::lit(0.5 * (2.0 * std::f64::consts::PI).ln());
    (x - half) * x.ln() - x + half_ln_two_pi + stirling_remainder(x)
}

/// Digamma ψ(x) = d/dx ln Γ(x) for `x > 0`.
pub fn digamma<T: Real>(x: T) -> T {
    x.ln() - T::lit(0.5) / x - digamma_remainder(x)
}

/// `ln B(a, b) = ln Γ(a) + ln Γ(b) - ln Γ(a + b)`.
pub fn ln_beta<T: Real>(a: T, b: T) -> T {
    ln_gamma(a) + ln_gamma(b) - ln_gamma(a + b)
}
