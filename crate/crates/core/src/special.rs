//! Gamma-family special functions used by the variational updates.

use crate::scalar::Real;

/// Digamma function `ψ(x)`.
pub fn digamma<T: Real>(x: T) -> T {
    T::of(statrs::function::gamma::digamma(x.as_f64()))
}

/// `ln Γ(x)`.
pub fn ln_gamma<T: Real>(x: T) -> T {
    T::of(statrs::function::gamma::ln_gamma(x.as_f64()))
}

/// `E[ln γ]` for `γ ~ Gamma(shape, rate)`.
pub fn expected_ln<T: Real>(shape: T, rate: T) -> T {
    digamma(shape) - rate.ln()
}

/// Differential entropy of `Gamma(shape, rate)`.
pub fn gamma_entropy<T: Real>(shape: T, rate: T) -> T {
    shape - rate.ln() + ln_gamma(shape) + (T::one() - shape) * digamma(shape)
}

/// `E[ln p(γ)]` under `q = Gamma(shape, rate)` for the prior `Gamma(c, d)`.
pub fn gamma_cross<T: Real>(c: T, d: T, shape: T, rate: T) -> T {
    c * d.ln() - ln_gamma(c) + (c - T::one()) * expected_ln(shape, rate) - d * shape / rate
}
