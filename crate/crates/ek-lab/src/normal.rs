//! Standard normal CDF.

use std::f64::consts::FRAC_1_SQRT_2;

/// Cumulative distribution function of a standard normal variable.
///
/// Evaluated through the complementary error function,
/// `Phi(x) = erfc(-x / sqrt(2)) / 2`, which stays accurate to well below
/// 1e-12 absolute over the whole real line (the rational-approximation
/// `erfc` is good to a couple of ulps).
pub fn normal_cdf(x: f64) -> f64 {
    0.5 * libm::erfc(-x * FRAC_1_SQRT_2)
}
