//! Privacy cost of one split decision.
//!
//! For a node whose biased score is `x`, [`rho`] is the log-ratio between the
//! probability of splitting it and the probability of splitting it had its
//! score been `x - 1`. [`rho_upper`] is the exponentially decaying envelope
//! whose geometric sum bounds the total cost along a root-to-leaf path.

/// `ln(Pr[x + Lap(λ) > θ] / Pr[x - 1 + Lap(λ) > θ])`.
///
/// Evaluated piecewise so that neither tail is formed by subtraction from 1:
/// for `x <= θ` both tails are pure exponentials and the ratio is `e^{1/λ}`;
/// for `x >= θ + 1` both are `1 - ½e^{…}` and go through `ln_1p`.
pub fn rho(x: f64, theta: f64, lambda: f64) -> f64 {
    let inv = 1.0 / lambda;
    // thresholds on the noise for score x and x - 1
    let a = theta - x;
    let b = a + 1.0;
    if a >= 0.0 {
        inv
    } else if b <= 0.0 {
        let num = (-0.5 * (a * inv).exp()).ln_1p();
        let den = (-0.5 * (b * inv).exp()).ln_1p();
        (num - den).max(0.0)
    } else {
        // a < 0 < b: numerator tail is 1 - ½e^{a/λ}, denominator ½e^{-b/λ}
        let v = (-0.5 * (a * inv).exp()).ln_1p() + std::f64::consts::LN_2 + b * inv;
        v.clamp(0.0, inv)
    }
}

/// Upper envelope of [`rho`]: `1/λ` below `θ + 1`, then `(1/λ)e^{(θ+1-x)/λ}`.
pub fn rho_upper(x: f64, theta: f64, lambda: f64) -> f64 {
    if x < theta + 1.0 {
        1.0 / lambda
    } else {
        ((theta + 1.0 - x) / lambda).exp() / lambda
    }
}
