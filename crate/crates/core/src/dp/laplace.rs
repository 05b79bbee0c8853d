use rand::{Rng, RngCore};
use serde::{Deserialize, Serialize};

use super::check_scale;
use crate::Result;

/// A realized Laplace draw together with the scale it was drawn at.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LaplaceSample {
    pub value: f64,
    pub scale: f64,
}

/// Source of Laplace noise consumed by the private builders.
///
/// Any random generator is a source. [`Noiseless`] replaces every draw by
/// zero and exists only so tests can compare builders against deterministic
/// oracles; it provides no privacy.
pub trait NoiseSource {
    /// One draw from `Lap(scale)`. `scale` is assumed positive.
    fn laplace(&mut self, scale: f64) -> f64;
}

impl<R: RngCore + ?Sized> NoiseSource for R {
    #[inline]
    fn laplace(&mut self, scale: f64) -> f64 {
        draw_laplace(self, scale)
    }
}

/// Zero-noise source. NOT differentially private.
#[derive(Debug, Clone, Copy, Default)]
pub struct Noiseless;

impl NoiseSource for Noiseless {
    #[inline]
    fn laplace(&mut self, _scale: f64) -> f64 {
        0.0
    }
}

/// Inverse-CDF Laplace draw from one uniform. Does not validate `scale`.
#[inline]
pub fn draw_laplace<R: RngCore + ?Sized>(rng: &mut R, scale: f64) -> f64 {
    loop {
        let u: f64 = rng.random();
        if u == 0.0 {
            continue;
        }
        let v = u - 0.5;
        // 1 - 2|v| lies in (0, 1]
        let mag = -scale * (-2.0 * v.abs()).ln_1p();
        return if v < 0.0 { -mag } else { mag };
    }
}

/// Draw from `Lap(scale)` with parameter validation.
pub fn sample_laplace<R: RngCore + ?Sized>(scale: f64, rng: &mut R) -> Result<LaplaceSample> {
    check_scale(scale)?;
    Ok(LaplaceSample { value: draw_laplace(rng, scale), scale })
}

pub fn laplace_pdf(x: f64, scale: f64) -> f64 {
    (-x.abs() / scale).exp() / (2.0 * scale)
}

pub fn laplace_log_pdf(x: f64, scale: f64) -> f64 {
    -x.abs() / scale - (2.0 * scale).ln()
}

/// `Pr[Lap(scale) <= x]`.
pub fn laplace_cdf(x: f64, scale: f64) -> Result<f64> {
    check_scale(scale)?;
    Ok(cdf(x, scale))
}

/// `Pr[Lap(scale) > x]`.
pub fn laplace_sf(x: f64, scale: f64) -> Result<f64> {
    check_scale(scale)?;
    Ok(cdf(-x, scale))
}

#[inline]
pub(crate) fn cdf(x: f64, scale: f64) -> f64 {
    if x <= 0.0 {
        0.5 * (x / scale).exp()
    } else {
        -0.5 * (-x / scale).exp() + 1.0
    }
}

/// `ln Pr[Lap(scale) <= x]`, accurate far into both tails.
#[inline]
pub fn laplace_log_cdf(x: f64, scale: f64) -> f64 {
    if x <= 0.0 {
        x / scale - std::f64::consts::LN_2
    } else {
        (-0.5 * (-x / scale).exp()).ln_1p()
    }
}

/// `ln Pr[Lap(scale) > x]`.
#[inline]
pub fn laplace_log_sf(x: f64, scale: f64) -> f64 {
    laplace_log_cdf(-x, scale)
}
