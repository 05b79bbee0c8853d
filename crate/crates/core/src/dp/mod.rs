//! Laplace primitives, privacy parameterization and the split privacy-cost
//! functions shared by the spatial and sequence builders.

mod cost;
mod laplace;
mod params;

pub use cost::{rho, rho_upper};
pub use laplace::{
    draw_laplace, laplace_cdf, laplace_log_cdf, laplace_log_pdf, laplace_log_sf, laplace_pdf,
    laplace_sf, sample_laplace, LaplaceSample, NoiseSource, Noiseless,
};
pub use params::{compose_budgets, privtree_lambda, split_budget, PrivacyParams};

use crate::{Error, Result};

pub(crate) fn check_scale(scale: f64) -> Result<()> {
    if scale.is_finite() && scale > 0.0 {
        Ok(())
    } else {
        Err(Error::param(format!("Laplace scale must be positive and finite, got {scale}")))
    }
}
