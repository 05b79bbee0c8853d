use serde::{Deserialize, Serialize};

use crate::{Error, Result};

/// Noise and bias parameters of one private decomposition.
///
/// `gamma` is redundant (`delta / lambda`) and is checked on construction.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PrivacyParams {
    /// Budget spent on the tree structure.
    pub epsilon: f64,
    /// Laplace scale of every split decision.
    pub lambda: f64,
    /// Split threshold.
    pub theta: f64,
    /// Per-level decay subtracted from node scores.
    pub delta: f64,
    pub gamma: f64,
    /// Tree fanout.
    pub beta: u32,
}

/// Minimum noise scale for a decomposition of fanout `beta` whose node scores
/// have the given sensitivity, at decay `delta = lambda * ln(beta)`.
pub fn privtree_lambda(epsilon: f64, beta: u32, sensitivity: f64) -> Result<f64> {
    if !(epsilon.is_finite() && epsilon > 0.0) {
        return Err(Error::param(format!("epsilon must be positive, got {epsilon}")));
    }
    if beta < 2 {
        return Err(Error::param(format!("fanout must be at least 2, got {beta}")));
    }
    if !(sensitivity.is_finite() && sensitivity > 0.0) {
        return Err(Error::param(format!("sensitivity must be positive, got {sensitivity}")));
    }
    let b = f64::from(beta);
    Ok((2.0 * b - 1.0) / (b - 1.0) * sensitivity / epsilon)
}

impl PrivacyParams {
    /// Tightest parameters for an `epsilon`-private tree with unit-sensitivity
    /// scores: `lambda = (2β-1)/(β-1) / ε` and `delta = lambda * ln β`.
    pub fn privtree(epsilon: f64, beta: u32, theta: f64) -> Result<Self> {
        Self::privtree_with_sensitivity(epsilon, beta, theta, 1.0)
    }

    /// As [`PrivacyParams::privtree`], for scores whose sensitivity is
    /// `sensitivity` (the noise scale grows proportionally).
    pub fn privtree_with_sensitivity(epsilon: f64, beta: u32, theta: f64, sensitivity: f64) -> Result<Self> {
        if !theta.is_finite() {
            return Err(Error::param("theta must be finite"));
        }
        let lambda = privtree_lambda(epsilon, beta, sensitivity)?;
        let gamma = f64::from(beta).ln();
        Ok(PrivacyParams { epsilon, lambda, theta, delta: lambda * gamma, gamma, beta })
    }

    /// Explicit parameters. Fails unless `gamma == delta / lambda` holds to
    /// rounding.
    pub fn new(epsilon: f64, lambda: f64, theta: f64, delta: f64, gamma: f64, beta: u32) -> Result<Self> {
        if !(epsilon > 0.0 && lambda > 0.0 && gamma > 0.0 && delta >= 0.0) {
            return Err(Error::param("epsilon, lambda and gamma must be positive and delta nonnegative"));
        }
        if beta < 2 {
            return Err(Error::param(format!("fanout must be at least 2, got {beta}")));
        }
        if ((delta / lambda) - gamma).abs() > 1e-12 * gamma.max(1.0) {
            return Err(Error::param(format!("gamma {gamma} differs from delta/lambda {}", delta / lambda)));
        }
        Ok(PrivacyParams { epsilon, lambda, theta, delta, gamma, beta })
    }

    /// Scale the noise up by `multiplier >= 1`, keeping `gamma` fixed.
    /// Spending more noise than the minimum never weakens the guarantee.
    pub fn with_slack(self, multiplier: f64) -> Result<Self> {
        if !(multiplier >= 1.0 && multiplier.is_finite()) {
            return Err(Error::param(format!("slack multiplier must be >= 1, got {multiplier}")));
        }
        let lambda = self.lambda * multiplier;
        Ok(PrivacyParams { lambda, delta: lambda * self.gamma, ..self })
    }

    /// Whether `lambda >= (2e^γ - 1)/(e^γ - 1) / ε`, the sufficient condition
    /// for unit-sensitivity scores.
    pub fn satisfies_noise_condition(&self) -> bool {
        let eg = self.gamma.exp();
        self.lambda * (1.0 + 1e-12) >= (2.0 * eg - 1.0) / (eg - 1.0) / self.epsilon
    }
}

/// Total budget of mechanisms run in sequence on the same data.
pub fn compose_budgets(budgets: &[f64]) -> Result<f64> {
    if budgets.is_empty() {
        return Err(Error::param("no budgets to compose"));
    }
    if let Some(b) = budgets.iter().find(|b| !(b.is_finite() && **b > 0.0)) {
        return Err(Error::param(format!("budget must be positive, got {b}")));
    }
    Ok(budgets.iter().sum())
}

/// Split `epsilon` into `(epsilon * ratio, epsilon * (1 - ratio))`.
pub fn split_budget(epsilon: f64, ratio: f64) -> Result<(f64, f64)> {
    if !(epsilon.is_finite() && epsilon > 0.0) {
        return Err(Error::param(format!("epsilon must be positive, got {epsilon}")));
    }
    if !(ratio > 0.0 && ratio < 1.0) {
        return Err(Error::param(format!("budget split must lie in (0, 1), got {ratio}")));
    }
    Ok((epsilon * ratio, epsilon * (1.0 - ratio)))
}
