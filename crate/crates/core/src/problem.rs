use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Model and algorithm parameters shared by the theory and the simulator.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ProblemConfig {
    /// Sample ratio M / N.
    pub alpha: f64,
    /// Fraction of non-zero true coefficients.
    pub rho: f64,
    /// Noise variance.
    pub delta: f64,
    /// ℓ1 strength on the unnormalized sum-of-squares objective.
    pub lambda: f64,
    /// Resampling rate M_B / M (stability selection only).
    pub mu_b: f64,
}

impl Default for ProblemConfig {
    fn default() -> Self {
        ProblemConfig { alpha: 2.5, rho: 0.3, delta: 0.01, lambda: 0.1, mu_b: 1.0 }
    }
}

impl ProblemConfig {
    pub fn new(alpha: f64, rho: f64, delta: f64, lambda: f64, mu_b: f64) -> Self {
        ProblemConfig { alpha, rho, delta, lambda, mu_b }
    }

    pub fn with_lambda(self, lambda: f64) -> Self {
        ProblemConfig { lambda, ..self }
    }

    pub fn with_mu_b(self, mu_b: f64) -> Self {
        ProblemConfig { mu_b, ..self }
    }

    pub fn validate(&self) -> Result<()> {
        let ProblemConfig { alpha, rho, delta, lambda, mu_b } = *self;
        if !(alpha > 0.0 && alpha.is_finite()) {
            return Err(Error::domain(format!("alpha must be positive, got {alpha}")));
        }
        if !(0.0..=1.0).contains(&rho) {
            return Err(Error::domain(format!("rho must lie in [0, 1], got {rho}")));
        }
        if !(delta >= 0.0 && delta.is_finite()) {
            return Err(Error::domain(format!("delta must be non-negative, got {delta}")));
        }
        if !(lambda > 0.0 && lambda.is_finite()) {
            return Err(Error::domain(format!("lambda must be positive, got {lambda}")));
        }
        if !(mu_b > 0.0 && mu_b.is_finite()) {
            return Err(Error::domain(format!("mu_b must be positive, got {mu_b}")));
        }
        Ok(())
    }
}
