//! Scalar building blocks shared by the theory modules: the Gaussian tail
//! function, the soft-threshold estimator and its Gaussian moments,
//! quadrature rules for Gaussian expectations and truncated Poisson sums.

mod poisson;
mod quadrature;
pub(crate) mod soft_threshold;

pub use poisson::{poisson_truncated_expect, PoissonTable, DEFAULT_MASS_TOL};
pub use quadrature::{
    gauss_hermite_expect, Feature, GaussianIntegrator, QuadratureRule, DEFAULT_HERMITE_NODES,
};
pub use soft_threshold::{
    soft_threshold, soft_threshold_argmin, soft_threshold_gaussian_moments, SoftThresholdMoments,
};

use std::f64::consts::{FRAC_1_SQRT_2, PI};

/// Upper tail of the standard normal, `H(x) = P(Z > x)`.
///
/// Computed through `erfc`, so it saturates cleanly to 0 or 1 in the far
/// tails instead of losing precision to `1 - Φ(x)`.
pub fn gauss_upper_tail(x: f64) -> f64 {
    0.5 * libm::erfc(x * FRAC_1_SQRT_2)
}

/// Standard normal density.
pub fn gauss_density(x: f64) -> f64 {
    (-0.5 * x * x).exp() / (2.0 * PI).sqrt()
}
