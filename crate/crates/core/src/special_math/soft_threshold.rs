use serde::{Deserialize, Serialize};

use super::{gauss_density, gauss_upper_tail};
use crate::error::{Error, Result};

/// `sign(z) * max(|z| - threshold, 0)`.
#[inline]
pub fn soft_threshold(z: f64, threshold: f64) -> f64 {
    if z > threshold {
        z - threshold
    } else if z < -threshold {
        z + threshold
    } else {
        0.0
    }
}

/// Minimizer of `q_hat/2 * w^2 - h * w + lambda * |w|`.
pub fn soft_threshold_argmin(h: f64, lambda: f64, q_hat: f64) -> Result<f64> {
    check_scalar_args(lambda, q_hat)?;
    if !h.is_finite() {
        return Err(Error::domain(format!("field h must be finite, got {h}")));
    }
    Ok(soft_threshold(h, lambda) / q_hat)
}

/// Moments of `w = soft_threshold(a + sqrt(v_hat) * eta, lambda) / q_hat`
/// over `eta ~ N(0, 1)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SoftThresholdMoments {
    pub mean: f64,
    pub second_moment: f64,
    pub nonzero_prob: f64,
    /// Derivative of `mean` with respect to the deterministic field `a`.
    pub mean_derivative: f64,
}

impl SoftThresholdMoments {
    pub fn variance(&self) -> f64 {
        (self.second_moment - self.mean * self.mean).max(0.0)
    }
}

/// Closed-form Gaussian moments of the soft-threshold estimator.
///
/// With `s = sqrt(v_hat)`, `b± = a ∓ lambda` and `t± = (lambda ∓ a) / s`:
///
/// ```text
/// q_hat   E[w]   = b+ H(t+) + s φ(t+) + b- H(t-) - s φ(t-)
/// q_hat^2 E[w^2] = (b+^2 + s^2) H(t+) + b+ s φ(t+) + (b-^2 + s^2) H(t-) - b- s φ(t-)
/// P(w != 0)      = H(t+) + H(t-)
/// ```
///
/// `v_hat = 0` is the deterministic limit and is evaluated directly.
pub fn soft_threshold_gaussian_moments(
    a: f64,
    v_hat: f64,
    lambda: f64,
    q_hat: f64,
) -> Result<SoftThresholdMoments> {
    check_scalar_args(lambda, q_hat)?;
    if !a.is_finite() || !v_hat.is_finite() || v_hat < 0.0 {
        return Err(Error::domain(format!(
            "need finite a and v_hat >= 0, got a = {a}, v_hat = {v_hat}"
        )));
    }
    Ok(moments_unchecked(a, v_hat, lambda, q_hat))
}

#[inline]
pub(crate) fn moments_unchecked(a: f64, v_hat: f64, lambda: f64, q_hat: f64) -> SoftThresholdMoments {
    if v_hat == 0.0 {
        let w = soft_threshold(a, lambda) / q_hat;
        let nonzero = if a.abs() > lambda { 1.0 } else { 0.0 };
        return SoftThresholdMoments {
            mean: w,
            second_moment: w * w,
            nonzero_prob: nonzero,
            mean_derivative: nonzero / q_hat,
        };
    }
    let s = v_hat.sqrt();
    let (bp, bm) = (a - lambda, a + lambda);
    let (tp, tm) = (-bp / s, bm / s);
    let (hp, hm) = (gauss_upper_tail(tp), gauss_upper_tail(tm));
    let (pp, pm) = (gauss_density(tp), gauss_density(tm));
    let mean = (bp * hp + s * pp + bm * hm - s * pm) / q_hat;
    let second = ((bp * bp + v_hat) * hp + bp * s * pp + (bm * bm + v_hat) * hm - bm * s * pm)
        / (q_hat * q_hat);
    let nonzero = (hp + hm).min(1.0);
    SoftThresholdMoments {
        mean,
        second_moment: second.max(0.0),
        nonzero_prob: nonzero,
        mean_derivative: nonzero / q_hat,
    }
}

/// Mean of the soft-threshold estimator only; the hot path of the outer integrals.
#[inline]
pub(crate) fn soft_threshold_mean(a: f64, s: f64, lambda: f64, q_hat: f64) -> f64 {
    if s == 0.0 {
        return soft_threshold(a, lambda) / q_hat;
    }
    let (bp, bm) = (a - lambda, a + lambda);
    let (tp, tm) = (-bp / s, bm / s);
    (bp * gauss_upper_tail(tp) + s * gauss_density(tp) + bm * gauss_upper_tail(tm)
        - s * gauss_density(tm))
        / q_hat
}

fn check_scalar_args(lambda: f64, q_hat: f64) -> Result<()> {
    if !(q_hat > 0.0) || !q_hat.is_finite() {
        return Err(Error::domain(format!("q_hat must be positive and finite, got {q_hat}")));
    }
    if !(lambda >= 0.0) || !lambda.is_finite() {
        return Err(Error::domain(format!("lambda must be non-negative, got {lambda}")));
    }
    Ok(())
}
