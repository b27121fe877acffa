//! Damped fixed-point iteration shared by the self-consistent systems.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SolverSettings {
    /// Fraction of the new iterate mixed in, in (0, 1].
    pub damping: f64,
    /// Target for the sup-norm residual `|update(x) - x|`.
    pub tol: f64,
    pub max_iter: usize,
    /// Floor applied to variance-like coordinates after each step.
    pub min_clip: f64,
}

impl Default for SolverSettings {
    fn default() -> Self {
        SolverSettings { damping: 0.5, tol: 1e-10, max_iter: 10_000, min_clip: 1e-14 }
    }
}

impl SolverSettings {
    pub fn with_damping(self, damping: f64) -> Self {
        SolverSettings { damping, ..self }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.damping > 0.0 && self.damping <= 1.0) {
            return Err(Error::domain(format!("damping must lie in (0, 1], got {}", self.damping)));
        }
        if !(self.tol > 0.0) {
            return Err(Error::domain(format!("tol must be positive, got {}", self.tol)));
        }
        if self.max_iter == 0 {
            return Err(Error::domain("max_iter must be positive"));
        }
        if !(self.min_clip >= 0.0) {
            return Err(Error::domain(format!("min_clip must be non-negative, got {}", self.min_clip)));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FixedPointReport {
    pub solution: Vec<f64>,
    pub residual: f64,
    pub iterations: usize,
    pub converged: bool,
}

/// Iterates `x <- (1 - damping) x + damping * update(x)` until
/// `|update(x) - x|_inf <= tol` or `max_iter` evaluations of `update`.
///
/// Coordinates flagged in `clip_mask` are floored at `min_clip` after every
/// step. On convergence the returned solution is the point at which the
/// residual was measured, so it satisfies the tolerance itself.
pub fn solve_damped<F>(
    mut update: F,
    init: &[f64],
    clip_mask: &[bool],
    settings: &SolverSettings,
) -> Result<FixedPointReport>
where
    F: FnMut(&[f64]) -> Result<Vec<f64>>,
{
    settings.validate()?;
    if !clip_mask.is_empty() && clip_mask.len() != init.len() {
        return Err(Error::domain("clip mask length differs from the state length"));
    }
    if init.iter().any(|x| !x.is_finite()) {
        return Err(Error::domain("initial state must be finite"));
    }
    let mut x = init.to_vec();
    let mut residual = f64::INFINITY;
    for iteration in 1..=settings.max_iter {
        let next = update(&x)?;
        if next.len() != x.len() {
            return Err(Error::domain("update changed the state length"));
        }
        if next.iter().any(|v| !v.is_finite()) {
            return Err(Error::Diverged { iteration, last_finite: x });
        }
        residual = next.iter().zip(&x).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
        if residual <= settings.tol {
            return Ok(FixedPointReport { solution: x, residual, iterations: iteration, converged: true });
        }
        let d = settings.damping;
        for (i, (xi, ni)) in x.iter_mut().zip(&next).enumerate() {
            *xi = (1.0 - d) * *xi + d * ni;
            if clip_mask.get(i).copied().unwrap_or(false) && *xi < settings.min_clip {
                *xi = settings.min_clip;
            }
        }
    }
    Ok(FixedPointReport { solution: x, residual, iterations: settings.max_iter, converged: false })
}
