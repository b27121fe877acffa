//! Noiseless perfect-reconstruction limit of the ensemble methods, expressed
//! through the effective number of unique samples and nonzeros per dimension.
//!
//! With `tau = 1 / sqrt(V)` the V equation reads `alpha_eff = g(tau)` where
//!
//! ```text
//! g(tau) = rho (1 + tau^2) + 2 (1 - rho) ((1 + tau^2) H(tau) - tau φ(tau))
//! ```
//!
//! `g` is convex in `tau` with a single minimum `g(tau_c)`; for `alpha_eff`
//! below it the equation has no finite root.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::special_math::{gauss_density, gauss_upper_tail};

const V_RANGE: (f64, f64) = (1e-12, 1e12);
const ALPHA_BRACKET: (f64, f64) = (1e-4, 10.0);

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum Algorithm {
    Ss { mu_b: f64 },
    Dko,
}

impl std::fmt::Display for Algorithm {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Algorithm::Ss { mu_b } => write!(f, "ss(mu_b={mu_b})"),
            Algorithm::Dko => write!(f, "dko"),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EffectiveDims {
    pub alpha_eff: f64,
    pub rho_eff: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PhasePoint {
    pub rho: f64,
    pub alpha_critical: f64,
    pub algorithm: Algorithm,
}

fn check_dims(alpha_eff: f64, rho_eff: f64) -> Result<()> {
    if !(alpha_eff > 0.0 && alpha_eff.is_finite()) {
        return Err(Error::domain(format!("alpha_eff must be positive, got {alpha_eff}")));
    }
    if !(rho_eff > 0.0 && rho_eff <= 1.0) {
        return Err(Error::domain(format!("rho_eff must lie in (0, 1], got {rho_eff}")));
    }
    Ok(())
}

/// Right-hand side of the V equation.
pub fn v_equation_rhs(v: f64, rho_eff: f64) -> f64 {
    let tau = 1.0 / v.sqrt();
    2.0 * (1.0 - rho_eff) * ((1.0 + v) * gauss_upper_tail(tau) - v.sqrt() * gauss_density(tau)) + rho_eff * (1.0 + v)
}

fn g(tau: f64, rho: f64) -> f64 {
    let t2 = 1.0 + tau * tau;
    rho * t2 + 2.0 * (1.0 - rho) * (t2 * gauss_upper_tail(tau) - tau * gauss_density(tau))
}

/// `g'(tau) / 2`, increasing in `tau`.
fn half_slope(tau: f64, rho: f64) -> f64 {
    rho * tau - 2.0 * (1.0 - rho) * (gauss_density(tau) - tau * gauss_upper_tail(tau))
}

/// Location of the minimum of `g`; zero when `g` is increasing throughout.
fn tangency(rho: f64) -> f64 {
    if half_slope(0.0, rho) >= 0.0 {
        return 0.0;
    }
    let (mut lo, mut hi) = (0.0, 1.0);
    while half_slope(hi, rho) < 0.0 {
        lo = hi;
        hi *= 2.0;
    }
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if half_slope(mid, rho) < 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}

/// Smallest `alpha_eff` at which the V equation has a finite root.
pub fn tangency_alpha(rho_eff: f64) -> f64 {
    g(tangency(rho_eff), rho_eff)
}

/// Positive root of `alpha_eff V = rhs(V)`. Of the two roots above the
/// tangency, the one with the smaller V (the stable branch) is returned.
pub fn solve_v(alpha_eff: f64, rho_eff: f64) -> Result<f64> {
    check_dims(alpha_eff, rho_eff)?;
    let no_root = || Error::NoFiniteRoot { alpha_eff, rho_eff };
    let tau_c = tangency(rho_eff);
    let v_hi = if tau_c > 0.0 { (1.0 / (tau_c * tau_c)).min(V_RANGE.1) } else { V_RANGE.1 };
    let residual = |v: f64| alpha_eff * v - v_equation_rhs(v, rho_eff);
    let (mut lo, mut hi) = (V_RANGE.0.ln(), v_hi.ln());
    if !(hi > lo) || residual(V_RANGE.0) >= 0.0 || residual(v_hi) < 0.0 {
        return Err(no_root());
    }
    for _ in 0..400 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if residual(mid.exp()) < 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    let (v_lo, v_hi) = (lo.exp(), hi.exp());
    Ok(if residual(v_lo).abs() <= residual(v_hi).abs() { v_lo } else { v_hi })
}

pub fn perfect_recovery_condition(dims: &EffectiveDims) -> Result<bool> {
    let v = solve_v(dims.alpha_eff, dims.rho_eff)?;
    let rhs = 2.0 * (1.0 - dims.rho_eff) * gauss_upper_tail(1.0 / v.sqrt()) - dims.rho_eff;
    Ok(dims.alpha_eff > rhs)
}

/// The recovery condition with "no finite V" read as failure.
fn recovers(dims: &EffectiveDims) -> Result<bool> {
    match perfect_recovery_condition(dims) {
        Err(Error::NoFiniteRoot { .. }) => Ok(false),
        other => other,
    }
}

pub fn effective_dims(algorithm: Algorithm, alpha: f64, rho: f64) -> EffectiveDims {
    match algorithm {
        Algorithm::Ss { mu_b } => EffectiveDims { alpha_eff: -f64::exp_m1(-mu_b) * alpha, rho_eff: rho },
        Algorithm::Dko => EffectiveDims { alpha_eff: alpha / 2.0, rho_eff: rho / 2.0 },
    }
}

/// Critical sample ratio in original units, bracketed to relative `rel_tol`.
pub fn critical_alpha(algorithm: Algorithm, rho: f64, rel_tol: f64) -> Result<f64> {
    if !(rho > 0.0 && rho < 1.0) {
        return Err(Error::domain(format!("rho must lie in (0, 1), got {rho}")));
    }
    if let Algorithm::Ss { mu_b } = algorithm {
        if !(mu_b > 0.0) {
            return Err(Error::domain(format!("mu_b must be positive, got {mu_b}")));
        }
    }
    let ok = |alpha: f64| recovers(&effective_dims(algorithm, alpha, rho));
    let (mut lo, mut hi) = ALPHA_BRACKET;
    while ok(lo)? {
        lo /= 2.0;
        if lo < 1e-300 {
            return Err(Error::domain("recovery condition holds at every sample ratio"));
        }
    }
    while !ok(hi)? {
        hi *= 2.0;
        if hi > 1e300 {
            return Err(Error::domain("recovery condition fails at every sample ratio"));
        }
    }
    while hi - lo > rel_tol * hi {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if ok(mid)? {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    Ok(0.5 * (lo + hi))
}

pub fn phase_boundary_curve(algorithm: Algorithm, rho_grid: &[f64]) -> Result<Vec<PhasePoint>> {
    rho_grid
        .iter()
        .map(|&rho| {
            Ok(PhasePoint { rho, alpha_critical: critical_alpha(algorithm, rho, 1e-12)?, algorithm })
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn full_density_limit() {
        let v = solve_v(3.0, 1.0).unwrap();
        assert!((v - 0.5).abs() < 1e-10);
    }

    #[test]
    fn residual_at_root() {
        for &(a, r) in &[(0.5, 0.1), (0.9, 0.3), (0.3, 0.05), (1.5, 0.6)] {
            let v = solve_v(a, r).unwrap();
            assert!((a * v - v_equation_rhs(v, r)).abs() <= 1e-12, "({a}, {r})");
        }
    }

    #[test]
    fn no_root_below_tangency() {
        let r = 0.2;
        let a_c = tangency_alpha(r);
        assert!(matches!(solve_v(a_c * 0.99, r), Err(Error::NoFiniteRoot { .. })));
        let near = solve_v(a_c * 1.0001, r).unwrap();
        let far = solve_v(a_c * 1.1, r).unwrap();
        assert!(near > far);
        assert!(solve_v(0.0, 0.3).is_err());
    }

    #[test]
    fn condition_examples() {
        assert!(perfect_recovery_condition(&EffectiveDims { alpha_eff: 10.0, rho_eff: 0.3 }).unwrap());
        let dims = EffectiveDims { alpha_eff: 0.99, rho_eff: 0.5 };
        let v = solve_v(0.99, 0.5).unwrap();
        let rhs = 2.0 * 0.5 * gauss_upper_tail(1.0 / v.sqrt()) - 0.5;
        assert_eq!(perfect_recovery_condition(&dims).unwrap(), 0.99 > rhs);
    }

    #[test]
    fn effective_dimension_maps() {
        let d = effective_dims(Algorithm::Dko, 2.0, 0.5);
        assert_eq!((d.alpha_eff, d.rho_eff), (1.0, 0.25));
        let d = effective_dims(Algorithm::Ss { mu_b: 1.0 }, 1.0, 0.2);
        assert!((d.alpha_eff - 0.632_120_558_828_557_7).abs() < 1e-15);
        let d = effective_dims(Algorithm::Ss { mu_b: 60.0 }, 1.3, 0.2);
        assert!((d.alpha_eff - 1.3).abs() < 1e-15);
    }

    #[test]
    fn boundary_is_bracketed_and_monotone() {
        let rhos = [0.05, 0.1, 0.2, 0.4, 0.6, 0.8];
        for alg in [Algorithm::Ss { mu_b: 1.0 }, Algorithm::Dko] {
            let curve = phase_boundary_curve(alg, &rhos).unwrap();
            for p in &curve {
                let at = |f: f64| recovers(&effective_dims(alg, p.alpha_critical * f, p.rho)).unwrap();
                assert!(!at(1.0 - 1e-4) && at(1.0 + 1e-4));
            }
            assert!(curve.windows(2).all(|w| w[0].alpha_critical <= w[1].alpha_critical));
        }
    }
}
