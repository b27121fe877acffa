//! Derandomized knockoffs: the self-consistent system of the lasso on the
//! design augmented with a fresh knockoff copy, the selection probability of
//! the lasso-coefficient-difference rule, and TPR/FDR for the derandomized
//! and the single-draw (vanilla) knockoff filters.

use serde::{Deserialize, Serialize};

use crate::detection::{critical_field, rates_from_masses, region_rates};
use crate::error::{Error, Result};
use crate::field::{field_order, FieldHats};
use crate::fixed_point::{solve_damped, FixedPointReport, SolverSettings};
use crate::problem::ProblemConfig;
use crate::special_math::soft_threshold::moments_unchecked;
use crate::special_math::{gauss_upper_tail, Feature, GaussianIntegrator};
use crate::ss_theory::check_hats;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DkoOrderParams {
    pub q: f64,
    pub m: f64,
    pub chi: f64,
    pub v: f64,
    pub v_knock: f64,
    pub chi_knock: f64,
}

impl DkoOrderParams {
    fn to_vec(self) -> [f64; 6] {
        [self.q, self.m, self.chi, self.v, self.v_knock, self.chi_knock]
    }

    fn from_slice(x: &[f64]) -> Self {
        DkoOrderParams { q: x[0], m: x[1], chi: x[2], v: x[3], v_knock: x[4], chi_knock: x[5] }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DkoHatParams {
    pub q_hat: f64,
    pub q_hat_knock: f64,
    pub m_hat: f64,
    pub chi_hat: f64,
    pub v_hat: f64,
    pub v_hat_knock: f64,
}

impl DkoHatParams {
    fn to_vec(self) -> [f64; 6] {
        [self.q_hat, self.q_hat_knock, self.m_hat, self.chi_hat, self.v_hat, self.v_hat_knock]
    }

    fn from_slice(x: &[f64]) -> Self {
        DkoHatParams {
            q_hat: x[0],
            q_hat_knock: x[1],
            m_hat: x[2],
            chi_hat: x[3],
            v_hat: x[4],
            v_hat_knock: x[5],
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DkoSolution {
    pub config: ProblemConfig,
    pub order: DkoOrderParams,
    pub hats: DkoHatParams,
    pub report: FixedPointReport,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SelectionThresholds {
    /// Threshold on `|w| - |w_knock|`.
    pub z_th: f64,
    /// Threshold on the selection probability.
    pub pi_th: f64,
}

impl Default for SelectionThresholds {
    fn default() -> Self {
        SelectionThresholds { z_th: 0.05, pi_th: 0.15 }
    }
}

pub fn dko_hat_update(order: &DkoOrderParams, config: &ProblemConfig) -> Result<DkoHatParams> {
    let o = order;
    if !o.to_vec().iter().all(|x| x.is_finite()) {
        return Err(Error::domain("order parameters must be finite"));
    }
    let d = 1.0 + o.chi + o.chi_knock;
    if !(d > 0.0) {
        return Err(Error::domain(format!("1 + chi + chi_knock must be positive, got {d}")));
    }
    let ProblemConfig { alpha, rho, delta, .. } = *config;
    let q_hat = alpha / d;
    let scale = alpha / (d * d);
    let chi_hat = (scale * (o.q - 2.0 * o.m + rho + delta)).max(0.0);
    let v_hat = (scale * (o.v + o.v_knock)).max(0.0);
    Ok(DkoHatParams { q_hat, q_hat_knock: q_hat, m_hat: q_hat, chi_hat, v_hat, v_hat_knock: chi_hat + v_hat })
}

/// `(v_knock, chi_knock)`: second moment and susceptibility of the knockoff
/// coefficient, whose field is pure noise of variance `v_hat_knock`.
pub fn knockoff_moments(v_hat_knock: f64, q_hat_knock: f64, lambda: f64) -> (f64, f64) {
    let m = moments_unchecked(0.0, v_hat_knock, lambda, q_hat_knock);
    (m.second_moment, m.nonzero_prob / q_hat_knock)
}

pub fn dko_order_update_with(
    hats: &DkoHatParams,
    config: &ProblemConfig,
    integrator: &GaussianIntegrator,
) -> Result<DkoOrderParams> {
    check_hats(hats.q_hat, &[hats.m_hat, hats.chi_hat, hats.v_hat, hats.v_hat_knock])?;
    if !(hats.q_hat_knock > 0.0) {
        return Err(Error::domain(format!("q_hat_knock must be positive, got {}", hats.q_hat_knock)));
    }
    let field = FieldHats { q_hat: hats.q_hat, m_hat: hats.m_hat, chi_hat: hats.chi_hat, v_hat: hats.v_hat };
    let o = field_order(&field, config.lambda, config.rho, integrator);
    let (v_knock, chi_knock) = knockoff_moments(hats.v_hat_knock, hats.q_hat_knock, config.lambda);
    Ok(DkoOrderParams { q: o.q, m: o.m, chi: o.chi, v: o.v, v_knock, chi_knock })
}

pub fn dko_order_update(hats: &DkoHatParams, config: &ProblemConfig) -> Result<DkoOrderParams> {
    dko_order_update_with(hats, config, &GaussianIntegrator::default())
}

pub fn dko_initial_order(config: &ProblemConfig) -> DkoOrderParams {
    let rho = config.rho;
    DkoOrderParams { q: rho, m: rho / 2.0, chi: 1.0, v: 0.1, v_knock: 0.1, chi_knock: 1.0 }
}

pub fn solve_dko_with(
    config: &ProblemConfig,
    settings: &SolverSettings,
    integrator: &GaussianIntegrator,
) -> Result<DkoSolution> {
    config.validate()?;
    let order = dko_initial_order(config);
    let hats = dko_hat_update(&order, config)?;
    let init: Vec<f64> = order.to_vec().into_iter().chain(hats.to_vec()).collect();
    let clip = [true, false, true, true, true, true, false, false, false, false, false, false];
    let update = |x: &[f64]| -> Result<Vec<f64>> {
        let hats = dko_hat_update(&DkoOrderParams::from_slice(&x[..6]), config)?;
        let next = dko_order_update_with(&hats, config, integrator)?;
        Ok(next.to_vec().into_iter().chain(hats.to_vec()).collect())
    };
    let report = solve_damped(update, &init, &clip, settings)?;
    let mut hats = DkoHatParams::from_slice(&report.solution[6..]);
    // Damping mixes the three hats separately, so rounding can leave the sum off by an ulp.
    hats.v_hat_knock = hats.chi_hat + hats.v_hat;
    Ok(DkoSolution { config: *config, order: DkoOrderParams::from_slice(&report.solution[..6]), hats, report })
}

pub fn solve_dko(config: &ProblemConfig, settings: &SolverSettings) -> Result<DkoSolution> {
    solve_dko_with(config, settings, &GaussianIntegrator::default())
}

/// Selection probability of the coordinate-difference rule as a function of
/// the deterministic field `a`.
///
/// The knockoff magnitude `|w_knock|` has an atom at zero and, beyond it, is a
/// shifted half-Gaussian in `eta_knock`. Conditional on it, `P(|w| > z + |w_knock|)`
/// is a two-sided Gaussian tail in closed form.
#[derive(Debug, Clone)]
pub struct LcdSelection<'a> {
    lambda: f64,
    q_hat: f64,
    q_hat_knock: f64,
    s: f64,
    s_knock: f64,
    z_th: f64,
    integrator: &'a GaussianIntegrator,
}

impl<'a> LcdSelection<'a> {
    pub fn new(hats: &DkoHatParams, lambda: f64, z_th: f64, integrator: &'a GaussianIntegrator) -> Self {
        LcdSelection {
            lambda,
            q_hat: hats.q_hat,
            q_hat_knock: hats.q_hat_knock,
            s: hats.v_hat.sqrt(),
            s_knock: hats.v_hat_knock.sqrt(),
            z_th,
            integrator,
        }
    }

    /// `P_eta(|w| > c)` for `c >= 0`.
    fn exceed(&self, a: f64, c: f64) -> f64 {
        let edge = self.lambda + self.q_hat * c;
        if self.s == 0.0 {
            return if a.abs() > edge { 1.0 } else { 0.0 };
        }
        gauss_upper_tail((edge - a) / self.s) + gauss_upper_tail((edge + a) / self.s)
    }

    pub fn prob(&self, a: f64) -> f64 {
        let z = self.z_th;
        if self.s_knock == 0.0 {
            return self.exceed(a, z);
        }
        let t0 = self.lambda / self.s_knock;
        let atom = 1.0 - 2.0 * gauss_upper_tail(t0);
        let mut total = atom * self.exceed(a, z);
        // |w_knock| = (s_knock t - lambda) / q_hat_knock for t > t0, doubled by symmetry.
        let u_star = (a.abs() - self.lambda) / self.q_hat - z;
        let mut features = Vec::with_capacity(1);
        if u_star > 0.0 {
            let t_star = (self.lambda + self.q_hat_knock * u_star) / self.s_knock;
            let width = self.s * self.q_hat_knock / (self.q_hat * self.s_knock);
            features.push(Feature::smooth(t_star, width));
        }
        total += 2.0
            * self.integrator.tail(t0, &features, |t| {
                let w_knock = (self.s_knock * t - self.lambda) / self.q_hat_knock;
                self.exceed(a, z + w_knock)
            });
        total.clamp(0.0, 1.0)
    }
}

pub fn dko_selection_probability(xi: f64, w0: f64, z_th: f64, sol: &DkoSolution) -> f64 {
    let integrator = GaussianIntegrator::default();
    let h = &sol.hats;
    let a = h.m_hat * w0 + h.chi_hat.sqrt() * xi;
    LcdSelection::new(h, sol.config.lambda, z_th, &integrator).prob(a)
}

fn branch_variances(sol: &DkoSolution) -> (f64, f64) {
    let h = &sol.hats;
    (h.chi_hat, h.m_hat * h.m_hat + h.chi_hat)
}

pub fn dko_tpr_fdr(sol: &DkoSolution, thresholds: &SelectionThresholds) -> (f64, f64) {
    if thresholds.pi_th >= 1.0 {
        return (0.0, 0.0);
    }
    let integrator = GaussianIntegrator::default();
    let sel = LcdSelection::new(&sol.hats, sol.config.lambda, thresholds.z_th, &integrator);
    let region = critical_field(|a| sel.prob(a), thresholds.pi_th);
    let (var_null, var_signal) = branch_variances(sol);
    region_rates(region, var_null, var_signal, sol.config.rho)
}

/// Rates of a single knockoff draw: averages of the selection probability itself.
pub fn vanilla_ko_tpr_fdr(sol: &DkoSolution, z_th: f64) -> (f64, f64) {
    let integrator = GaussianIntegrator::default();
    let sel = LcdSelection::new(&sol.hats, sol.config.lambda, z_th, &integrator);
    let (var_null, var_signal) = branch_variances(sol);
    let edge = sol.config.lambda + sol.hats.q_hat * z_th;
    let s = sol.hats.v_hat.sqrt();
    let mass = |var: f64| {
        if var <= 0.0 {
            return sel.prob(0.0);
        }
        let sigma = var.sqrt();
        let features = [Feature::smooth(edge / sigma, s / sigma)];
        2.0 * integrator.tail(0.0, &features, |t| sel.prob(sigma * t))
    };
    let rho = sol.config.rho;
    let null = if rho < 1.0 { mass(var_null) } else { 0.0 };
    let signal = if rho > 0.0 { mass(var_signal) } else { 0.0 };
    rates_from_masses(null, signal, rho)
}

/// Single-draw fresh-sample error plus the variance the knockoff coefficient
/// injects into the residual.
pub fn dko_prediction_error(sol: &DkoSolution) -> f64 {
    let o = &sol.order;
    (o.q + o.v) - 2.0 * o.m + sol.config.rho + sol.config.delta + o.v_knock
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::special_math::{gauss_hermite_expect, soft_threshold, QuadratureRule};

    fn cfg() -> ProblemConfig {
        ProblemConfig::new(2.5, 0.3, 0.01, 0.1, 1.0)
    }

    fn zero() -> DkoOrderParams {
        DkoOrderParams { q: 0.0, m: 0.0, chi: 0.0, v: 0.0, v_knock: 0.0, chi_knock: 0.0 }
    }

    #[test]
    fn hat_update_examples() {
        let h = dko_hat_update(&zero(), &ProblemConfig::new(2.0, 0.3, 0.01, 0.1, 1.0)).unwrap();
        assert_eq!(h.q_hat, 2.0);
        assert!((h.chi_hat - 0.62).abs() < 1e-14);
        assert_eq!(h.v_hat, 0.0);
        assert!((h.v_hat_knock - 0.62).abs() < 1e-14);

        let h = dko_hat_update(&zero(), &ProblemConfig::new(2.0, 0.0, 0.0, 0.1, 1.0)).unwrap();
        assert_eq!((h.chi_hat, h.v_hat, h.v_hat_knock), (0.0, 0.0, 0.0));

        let o = DkoOrderParams { chi: 1.0, chi_knock: 1.0, ..zero() };
        assert_eq!(dko_hat_update(&o, &ProblemConfig::new(3.0, 0.3, 0.0, 0.1, 1.0)).unwrap().q_hat, 1.0);

        let bad = DkoOrderParams { chi: -1.0, chi_knock: -0.5, ..zero() };
        assert!(dko_hat_update(&bad, &cfg()).is_err());
    }

    #[test]
    fn order_update_limits() {
        let hats = DkoHatParams { q_hat: 1.0, q_hat_knock: 1.0, m_hat: 1.0, chi_hat: 0.5, v_hat: 0.2, v_hat_knock: 0.7 };
        let o = dko_order_update(&hats, &cfg().with_lambda(100.0)).unwrap();
        assert!(o.to_vec().iter().all(|x| x.abs() < 1e-12));

        let quiet = DkoHatParams { v_hat_knock: 0.0, ..hats };
        let o = dko_order_update(&quiet, &cfg()).unwrap();
        assert_eq!((o.v_knock, o.chi_knock), (0.0, 0.0));

        let (v_knock, chi_knock) = knockoff_moments(0.7, 2.0, 0.0);
        assert!((chi_knock - 0.5).abs() < 1e-15);
        assert!((v_knock - 0.7 / 4.0).abs() < 1e-15);
    }

    #[test]
    fn converges_and_keeps_identities() {
        let sol = solve_dko(&cfg(), &SolverSettings::default()).unwrap();
        assert!(sol.report.converged);
        let h = sol.hats;
        assert_eq!(h.q_hat, h.q_hat_knock);
        assert_eq!(h.v_hat_knock, h.chi_hat + h.v_hat);
        assert!(sol.order.v_knock > 0.0 && sol.order.v > 0.0);
    }

    #[test]
    fn knockoff_statistics_depend_only_on_its_field() {
        let sol = solve_dko(&cfg(), &SolverSettings::default()).unwrap();
        let (v_knock, chi_knock) = knockoff_moments(sol.hats.v_hat_knock, sol.hats.q_hat_knock, sol.config.lambda);
        let o = dko_order_update(&sol.hats, &ProblemConfig { rho: 0.7, delta: 0.5, ..cfg() }).unwrap();
        assert_eq!((o.v_knock, o.chi_knock), (v_knock, chi_knock));
    }

    #[test]
    fn knockoff_mean_vanishes() {
        let rule = QuadratureRule::gauss_hermite(200).unwrap();
        let s = 0.8f64;
        let mean = gauss_hermite_expect(|e| soft_threshold(s * e, 0.3) / 1.7, &rule);
        assert!(mean.abs() < 1e-10);
        assert_eq!(moments_unchecked(0.0, s * s, 0.3, 1.7).mean, 0.0);
    }

    #[test]
    fn selection_probability_limits() {
        let integ = GaussianIntegrator::default();
        let det = DkoHatParams { q_hat: 1.0, q_hat_knock: 1.0, m_hat: 1.0, chi_hat: 0.0, v_hat: 0.0, v_hat_knock: 0.0 };
        let sel = LcdSelection::new(&det, 0.5, 0.0, &integ);
        assert_eq!(sel.prob(0.4), 0.0);
        assert_eq!(sel.prob(0.6), 1.0);

        let sol = solve_dko(&cfg(), &SolverSettings::default()).unwrap();
        assert!(dko_selection_probability(0.3, 1.0, 1e6, &sol) < 1e-300);
        let mut prev = 1.0;
        for k in 0..10 {
            let p = dko_selection_probability(0.3, 1.0, k as f64 * 0.05, &sol);
            assert!((0.0..=1.0).contains(&p) && p <= prev + 1e-12);
            prev = p;
        }
        let plus = dko_selection_probability(0.7, 0.0, 0.05, &sol);
        let minus = dko_selection_probability(-0.7, 0.0, 0.05, &sol);
        assert!((plus - minus).abs() < 1e-14);
    }

    #[test]
    fn rates_monotone_and_conventions() {
        let sol = solve_dko(&cfg(), &SolverSettings::default()).unwrap();
        assert_eq!(dko_tpr_fdr(&sol, &SelectionThresholds { z_th: 0.05, pi_th: 1.0 }), (0.0, 0.0));
        let mut prev = 1.0;
        for k in 0..8 {
            let (tpr, _) = dko_tpr_fdr(&sol, &SelectionThresholds { z_th: k as f64 * 0.02, pi_th: 0.15 });
            assert!(tpr <= prev + 1e-9);
            prev = tpr;
        }
        let (tpr, fdr) = vanilla_ko_tpr_fdr(&sol, 1e6);
        assert!(tpr < 1e-300 && fdr == 0.0);
        let full = solve_dko(&ProblemConfig { rho: 1.0, ..cfg() }, &SolverSettings::default()).unwrap();
        assert_eq!(dko_tpr_fdr(&full, &SelectionThresholds::default()).1, 0.0);
        assert_eq!(vanilla_ko_tpr_fdr(&full, 0.05).1, 0.0);
    }
}
