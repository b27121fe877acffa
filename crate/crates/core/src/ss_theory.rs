//! Stability selection: the self-consistent system for the bootstrap-averaged
//! lasso, its selection probability and TPR/FDR, and the vanilla lasso as the
//! special case of a single deterministic resample.

use serde::{Deserialize, Serialize};

use crate::detection::{critical_field, region_rates};
use crate::error::{Error, Result};
use crate::field::{field_order, FieldHats};
use crate::fixed_point::{solve_damped, FixedPointReport, SolverSettings};
use crate::problem::ProblemConfig;
use crate::special_math::soft_threshold::moments_unchecked;
use crate::special_math::{GaussianIntegrator, PoissonTable, DEFAULT_MASS_TOL};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SsOrderParams {
    pub q: f64,
    pub m: f64,
    pub chi: f64,
    pub v: f64,
}

impl SsOrderParams {
    fn to_vec(self) -> [f64; 4] {
        [self.q, self.m, self.chi, self.v]
    }

    fn from_slice(x: &[f64]) -> Self {
        SsOrderParams { q: x[0], m: x[1], chi: x[2], v: x[3] }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SsHatParams {
    pub q_hat: f64,
    pub m_hat: f64,
    pub chi_hat: f64,
    pub v_hat: f64,
}

impl SsHatParams {
    fn to_vec(self) -> [f64; 4] {
        [self.q_hat, self.m_hat, self.chi_hat, self.v_hat]
    }

    fn from_slice(x: &[f64]) -> Self {
        SsHatParams { q_hat: x[0], m_hat: x[1], chi_hat: x[2], v_hat: x[3] }
    }
}

/// Distribution of the number of copies of a sample in one resample.
#[derive(Debug, Clone)]
pub enum Resampling {
    /// Poisson(mu_b) multiplicities of the bootstrap.
    Bootstrap(PoissonTable),
    /// Every sample exactly once: the plain lasso.
    Single,
}

impl Resampling {
    fn moments(&self, chi: f64) -> Result<(f64, f64)> {
        match self {
            Resampling::Single => {
                let f1 = 1.0 / (1.0 + chi);
                Ok((f1, f1 * f1))
            }
            Resampling::Bootstrap(table) => {
                let g = |c: usize| {
                    let c = c as f64;
                    c / (1.0 + chi * c)
                };
                let f1 = table.expect(g)?;
                let f2 = table.expect(|c| g(c).powi(2))?;
                Ok((f1, f2))
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SsSolution {
    pub config: ProblemConfig,
    pub order: SsOrderParams,
    pub hats: SsHatParams,
    pub report: FixedPointReport,
}

/// The stability-selection system at fixed numerics.
#[derive(Debug, Clone)]
pub struct SsTheory {
    config: ProblemConfig,
    resampling: Resampling,
    integrator: GaussianIntegrator,
}

impl SsTheory {
    pub fn new(config: ProblemConfig) -> Result<Self> {
        Self::with_numerics(config, GaussianIntegrator::default(), DEFAULT_MASS_TOL)
    }

    pub fn with_numerics(config: ProblemConfig, integrator: GaussianIntegrator, mass_tol: f64) -> Result<Self> {
        config.validate()?;
        let resampling = Resampling::Bootstrap(PoissonTable::new(config.mu_b, mass_tol)?);
        Ok(SsTheory { config, resampling, integrator })
    }

    /// Single-resample system of the plain lasso; `mu_b` is ignored.
    pub fn lasso(config: ProblemConfig) -> Result<Self> {
        Self::lasso_with_numerics(config, GaussianIntegrator::default())
    }

    pub fn lasso_with_numerics(config: ProblemConfig, integrator: GaussianIntegrator) -> Result<Self> {
        config.validate()?;
        Ok(SsTheory { config, resampling: Resampling::Single, integrator })
    }

    pub fn config(&self) -> &ProblemConfig {
        &self.config
    }

    pub fn is_lasso(&self) -> bool {
        matches!(self.resampling, Resampling::Single)
    }

    pub fn hat_update(&self, order: &SsOrderParams) -> Result<SsHatParams> {
        let SsOrderParams { q, m, chi, v } = *order;
        if ![q, m, chi, v].iter().all(|x| x.is_finite()) {
            return Err(Error::domain("order parameters must be finite"));
        }
        if chi < 0.0 {
            return Err(Error::domain(format!("chi must be non-negative, got {chi}")));
        }
        let ProblemConfig { alpha, rho, delta, .. } = self.config;
        let (f1, f2) = self.resampling.moments(chi)?;
        let mse = q - 2.0 * m + rho + delta;
        let hat = alpha * f1;
        let chi_hat = (alpha * f1 * f1 * mse).max(0.0);
        let v_hat = match self.resampling {
            Resampling::Single => 0.0,
            Resampling::Bootstrap(_) => (alpha * ((f2 - f1 * f1) * mse + v * f2)).max(0.0),
        };
        Ok(SsHatParams { q_hat: hat, m_hat: hat, chi_hat, v_hat })
    }

    pub fn order_update(&self, hats: &SsHatParams) -> Result<SsOrderParams> {
        check_hats(hats.q_hat, &[hats.m_hat, hats.chi_hat, hats.v_hat])?;
        let field = FieldHats { q_hat: hats.q_hat, m_hat: hats.m_hat, chi_hat: hats.chi_hat, v_hat: hats.v_hat };
        let o = field_order(&field, self.config.lambda, self.config.rho, &self.integrator);
        Ok(SsOrderParams { q: o.q, m: o.m, chi: o.chi, v: o.v })
    }

    pub fn initial_order(&self) -> SsOrderParams {
        let rho = self.config.rho;
        let v = if self.is_lasso() { 0.0 } else { 0.1 };
        SsOrderParams { q: rho, m: rho / 2.0, chi: 1.0, v }
    }

    /// One pass of the composite map on the state `[order, hats]`.
    pub fn composite_update(&self, state: &[f64]) -> Result<Vec<f64>> {
        let order = SsOrderParams::from_slice(&state[..4]);
        let hats = self.hat_update(&order)?;
        let next = self.order_update(&hats)?;
        Ok(next.to_vec().into_iter().chain(hats.to_vec()).collect())
    }

    pub fn solve(&self, settings: &SolverSettings) -> Result<SsSolution> {
        let order = self.initial_order();
        let hats = self.hat_update(&order)?;
        let init: Vec<f64> = order.to_vec().into_iter().chain(hats.to_vec()).collect();
        // q, chi and (for the bootstrap) v are floored; the lasso's v stays exactly 0.
        let clip = [true, false, true, !self.is_lasso(), false, false, false, false];
        let report = solve_damped(|x| self.composite_update(x), &init, &clip, settings)?;
        Ok(SsSolution {
            config: self.config,
            order: SsOrderParams::from_slice(&report.solution[..4]),
            hats: SsHatParams::from_slice(&report.solution[4..]),
            report,
        })
    }
}

pub(crate) fn check_hats(q_hat: f64, rest: &[f64]) -> Result<()> {
    if !(q_hat > 0.0) || !q_hat.is_finite() {
        return Err(Error::domain(format!("q_hat must be positive, got {q_hat}")));
    }
    if !rest.iter().all(|x| x.is_finite()) {
        return Err(Error::domain("hat parameters must be finite"));
    }
    if rest.iter().skip(1).any(|&x| x < 0.0) {
        return Err(Error::domain("hat variances must be non-negative"));
    }
    Ok(())
}

pub fn ss_hat_update(order: &SsOrderParams, config: &ProblemConfig) -> Result<SsHatParams> {
    SsTheory::new(*config)?.hat_update(order)
}

pub fn ss_order_update(hats: &SsHatParams, config: &ProblemConfig) -> Result<SsOrderParams> {
    SsTheory::new(*config)?.order_update(hats)
}

pub fn solve_ss(config: &ProblemConfig, settings: &SolverSettings) -> Result<SsSolution> {
    SsTheory::new(*config)?.solve(settings)
}

pub fn vanilla_lasso_solution(config: &ProblemConfig, settings: &SolverSettings) -> Result<SsSolution> {
    SsTheory::lasso(*config)?.solve(settings)
}

/// Probability over the resampling noise that the coordinate is selected.
pub fn ss_selection_probability(xi: f64, w0: f64, sol: &SsSolution) -> f64 {
    let h = &sol.hats;
    let a = h.m_hat * w0 + h.chi_hat.sqrt() * xi;
    field_selection(a, h, sol.config.lambda)
}

fn field_selection(a: f64, h: &SsHatParams, lambda: f64) -> f64 {
    moments_unchecked(a, h.v_hat, lambda, h.q_hat).nonzero_prob
}

/// `(TPR, FDR)` of selecting coordinates whose selection probability exceeds `pi_th`.
pub fn ss_tpr_fdr(sol: &SsSolution, pi_th: f64) -> (f64, f64) {
    if pi_th >= 1.0 {
        return (0.0, 0.0);
    }
    let h = &sol.hats;
    let lambda = sol.config.lambda;
    let region = critical_field(|a| field_selection(a, h, lambda), pi_th);
    region_rates(region, h.chi_hat, h.m_hat * h.m_hat + h.chi_hat, sol.config.rho)
}

/// Expected fresh-sample squared error of one resampled-lasso estimate.
pub fn ss_prediction_error(sol: &SsSolution) -> f64 {
    let o = &sol.order;
    (o.q + o.v) - 2.0 * o.m + sol.config.rho + sol.config.delta
}
