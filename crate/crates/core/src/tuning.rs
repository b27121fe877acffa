//! Choice of the regularization strength by minimizing the asymptotic
//! prediction error.

use serde::{Deserialize, Serialize};

use crate::dko_theory::{dko_prediction_error, solve_dko};
use crate::error::Result;
use crate::fixed_point::SolverSettings;
use crate::problem::ProblemConfig;
use crate::ss_theory::{solve_ss, ss_prediction_error, vanilla_lasso_solution};

pub const LAMBDA_RANGE: (f64, f64) = (1e-3, 10.0);
pub const LOG_LAMBDA_TOL: f64 = 1e-3;

/// Which estimator's prediction error to minimize.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Estimator {
    Ss,
    Dko,
    Lasso,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LambdaOptimum {
    pub lambda: f64,
    pub prediction_error: f64,
    pub evaluations: usize,
}

/// Golden-section minimization of `f(exp(x))` over `x` in `[ln lo, ln hi]`.
pub fn golden_section_log<F>(mut f: F, lo: f64, hi: f64, tol: f64) -> Result<LambdaOptimum>
where
    F: FnMut(f64) -> Result<f64>,
{
    let ratio = (5.0f64.sqrt() - 1.0) / 2.0;
    let (mut a, mut b) = (lo.ln(), hi.ln());
    let mut c = b - ratio * (b - a);
    let mut d = a + ratio * (b - a);
    let mut fc = f(c.exp())?;
    let mut fd = f(d.exp())?;
    let mut evaluations = 2;
    while b - a > tol {
        if fc <= fd {
            b = d;
            d = c;
            fd = fc;
            c = b - ratio * (b - a);
            fc = f(c.exp())?;
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + ratio * (b - a);
            fd = f(d.exp())?;
        }
        evaluations += 1;
    }
    let (x, fx) = if fc <= fd { (c, fc) } else { (d, fd) };
    Ok(LambdaOptimum { lambda: x.exp(), prediction_error: fx, evaluations })
}

pub fn prediction_error(estimator: Estimator, config: &ProblemConfig, settings: &SolverSettings) -> Result<f64> {
    Ok(match estimator {
        Estimator::Ss => ss_prediction_error(&solve_ss(config, settings)?),
        Estimator::Lasso => ss_prediction_error(&vanilla_lasso_solution(config, settings)?),
        Estimator::Dko => dko_prediction_error(&solve_dko(config, settings)?),
    })
}

/// `lambda*` of the given estimator; `config.lambda` is ignored.
pub fn optimal_lambda(estimator: Estimator, config: &ProblemConfig, settings: &SolverSettings) -> Result<LambdaOptimum> {
    golden_section_log(
        |lambda| prediction_error(estimator, &config.with_lambda(lambda), settings),
        LAMBDA_RANGE.0,
        LAMBDA_RANGE.1,
        LOG_LAMBDA_TOL,
    )
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn golden_section_finds_quadratic_minimum() {
        let opt = golden_section_log(|x| Ok((x.ln() - 0.3).powi(2)), 1e-3, 10.0, 1e-6).unwrap();
        assert!((opt.lambda.ln() - 0.3).abs() < 1e-5);
        let edge = golden_section_log(|x| Ok(x), 1e-3, 10.0, 1e-6).unwrap();
        assert!(edge.lambda < 1.01e-3);
    }

    #[test]
    fn lasso_optimum_is_interior_and_minimal() {
        let config = ProblemConfig::new(2.0, 0.5, 0.01, 0.1, 1.0);
        let s = SolverSettings::default();
        let opt = optimal_lambda(Estimator::Lasso, &config, &s).unwrap();
        assert!(opt.lambda > LAMBDA_RANGE.0 * 1.1 && opt.lambda < LAMBDA_RANGE.1 / 1.1);
        for factor in [0.5, 2.0] {
            let other = prediction_error(Estimator::Lasso, &config.with_lambda(opt.lambda * factor), &s).unwrap();
            assert!(other >= opt.prediction_error - 1e-12);
        }
    }
}
