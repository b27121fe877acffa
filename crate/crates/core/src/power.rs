//! TPR-versus-FDR curves of each method at a fixed regularization, traced by
//! sweeping the method's own selection threshold.

use serde::{Deserialize, Serialize};

use crate::detection::{PowerCurve, PowerPoint};
use crate::dko_theory::{dko_tpr_fdr, solve_dko, vanilla_ko_tpr_fdr, SelectionThresholds};
use crate::error::Result;
use crate::fixed_point::SolverSettings;
use crate::problem::ProblemConfig;
use crate::ss_theory::{solve_ss, ss_tpr_fdr, vanilla_lasso_solution};
use crate::tuning::{optimal_lambda, Estimator, LAMBDA_RANGE};

/// Selection probability threshold used by the derandomized knockoff curve.
pub const DKO_CURVE_PI_TH: f64 = 0.025;
const PI_GRID: usize = 1000;
const Z_STEP: f64 = 0.005;
const Z_POINTS: usize = 400;
const LASSO_POINTS: usize = 300;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum CurveMethod {
    Ss,
    Dko,
    /// Single-draw knockoff filter on the derandomized system.
    Ko,
    Lasso,
}

impl CurveMethod {
    /// The estimator whose prediction error fixes λ.
    pub fn estimator(self) -> Estimator {
        match self {
            CurveMethod::Ss => Estimator::Ss,
            CurveMethod::Dko | CurveMethod::Ko => Estimator::Dko,
            CurveMethod::Lasso => Estimator::Lasso,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MethodCurve {
    pub method: CurveMethod,
    /// λ at which the threshold was swept; `None` for the lasso, which sweeps λ.
    pub lambda: Option<f64>,
    pub curve: PowerCurve,
}

/// Curve of `method` under `config`. For every method except the lasso, λ is
/// `lambda` if given and otherwise the prediction-error minimizer.
pub fn power_curve(
    method: CurveMethod,
    config: &ProblemConfig,
    lambda: Option<f64>,
    settings: &SolverSettings,
) -> Result<MethodCurve> {
    config.validate()?;
    if method == CurveMethod::Lasso {
        return lasso_curve(config, settings);
    }
    let lambda = match lambda {
        Some(l) => l,
        None => optimal_lambda(method.estimator(), config, settings)?.lambda,
    };
    let config = config.with_lambda(lambda);
    let points = match method {
        CurveMethod::Ss => {
            let sol = solve_ss(&config, settings)?;
            (1..PI_GRID)
                .map(|k| {
                    let pi_th = k as f64 / PI_GRID as f64;
                    let (tpr, fdr) = ss_tpr_fdr(&sol, pi_th);
                    PowerPoint { threshold: pi_th, fdr, tpr }
                })
                .collect()
        }
        CurveMethod::Dko | CurveMethod::Ko => {
            let sol = solve_dko(&config, settings)?;
            (0..=Z_POINTS)
                .map(|k| {
                    let z_th = k as f64 * Z_STEP;
                    let (tpr, fdr) = if method == CurveMethod::Dko {
                        dko_tpr_fdr(&sol, &SelectionThresholds { z_th, pi_th: DKO_CURVE_PI_TH })
                    } else {
                        vanilla_ko_tpr_fdr(&sol, z_th)
                    };
                    PowerPoint { threshold: z_th, fdr, tpr }
                })
                .collect()
        }
        CurveMethod::Lasso => unreachable!(),
    };
    Ok(MethodCurve { method, lambda: Some(lambda), curve: PowerCurve::new(points) })
}

fn lasso_curve(config: &ProblemConfig, settings: &SolverSettings) -> Result<MethodCurve> {
    let (lo, hi) = (LAMBDA_RANGE.0.ln(), LAMBDA_RANGE.1.ln());
    let points = (0..LASSO_POINTS)
        .map(|k| {
            let lambda = (lo + (hi - lo) * k as f64 / (LASSO_POINTS - 1) as f64).exp();
            let sol = vanilla_lasso_solution(&config.with_lambda(lambda), settings)?;
            // Selection is deterministic, so any threshold in (0, 1) picks the support.
            let (tpr, fdr) = ss_tpr_fdr(&sol, 0.5);
            Ok(PowerPoint { threshold: lambda, fdr, tpr })
        })
        .collect::<Result<_>>()?;
    Ok(MethodCurve { method: CurveMethod::Lasso, lambda: None, curve: PowerCurve::new(points) })
}
