//! Asymptotic theory and finite-size simulation of ensemble variable
//! selection with the lasso: stability selection (bootstrap-averaged lasso)
//! and derandomized knockoffs.
//!
//! The theory modules solve the self-consistent equations for the order
//! parameters of each method and turn them into selection probabilities,
//! TPR/FDR curves and noiseless recovery thresholds. The [`simulator`]
//! reproduces the same quantities by Monte Carlo at finite size.

pub mod cli;
pub mod detection;
pub mod dko_theory;
pub mod error;
mod field;
pub mod fixed_point;
pub mod power;
pub mod problem;
pub mod recon_limit;
pub mod simulator;
pub mod special_math;
pub mod ss_theory;
pub mod tuning;

pub use detection::{PowerCurve, PowerPoint, SelectedRegion};
pub use dko_theory::{
    dko_hat_update, dko_order_update, dko_prediction_error, dko_selection_probability, dko_tpr_fdr,
    solve_dko, vanilla_ko_tpr_fdr, DkoHatParams, DkoOrderParams, DkoSolution, SelectionThresholds,
};
pub use error::{Error, Result};
pub use fixed_point::{solve_damped, FixedPointReport, SolverSettings};
pub use power::{power_curve, CurveMethod, MethodCurve};
pub use problem::ProblemConfig;
pub use recon_limit::{
    effective_dims, perfect_recovery_condition, phase_boundary_curve, solve_v, Algorithm, EffectiveDims,
    PhasePoint,
};
pub use ss_theory::{
    solve_ss, ss_hat_update, ss_order_update, ss_prediction_error, ss_selection_probability, ss_tpr_fdr,
    vanilla_lasso_solution, SsHatParams, SsOrderParams, SsSolution, SsTheory,
};
pub use tuning::{optimal_lambda, Estimator, LambdaOptimum};
