//! Finite-size Monte Carlo counterpart of the theory: synthetic data, a
//! coordinate-descent lasso, bootstrap and knockoff randomization, and
//! empirical selection probabilities, order parameters and TPR/FDR.
//!
//! Every random stream is seeded from a master seed through [`derive_seed`],
//! so a realization can be reproduced in isolation and results do not depend
//! on the number of worker threads.

mod data;
mod experiment;
mod lasso;

pub use data::{
    bootstrap_counts, derive_seed, generate_dataset, generate_knockoff, sample_rows, Dataset, DesignMatrix,
};
pub use experiment::{
    dko_empirical, dko_empirical_path, empirical_tpr_fdr, lasso_empirical_path, realization_seeds, run_experiment,
    run_sweep, ss_empirical, ss_empirical_path, DatasetRecord, EmpiricalResult, ExperimentPlan, RealizationSeeds,
    Stat,
};
pub use lasso::{lasso_coordinate_descent, LassoFit, LassoProblem, LassoSettings};
