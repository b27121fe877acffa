//! Theory-versus-simulation verdicts.

use serde::{Deserialize, Serialize};

use super::tables::TheoryRow;
use crate::error::{Error, Result};
use crate::simulator::{EmpiricalResult, Stat};
use crate::tuning::Estimator;

/// Per-cell pass threshold on `|z|`.
pub const Z_PASS: f64 = 4.0;
/// Threshold no cell may exceed.
pub const Z_HARD: f64 = 6.0;
/// Fraction of cells that must pass at [`Z_PASS`].
pub const PASS_FRACTION: f64 = 0.9;
/// Absolute tolerance used in place of `|z|` when the standard error is zero.
pub const ZERO_SE_TOL: f64 = 1e-8;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Verdict {
    pub statistic: String,
    pub lambda: f64,
    pub theory: f64,
    pub empirical: f64,
    pub se: f64,
    /// `|theory - empirical| / se`; infinite for a mismatch at zero SE.
    pub z: f64,
    pub pass: bool,
}

impl Verdict {
    pub fn new(statistic: &str, lambda: f64, theory: f64, stat: Stat) -> Self {
        let diff = (theory - stat.mean).abs();
        let z = if stat.se > 0.0 {
            diff / stat.se
        } else if diff <= ZERO_SE_TOL {
            0.0
        } else {
            f64::INFINITY
        };
        Verdict { statistic: statistic.into(), lambda, theory, empirical: stat.mean, se: stat.se, z, pass: z <= Z_PASS }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Summary {
    pub cells: usize,
    pub within_pass: usize,
    pub within_hard: usize,
    pub max_z: f64,
}

impl Summary {
    pub fn of(verdicts: &[Verdict]) -> Self {
        Summary {
            cells: verdicts.len(),
            within_pass: verdicts.iter().filter(|v| v.z <= Z_PASS).count(),
            within_hard: verdicts.iter().filter(|v| v.z <= Z_HARD).count(),
            max_z: verdicts.iter().map(|v| v.z).fold(0.0, f64::max),
        }
    }

    /// At least [`PASS_FRACTION`] of cells within [`Z_PASS`] and all within [`Z_HARD`].
    pub fn passed(&self) -> bool {
        self.cells > 0
            && self.within_pass as f64 >= PASS_FRACTION * self.cells as f64
            && self.within_hard == self.cells
    }
}

fn close(a: f64, b: f64, rel: f64) -> bool {
    (a - b).abs() <= rel * a.abs().max(b.abs())
}

/// Statistics compared for an estimator.
pub fn compared_statistics(estimator: Estimator) -> &'static [&'static str] {
    match estimator {
        Estimator::Dko => &["q", "m", "v", "v_knock", "tpr", "fdr"],
        Estimator::Ss | Estimator::Lasso => &["q", "m", "v", "tpr", "fdr"],
    }
}

/// Matches rows to results by λ and produces one verdict per statistic and λ.
pub fn compare(theory: &[TheoryRow], empirical: &[EmpiricalResult]) -> Result<Vec<Verdict>> {
    let mismatch = |msg: String| Error::Config(format!("theory and simulation do not match: {msg}"));
    if theory.len() != empirical.len() {
        return Err(mismatch(format!("{} theory rows, {} simulated λ values", theory.len(), empirical.len())));
    }
    let mut rows: Vec<&TheoryRow> = theory.iter().collect();
    rows.sort_by(|a, b| a.lambda.total_cmp(&b.lambda));
    let mut sims: Vec<&EmpiricalResult> = empirical.iter().collect();
    sims.sort_by(|a, b| a.config.lambda.total_cmp(&b.config.lambda));
    let mut out = Vec::new();
    for (row, sim) in rows.into_iter().zip(sims) {
        let lambda = sim.config.lambda;
        if !close(row.lambda, lambda, 1e-9) {
            return Err(mismatch(format!("λ grids differ ({} vs {lambda})", row.lambda)));
        }
        if row.theory != sim.algorithm {
            return Err(mismatch(format!("{:?} theory against {:?} simulation", row.theory, sim.algorithm)));
        }
        let c = &sim.config;
        let mut same = close(row.alpha, c.alpha, 1e-12) && close(row.rho, c.rho, 1e-12) && close(row.delta, c.delta, 1e-12);
        match sim.algorithm {
            Estimator::Ss => same &= close(row.mu_b, c.mu_b, 1e-12) && close(row.pi_th, sim.thresholds.pi_th, 1e-12),
            Estimator::Dko => {
                same &= close(row.pi_th, sim.thresholds.pi_th, 1e-12)
                    && row.z_th.is_some_and(|z| close(z, sim.thresholds.z_th, 1e-12))
            }
            Estimator::Lasso => {}
        }
        if !same {
            return Err(mismatch(format!("model or threshold parameters differ at λ = {lambda}")));
        }
        for &name in compared_statistics(sim.algorithm) {
            let (theory, stat) = match name {
                "q" => (row.q, sim.q),
                "m" => (row.m, sim.m),
                "v" => (row.v, sim.v),
                "v_knock" => (
                    row.v_knock.ok_or_else(|| mismatch("theory row lacks v_knock".into()))?,
                    sim.v_knock.ok_or_else(|| mismatch("simulation lacks v_knock".into()))?,
                ),
                "tpr" => (row.tpr, sim.tpr),
                "fdr" => (row.fdr, sim.fdr),
                _ => unreachable!(),
            };
            out.push(Verdict::new(name, lambda, theory, stat));
        }
    }
    Ok(out)
}
