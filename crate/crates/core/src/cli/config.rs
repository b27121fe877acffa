//! Run configuration: a TOML file whose every key is optional, overridden by
//! command-line flags.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::dko_theory::SelectionThresholds;
use crate::error::{Error, Result};
use crate::fixed_point::SolverSettings;
use crate::problem::ProblemConfig;
use crate::simulator::LassoSettings;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SimulationSection {
    pub n: usize,
    pub repeats: usize,
    pub realizations: usize,
    pub seed: u64,
}

impl Default for SimulationSection {
    fn default() -> Self {
        SimulationSection { n: 64, repeats: 128, realizations: 200, seed: 0 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PhaseSection {
    pub rho_grid: Vec<f64>,
}

impl Default for PhaseSection {
    fn default() -> Self {
        PhaseSection { rho_grid: (1..20).map(|k| k as f64 * 0.05).collect() }
    }
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    /// Worker threads; all cores when absent.
    pub workers: Option<usize>,
    /// λ values for `solve` and `simulate`; `[problem].lambda` when absent.
    pub lambda_grid: Option<Vec<f64>>,
    pub problem: ProblemConfig,
    pub thresholds: SelectionThresholds,
    pub simulation: SimulationSection,
    pub solver: SolverSettings,
    pub lasso: LassoSettings,
    pub phase: PhaseSection,
}

impl RunConfig {
    pub fn from_toml(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| Error::Config(e.to_string()))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::Config(format!("cannot read {}: {e}", path.display())))?;
        Self::from_toml(&text)
    }

    /// The λ grid, sorted ascending without duplicates.
    pub fn lambdas(&self) -> Result<Vec<f64>> {
        let mut grid = self.lambda_grid.clone().unwrap_or_else(|| vec![self.problem.lambda]);
        if grid.is_empty() {
            return Err(Error::Config("lambda grid is empty".into()));
        }
        if grid.iter().any(|&l| !(l > 0.0 && l.is_finite())) {
            return Err(Error::Config("lambda values must be positive and finite".into()));
        }
        grid.sort_by(f64::total_cmp);
        grid.dedup();
        Ok(grid)
    }

    pub fn validate(&self) -> Result<()> {
        self.problem.validate().map_err(|e| Error::Config(e.to_string()))?;
        self.solver.validate().map_err(|e| Error::Config(e.to_string()))?;
        self.lasso.validate().map_err(|e| Error::Config(e.to_string()))?;
        let t = self.thresholds;
        if !(t.z_th >= 0.0 && t.z_th.is_finite()) {
            return Err(Error::Config(format!("z_th must be non-negative, got {}", t.z_th)));
        }
        if !(0.0..=1.0).contains(&t.pi_th) {
            return Err(Error::Config(format!("pi_th must lie in [0, 1], got {}", t.pi_th)));
        }
        if self.workers == Some(0) {
            return Err(Error::Config("workers must be positive".into()));
        }
        self.lambdas()?;
        Ok(())
    }
}

/// Parses `a,b,c` as a list or `lo:hi:count` as `count` log-spaced points.
pub fn parse_lambda_grid(text: &str) -> std::result::Result<Vec<f64>, String> {
    let num = |s: &str| s.trim().parse::<f64>().map_err(|e| format!("bad number {s:?}: {e}"));
    if text.contains(':') {
        let parts: Vec<&str> = text.split(':').collect();
        let [lo, hi, count] = parts.as_slice() else {
            return Err(format!("expected lo:hi:count, got {text:?}"));
        };
        let (lo, hi) = (num(lo)?, num(hi)?);
        let count: usize = count.trim().parse().map_err(|e| format!("bad count {count:?}: {e}"))?;
        if !(lo > 0.0 && hi >= lo) || count == 0 {
            return Err(format!("need 0 < lo <= hi and count >= 1, got {text:?}"));
        }
        if count == 1 {
            return Ok(vec![lo]);
        }
        let (a, b) = (lo.ln(), hi.ln());
        Ok((0..count).map(|k| (a + (b - a) * k as f64 / (count - 1) as f64).exp()).collect())
    } else {
        text.split(',').map(num).collect()
    }
}
