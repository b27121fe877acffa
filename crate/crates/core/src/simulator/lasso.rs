use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use super::data::DesignMatrix;
use crate::error::{Error, Result};
use crate::special_math::soft_threshold;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct LassoSettings {
    /// Largest coordinate change of a full sweep at convergence.
    pub tol: f64,
    pub max_sweeps: usize,
    /// Tolerance of the KKT check run before accepting a solution.
    pub kkt_tol: f64,
}

impl Default for LassoSettings {
    fn default() -> Self {
        LassoSettings { tol: 1e-10, max_sweeps: 100_000, kkt_tol: 1e-8 }
    }
}

impl LassoSettings {
    pub fn validate(&self) -> Result<()> {
        if !(self.tol > 0.0 && self.kkt_tol > 0.0) || self.max_sweeps == 0 {
            return Err(Error::domain("lasso tolerances and sweep budget must be positive"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct LassoFit {
    pub coef: Vec<f64>,
    pub sweeps: usize,
    pub kkt_residual: f64,
}

/// `½ Σ_μ c_μ (y_μ − x_μ·w)² + λ‖w‖₁` with fixed data, solvable at many λ.
///
/// Coordinate updates run on the weighted Gram matrix, so a coordinate that
/// stays at zero costs O(1) and a change costs O(N) independently of M.
#[derive(Debug, Clone)]
pub struct LassoProblem {
    design: DesignMatrix,
    responses: Vec<f64>,
    /// Columns multiplied by the sample weights; `None` for unit weights.
    weighted: Option<DesignMatrix>,
    /// `XᵀCX`, column-major.
    gram: Vec<f64>,
    /// `XᵀCy`.
    xty: Vec<f64>,
}

impl LassoProblem {
    pub fn new(design: DesignMatrix, responses: Vec<f64>, weights: Option<&[f64]>) -> Result<Self> {
        let m = design.rows();
        if responses.len() != m {
            return Err(Error::domain(format!("{} responses for {m} rows", responses.len())));
        }
        if let Some(w) = weights {
            if w.len() != m {
                return Err(Error::domain(format!("{} weights for {m} rows", w.len())));
            }
            if w.iter().any(|&c| !(c >= 0.0) || !c.is_finite()) {
                return Err(Error::domain("weights must be finite and non-negative"));
            }
        }
        let n = design.cols();
        let weighted = match weights {
            Some(w) if w.iter().any(|&c| c != 1.0) => {
                let mut data = Vec::with_capacity(m * n);
                for j in 0..n {
                    data.extend(design.column(j).iter().zip(w).map(|(x, c)| x * c));
                }
                Some(DesignMatrix::from_columns(m, n, data)?)
            }
            _ => None,
        };
        let wx = weighted.as_ref().unwrap_or(&design);
        let mut gram = vec![0.0; n * n];
        for j in 0..n {
            for k in 0..=j {
                let g = dot(wx.column(j), design.column(k));
                gram[j * n + k] = g;
                gram[k * n + j] = g;
            }
        }
        let xty = (0..n).map(|j| dot(wx.column(j), &responses)).collect();
        Ok(LassoProblem { design, responses, weighted, gram, xty })
    }

    pub fn cols(&self) -> usize {
        self.design.cols()
    }

    fn weighted_column(&self, j: usize) -> &[f64] {
        self.weighted.as_ref().unwrap_or(&self.design).column(j)
    }

    fn gram_column(&self, j: usize) -> &[f64] {
        let n = self.cols();
        &self.gram[j * n..(j + 1) * n]
    }

    fn residual(&self, coef: &[f64]) -> Vec<f64> {
        let fit = self.design.mul_vec(coef);
        self.responses.iter().zip(&fit).map(|(y, f)| y - f).collect()
    }

    /// Gradient of the negative smooth part, `XᵀC(y − Xw)`, from the Gram matrix.
    fn correlations(&self, coef: &[f64]) -> Vec<f64> {
        let mut g = self.xty.clone();
        for (j, &w) in coef.iter().enumerate() {
            if w != 0.0 {
                for (gi, &x) in g.iter_mut().zip(self.gram_column(j)) {
                    *gi -= w * x;
                }
            }
        }
        g
    }

    /// Largest violation of the optimality conditions at `coef`, from a
    /// freshly computed residual.
    pub fn kkt_residual(&self, lambda: f64, coef: &[f64]) -> f64 {
        let r = self.residual(coef);
        (0..self.cols())
            .map(|j| {
                let g = dot(self.weighted_column(j), &r);
                if coef[j] != 0.0 {
                    (g - lambda * coef[j].signum()).abs()
                } else {
                    (g.abs() - lambda).max(0.0)
                }
            })
            .fold(0.0, f64::max)
    }

    /// One cyclic pass over `coords`; returns the largest coordinate change.
    fn sweep(&self, lambda: f64, coef: &mut [f64], grad: &mut [f64], coords: impl Iterator<Item = usize>) -> f64 {
        let n = self.cols();
        let mut max_change: f64 = 0.0;
        for j in coords {
            let cj = self.gram[j * n + j];
            if cj <= 0.0 {
                coef[j] = 0.0;
                continue;
            }
            let old = coef[j];
            let new = soft_threshold(grad[j] + cj * old, lambda) / cj;
            let delta = new - old;
            if delta != 0.0 {
                for (gi, &x) in grad.iter_mut().zip(self.gram_column(j)) {
                    *gi -= delta * x;
                }
                coef[j] = new;
                max_change = max_change.max(delta.abs());
            }
        }
        max_change
    }

    /// Solves the stationarity equations on the current support with its
    /// current signs. Accepted only if the solution keeps every sign, in which
    /// case it is the exact minimizer restricted to that support.
    fn exact_step(&self, lambda: f64, coef: &mut [f64], grad: &mut Vec<f64>) -> bool {
        let n = self.cols();
        let support: Vec<usize> = (0..n).filter(|&j| coef[j] != 0.0).collect();
        let k = support.len();
        if k == 0 {
            return false;
        }
        let g = DMatrix::from_fn(k, k, |a, b| self.gram[support[a] * n + support[b]]);
        let rhs = DVector::from_iterator(k, support.iter().map(|&j| self.xty[j] - lambda * coef[j].signum()));
        let Some(chol) = g.cholesky() else {
            return false;
        };
        let sol = chol.solve(&rhs);
        if support.iter().zip(sol.iter()).any(|(&j, &w)| w == 0.0 || w.signum() != coef[j].signum()) {
            return false;
        }
        for (&j, &w) in support.iter().zip(sol.iter()) {
            coef[j] = w;
        }
        *grad = self.correlations(coef);
        true
    }

    /// Cyclic coordinate descent from `warm` (or zero), alternating passes
    /// over the active set with full sweeps.
    pub fn solve(&self, lambda: f64, warm: Option<&[f64]>, settings: &LassoSettings) -> Result<LassoFit> {
        settings.validate()?;
        if !(lambda > 0.0) {
            return Err(Error::domain(format!("lambda must be positive, got {lambda}")));
        }
        let n = self.cols();
        let mut coef = match warm {
            Some(w) if w.len() == n => w.to_vec(),
            Some(w) => return Err(Error::domain(format!("warm start has length {}, expected {n}", w.len()))),
            None => vec![0.0; n],
        };
        let mut grad = self.correlations(&coef);
        let mut sweeps = 0;
        let mut kkt = f64::INFINITY;
        while sweeps < settings.max_sweeps {
            let change = self.sweep(lambda, &mut coef, &mut grad, 0..n);
            sweeps += 1;
            if change <= settings.tol {
                kkt = self.kkt_residual(lambda, &coef);
                if kkt <= settings.kkt_tol {
                    return Ok(LassoFit { coef, sweeps, kkt_residual: kkt });
                }
                // Refresh the running gradient against accumulated rounding.
                grad = self.correlations(&coef);
                continue;
            }
            let active: Vec<usize> = (0..n).filter(|&j| coef[j] != 0.0).collect();
            let mut next_exact = 4;
            let mut inner = 0;
            while sweeps < settings.max_sweeps {
                let change = self.sweep(lambda, &mut coef, &mut grad, active.iter().copied());
                sweeps += 1;
                inner += 1;
                if change <= settings.tol {
                    break;
                }
                if inner == next_exact {
                    next_exact *= 2;
                    if self.exact_step(lambda, &mut coef, &mut grad) {
                        break;
                    }
                }
            }
        }
        if kkt.is_infinite() {
            kkt = self.kkt_residual(lambda, &coef);
        }
        Err(Error::LassoNotConverged { sweeps, kkt_residual: kkt, last_iterate: coef })
    }
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Minimizer of `½ Σ_μ weight_μ (y_μ − x_μ·w)² + λ‖w‖₁`.
pub fn lasso_coordinate_descent(
    design: &DesignMatrix,
    responses: &[f64],
    lambda: f64,
    weights: &[f64],
    settings: &LassoSettings,
) -> Result<Vec<f64>> {
    let problem = LassoProblem::new(design.clone(), responses.to_vec(), Some(weights))?;
    Ok(problem.solve(lambda, None, settings)?.coef)
}
