//! Thresholded selection rates under the Gaussian field model.
//!
//! A variable is selected when its selection probability exceeds a
//! threshold. All selection probabilities used here are even and
//! non-decreasing in the field `a`, so the selected set is `|a| > a_c`.

use serde::{Deserialize, Serialize};

use crate::special_math::gauss_upper_tail;

const FIELD_CEILING: f64 = 1e8;

/// Region of the field selected by a threshold rule.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum SelectedRegion {
    /// Every variable is selected.
    All,
    /// `|a| > a_c`.
    Beyond(f64),
    /// No field value reaches the threshold.
    Empty,
}

impl SelectedRegion {
    /// Probability that `a ~ N(0, var)` falls in the region.
    pub fn mass(&self, var: f64) -> f64 {
        match *self {
            SelectedRegion::All => 1.0,
            SelectedRegion::Empty => 0.0,
            SelectedRegion::Beyond(a_c) => {
                if var <= 0.0 {
                    0.0
                } else {
                    2.0 * gauss_upper_tail(a_c / var.sqrt())
                }
            }
        }
    }
}

/// Locates `a_c = inf{a >= 0 : prob(a) > threshold}` by doubling and bisection.
pub fn critical_field<F: FnMut(f64) -> f64>(mut prob: F, threshold: f64) -> SelectedRegion {
    if prob(0.0) > threshold {
        return SelectedRegion::All;
    }
    let mut hi = 1e-3;
    while prob(hi) <= threshold {
        hi *= 2.0;
        if hi > FIELD_CEILING {
            return SelectedRegion::Empty;
        }
    }
    let mut lo = 0.0;
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if prob(mid) > threshold {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    SelectedRegion::Beyond(hi)
}

/// TPR and FDR from the selected masses of the null and signal branches.
/// TPR is 0 when there are no signals and FDR is 0 when nothing is selected.
pub fn rates_from_masses(null_mass: f64, signal_mass: f64, rho: f64) -> (f64, f64) {
    let tpr = if rho > 0.0 { signal_mass } else { 0.0 };
    let false_sel = (1.0 - rho) * null_mass;
    let total = false_sel + rho * signal_mass;
    let fdr = if total > 0.0 { false_sel / total } else { 0.0 };
    (tpr, fdr)
}

/// TPR and FDR for a threshold rule on fields with null variance `var_null`
/// and signal variance `var_signal`.
pub fn region_rates(region: SelectedRegion, var_null: f64, var_signal: f64, rho: f64) -> (f64, f64) {
    rates_from_masses(region.mass(var_null), region.mass(var_signal), rho)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PowerPoint {
    pub threshold: f64,
    pub fdr: f64,
    pub tpr: f64,
}

/// A TPR-versus-FDR curve traced by sweeping a selection threshold.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct PowerCurve {
    pub points: Vec<PowerPoint>,
}

impl PowerCurve {
    pub fn new(points: Vec<PowerPoint>) -> Self {
        PowerCurve { points }
    }

    /// Highest TPR attainable at FDR at most `target`, interpolating linearly
    /// between neighbouring points of the curve. `None` if every point has
    /// FDR above `target`.
    pub fn tpr_at_fdr(&self, target: f64) -> Option<f64> {
        let mut pts: Vec<PowerPoint> = self.points.iter().copied().filter(|p| p.fdr.is_finite()).collect();
        pts.sort_by(|a, b| a.fdr.total_cmp(&b.fdr).then(a.tpr.total_cmp(&b.tpr)));
        let mut best: Option<f64> = None;
        let mut raise = |v: f64| best = Some(best.map_or(v, |b: f64| b.max(v)));
        for p in pts.iter().filter(|p| p.fdr <= target) {
            raise(p.tpr);
        }
        for pair in pts.windows(2) {
            let (a, b) = (pair[0], pair[1]);
            if a.fdr <= target && target < b.fdr {
                let t = (target - a.fdr) / (b.fdr - a.fdr);
                raise(a.tpr + t * (b.tpr - a.tpr));
            }
        }
        best
    }
}
