use std::num::NonZeroUsize;

use gauss_quad::{hermite::GaussHermite, legendre::GaussLegendre};
use serde::{Deserialize, Serialize};

use super::gauss_density;
use crate::error::{Error, Result};

pub const DEFAULT_HERMITE_NODES: usize = 101;

/// Gauss–Hermite rule in the probabilist's normalization: the weights sum
/// to one and `Σ w f(x)` approximates `E[f(ξ)]` for `ξ ~ N(0, 1)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QuadratureRule {
    nodes: Vec<f64>,
    weights: Vec<f64>,
}

impl QuadratureRule {
    pub fn gauss_hermite(n: usize) -> Result<Self> {
        let n = NonZeroUsize::new(n).ok_or_else(|| Error::domain("quadrature needs at least one node"))?;
        let rule = GaussHermite::new(n);
        let scale = std::f64::consts::SQRT_2;
        let (nodes, mut weights): (Vec<f64>, Vec<f64>) =
            rule.iter().map(|(x, w)| (x * scale, *w)).unzip();
        let total: f64 = weights.iter().sum();
        weights.iter_mut().for_each(|w| *w /= total);
        Ok(QuadratureRule { nodes, weights })
    }

    pub fn nodes(&self) -> &[f64] {
        &self.nodes
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }
}

impl Default for QuadratureRule {
    fn default() -> Self {
        QuadratureRule::gauss_hermite(DEFAULT_HERMITE_NODES).expect("non-zero node count")
    }
}

pub fn gauss_hermite_expect<F: FnMut(f64) -> f64>(mut f: F, rule: &QuadratureRule) -> f64 {
    rule.nodes.iter().zip(&rule.weights).map(|(&x, &w)| w * f(x)).sum()
}

/// A location where a Gaussian-weighted integrand changes abruptly:
/// a kink (`width == 0`) or a smooth transition of the given width.
#[derive(Debug, Clone, Copy)]
pub struct Feature {
    pub at: f64,
    pub width: f64,
}

impl Feature {
    pub fn kink(at: f64) -> Self {
        Feature { at, width: 0.0 }
    }

    pub fn smooth(at: f64, width: f64) -> Self {
        Feature { at, width }
    }
}

/// Composite Gauss–Legendre integration against the standard normal density.
///
/// The mesh is uniform (unit panels) over `[-span, span]`, split exactly at
/// every [`Feature`], and geometrically graded towards features of small
/// width. The soft-threshold averages have near-kinks whose width is set by
/// the resampling noise; a single global Gauss–Hermite rule does not resolve
/// those, a graded piecewise rule does.
#[derive(Debug, Clone)]
pub struct GaussianIntegrator {
    unit_nodes: Vec<f64>,
    unit_weights: Vec<f64>,
    span: f64,
    panel: f64,
}

impl GaussianIntegrator {
    pub const DEFAULT_NODES_PER_PANEL: usize = 16;
    const MIN_WIDTH: f64 = 1e-9;

    pub fn new(nodes_per_panel: usize) -> Result<Self> {
        let n = NonZeroUsize::new(nodes_per_panel)
            .ok_or_else(|| Error::domain("integrator needs at least one node per panel"))?;
        let rule = GaussLegendre::new(n);
        let (unit_nodes, unit_weights) = rule.iter().map(|(x, w)| (*x, *w)).unzip();
        Ok(GaussianIntegrator { unit_nodes, unit_weights, span: 12.0, panel: 1.0 })
    }

    pub fn nodes_per_panel(&self) -> usize {
        self.unit_nodes.len()
    }

    /// `E[f(t)]` for `t ~ N(0, 1)`, truncated to `|t| <= span` (omitted mass < 1e-32).
    pub fn expect<F: FnMut(f64) -> f64>(&self, features: &[Feature], f: F) -> f64 {
        self.integrate(-self.span, self.span, features, f)
    }

    /// `∫_{lo}^{lo + span} φ(t) f(t) dt`, the upper-tail analogue of [`expect`](Self::expect).
    pub fn tail<F: FnMut(f64) -> f64>(&self, lo: f64, features: &[Feature], f: F) -> f64 {
        self.integrate(lo, lo + self.span, features, f)
    }

    fn integrate<F: FnMut(f64) -> f64>(&self, lo: f64, hi: f64, features: &[Feature], mut f: F) -> f64 {
        let mesh = self.mesh(lo, hi, features);
        let mut total = 0.0;
        for pair in mesh.windows(2) {
            let (a, b) = (pair[0], pair[1]);
            let (mid, half) = (0.5 * (a + b), 0.5 * (b - a));
            let mut panel = 0.0;
            for (&x, &w) in self.unit_nodes.iter().zip(&self.unit_weights) {
                let t = mid + half * x;
                panel += w * gauss_density(t) * f(t);
            }
            total += half * panel;
        }
        total
    }

    fn mesh(&self, lo: f64, hi: f64, features: &[Feature]) -> Vec<f64> {
        let mut points = Vec::with_capacity(64);
        let panels = ((hi - lo) / self.panel).ceil() as usize;
        points.extend((0..=panels).map(|k| (lo + k as f64 * self.panel).min(hi)));
        for feat in features {
            if !feat.at.is_finite() || feat.at <= lo || feat.at >= hi {
                continue;
            }
            points.push(feat.at);
            if feat.width > 0.0 {
                let mut step = feat.width.max(Self::MIN_WIDTH);
                while step < self.panel {
                    for p in [feat.at - step, feat.at + step] {
                        if p > lo && p < hi {
                            points.push(p);
                        }
                    }
                    step *= 2.0;
                }
            }
        }
        points.sort_by(f64::total_cmp);
        points.dedup_by(|b, a| (*b - *a).abs() <= 1e-13 * (1.0 + a.abs()));
        points
    }
}

impl Default for GaussianIntegrator {
    fn default() -> Self {
        GaussianIntegrator::new(Self::DEFAULT_NODES_PER_PANEL).expect("non-zero node count")
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::special_math::soft_threshold::moments_unchecked;
    use crate::special_math::soft_threshold;

    #[test]
    fn hermite_rule_invariants() {
        for n in [10, 101, 200] {
            let rule = QuadratureRule::gauss_hermite(n).unwrap();
            assert_eq!(rule.len(), n);
            assert!(rule.nodes().windows(2).all(|p| p[0] < p[1]));
            assert!(rule.weights().iter().all(|&w| w > 0.0));
            assert!((rule.weights().iter().sum::<f64>() - 1.0).abs() < 1e-12);
            assert!(gauss_hermite_expect(|x| x, &rule).abs() < 1e-10);
            assert!((gauss_hermite_expect(|x| x * x, &rule) - 1.0).abs() < 1e-10);
        }
        assert!(QuadratureRule::gauss_hermite(0).is_err());
    }

    #[test]
    fn hermite_moments() {
        let rule = QuadratureRule::gauss_hermite(10).unwrap();
        assert!((gauss_hermite_expect(|_| 1.0, &rule) - 1.0).abs() < 1e-14);
        assert!((gauss_hermite_expect(|x| x * x, &rule) - 1.0).abs() < 1e-12);
        assert!((gauss_hermite_expect(|x| x.powi(4), &rule) - 3.0).abs() < 1e-10);
        let big = QuadratureRule::default();
        assert!((gauss_hermite_expect(|x| x.powi(4), &big) - 3.0).abs() < 1e-10);
    }

    #[test]
    fn integrator_gaussian_moments() {
        let g = GaussianIntegrator::default();
        assert!((g.expect(&[], |_| 1.0) - 1.0).abs() < 1e-14);
        assert!((g.expect(&[], |t| t * t) - 1.0).abs() < 1e-13);
        assert!((g.expect(&[Feature::kink(0.3)], |t| t.powi(4)) - 3.0).abs() < 1e-12);
        // Upper tail mass past 1.
        let tail = g.tail(1.0, &[], |_| 1.0);
        assert!((tail - crate::special_math::gauss_upper_tail(1.0)).abs() < 1e-14);
    }

    #[test]
    fn integrator_resolves_kinks() {
        // E[max(t - c, 0)] = φ(c) - c H(c).
        let g = GaussianIntegrator::default();
        for &c in &[-1.3, 0.0, 0.7, 2.5] {
            let exact = crate::special_math::gauss_density(c) - c * crate::special_math::gauss_upper_tail(c);
            let got = g.expect(&[Feature::kink(c)], |t| (t - c).max(0.0));
            assert!((got - exact).abs() < 1e-14, "c = {c}");
        }
    }

    /// Independent route to the eta-moments: integrate the soft threshold
    /// directly with the piecewise rule (kinks at ±lambda placed as features)
    /// and compare with the closed forms over the full grid, including small
    /// `v_hat` where a global Hermite rule breaks down.
    #[test]
    fn closed_forms_agree_with_piecewise_quadrature() {
        let g = GaussianIntegrator::new(20).unwrap();
        for &v in &[0.01, 0.5, 2.0] {
            for &lam in &[0.1, 1.0] {
                for &q in &[0.5, 2.0] {
                    for k in -20..=20 {
                        let a = k as f64 * 0.25;
                        let s = f64::sqrt(v);
                        let feats = [Feature::kink((lam - a) / s), Feature::kink((-lam - a) / s)];
                        let w = |e: f64| soft_threshold(a + s * e, lam) / q;
                        let mean = g.expect(&feats, w);
                        let second = g.expect(&feats, |e| w(e).powi(2));
                        let nz = g.expect(&feats, |e| if w(e) != 0.0 { 1.0 } else { 0.0 });
                        let m = moments_unchecked(a, v, lam, q);
                        assert!((m.mean - mean).abs() < 1e-8);
                        assert!((m.second_moment - second).abs() < 1e-8);
                        assert!((m.nonzero_prob - nz).abs() < 1e-8);
                    }
                }
            }
        }
    }
}
