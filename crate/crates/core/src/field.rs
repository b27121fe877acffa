//! Order parameters of a soft-threshold estimator driven by the Gaussian
//! local field `h = m_hat w0 + sqrt(chi_hat) xi + sqrt(v_hat) eta`.
//!
//! The w0-mixture is integrated exactly: the null branch has deterministic
//! field `a ~ N(0, chi_hat)`, the signal branch `a ~ N(0, m_hat^2 + chi_hat)`.
//! Every average except `E_a[(E_eta w)^2]` is linear in the eta-average and
//! collapses to a single Gaussian of variance `var(a) + v_hat`, so only that
//! one term needs numerical integration. `m` uses Stein's identity,
//! `E[w0 w] = m_hat E[dw/dh]`.

use crate::special_math::soft_threshold::{moments_unchecked, soft_threshold_mean};
use crate::special_math::{Feature, GaussianIntegrator};

#[derive(Debug, Clone, Copy)]
pub(crate) struct FieldHats {
    pub q_hat: f64,
    pub m_hat: f64,
    pub chi_hat: f64,
    pub v_hat: f64,
}

#[derive(Debug, Clone, Copy)]
pub(crate) struct FieldOrder {
    pub q: f64,
    pub m: f64,
    pub chi: f64,
    pub v: f64,
}

/// `E_{a ~ N(0, var_a)}[(E_eta w)^2]`.
pub(crate) fn mean_square(var_a: f64, hats: &FieldHats, lambda: f64, integ: &GaussianIntegrator) -> f64 {
    let FieldHats { q_hat, v_hat, .. } = *hats;
    if var_a <= 0.0 {
        // a = 0 and the eta-average of an odd function vanishes.
        return 0.0;
    }
    if v_hat == 0.0 {
        return moments_unchecked(0.0, var_a, lambda, q_hat).second_moment;
    }
    let sigma = var_a.sqrt();
    let s = v_hat.sqrt();
    let features = [Feature::smooth(lambda / sigma, s / sigma)];
    // Even integrand: twice the half-line integral.
    2.0 * integ.tail(0.0, &features, |t| {
        let mean = soft_threshold_mean(sigma * t, s, lambda, q_hat);
        mean * mean
    })
}

pub(crate) fn field_order(hats: &FieldHats, lambda: f64, rho: f64, integ: &GaussianIntegrator) -> FieldOrder {
    let FieldHats { q_hat, m_hat, chi_hat, v_hat } = *hats;
    let var_null = chi_hat;
    let var_signal = m_hat * m_hat + chi_hat;

    let total_null = moments_unchecked(0.0, var_null + v_hat, lambda, q_hat);
    let total_signal = moments_unchecked(0.0, var_signal + v_hat, lambda, q_hat);

    let (q_null, q_signal) = if rho < 1.0 && rho > 0.0 {
        (mean_square(var_null, hats, lambda, integ), mean_square(var_signal, hats, lambda, integ))
    } else if rho == 0.0 {
        (mean_square(var_null, hats, lambda, integ), 0.0)
    } else {
        (0.0, mean_square(var_signal, hats, lambda, integ))
    };

    let q = (1.0 - rho) * q_null + rho * q_signal;
    let v = (1.0 - rho) * (total_null.second_moment - q_null) + rho * (total_signal.second_moment - q_signal);
    let chi = ((1.0 - rho) * total_null.nonzero_prob + rho * total_signal.nonzero_prob) / q_hat;
    let m = rho * m_hat * total_signal.nonzero_prob / q_hat;
    FieldOrder { q, m, chi, v: v.max(0.0) }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::special_math::{soft_threshold, QuadratureRule};

    /// Brute-force oracle: literal triple average over (w0, xi, eta). The
    /// eta-average integrates the soft threshold directly on a piecewise rule
    /// split at its kinks; the smooth outer averages use Hermite rules.
    fn brute_force(h: &FieldHats, lambda: f64, rho: f64) -> FieldOrder {
        let rule = QuadratureRule::gauss_hermite(120).unwrap();
        let inner = GaussianIntegrator::new(20).unwrap();
        let s = h.v_hat.sqrt();
        let branch = |w0: f64| {
            let mut acc = [0.0; 4];
            for (&xi, &wx) in rule.nodes().iter().zip(rule.weights()) {
                let a = h.m_hat * w0 + h.chi_hat.sqrt() * xi;
                let kinks = [Feature::kink((lambda - a) / s), Feature::kink((-lambda - a) / s)];
                let w = |e: f64| soft_threshold(a + s * e, lambda) / h.q_hat;
                let mean = inner.expect(&kinks, w);
                let second = inner.expect(&kinks, |e| w(e).powi(2));
                let nz = inner.expect(&kinks, |e| if w(e) != 0.0 { 1.0 } else { 0.0 });
                acc[0] += wx * mean * mean;
                acc[1] += wx * w0 * mean;
                acc[2] += wx * nz / h.q_hat;
                acc[3] += wx * (second - mean * mean);
            }
            acc
        };
        let null = branch(0.0);
        let mut signal = [0.0; 4];
        for (&w0, &ww) in rule.nodes().iter().zip(rule.weights()) {
            let b = branch(w0);
            for k in 0..4 {
                signal[k] += ww * b[k];
            }
        }
        let mix = |k: usize| (1.0 - rho) * null[k] + rho * signal[k];
        FieldOrder { q: mix(0), m: mix(1), chi: mix(2), v: mix(3) }
    }

    #[test]
    fn collapsed_averages_match_brute_force() {
        let integ = GaussianIntegrator::default();
        // Large v_hat keeps the outer integrands smooth enough for the Hermite rules.
        for &(q_hat, m_hat, chi_hat, v_hat, lambda, rho) in &[
            (1.5, 1.5, 0.4, 0.9, 0.1, 0.3),
            (2.0, 2.0, 1.0, 1.5, 0.3, 0.5),
            (0.8, 0.8, 0.2, 2.0, 0.05, 0.1),
        ] {
            let hats = FieldHats { q_hat, m_hat, chi_hat, v_hat };
            let fast = field_order(&hats, lambda, rho, &integ);
            let slow = brute_force(&hats, lambda, rho);
            assert!((fast.q - slow.q).abs() < 1e-8, "q {} vs {}", fast.q, slow.q);
            assert!((fast.m - slow.m).abs() < 1e-8, "m {} vs {}", fast.m, slow.m);
            assert!((fast.chi - slow.chi).abs() < 1e-8, "chi {} vs {}", fast.chi, slow.chi);
            assert!((fast.v - slow.v).abs() < 1e-8, "v {} vs {}", fast.v, slow.v);
        }
    }

    #[test]
    fn linear_limit() {
        // lambda = 0, v_hat = 0: w = h / q_hat.
        let integ = GaussianIntegrator::default();
        let rho = 0.3;
        let hats = FieldHats { q_hat: 1.0, m_hat: 1.0, chi_hat: 1.0, v_hat: 0.0 };
        let o = field_order(&hats, 0.0, rho, &integ);
        assert!((o.q - (rho + 1.0)).abs() < 1e-12);
        assert_eq!(o.v, 0.0);
        assert!((o.chi - 1.0).abs() < 1e-12);
        assert!((o.m - rho).abs() < 1e-12);
    }

    #[test]
    fn mean_square_is_stable_under_refinement() {
        let coarse = GaussianIntegrator::new(16).unwrap();
        let fine = GaussianIntegrator::new(32).unwrap();
        for &v_hat in &[1e-8, 1e-4, 0.01, 0.3, 2.0] {
            let hats = FieldHats { q_hat: 1.7, m_hat: 1.7, chi_hat: 0.2, v_hat };
            for &var_a in &[0.2, 3.0] {
                let a = mean_square(var_a, &hats, 0.4, &coarse);
                let b = mean_square(var_a, &hats, 0.4, &fine);
                assert!((a - b).abs() < 1e-12, "v_hat {v_hat}: {a} vs {b}");
            }
        }
    }
}
