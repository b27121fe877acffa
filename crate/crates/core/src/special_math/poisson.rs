use crate::error::{Error, Result};

pub const DEFAULT_MASS_TOL: f64 = 1e-12;

/// Poisson probabilities `P(c; mu)` for `c = 0..=C`, with `C` the first count
/// past which the omitted mass is below the tolerance.
#[derive(Debug, Clone, PartialEq)]
pub struct PoissonTable {
    mean: f64,
    probs: Vec<f64>,
}

impl PoissonTable {
    pub fn new(mean: f64, mass_tol: f64) -> Result<Self> {
        if !(mean > 0.0) || !mean.is_finite() {
            return Err(Error::domain(format!("Poisson mean must be positive, got {mean}")));
        }
        if !(mass_tol > 0.0 && mass_tol <= 1e-6) {
            return Err(Error::domain(format!("mass_tol must lie in (0, 1e-6], got {mass_tol}")));
        }
        let ln_mean = mean.ln();
        let mut ln_p = -mean;
        let mut probs = Vec::with_capacity((mean + 12.0 * mean.sqrt() + 20.0) as usize);
        let mut cumulative = 0.0;
        let mut c = 0usize;
        loop {
            let p = ln_p.exp();
            probs.push(p);
            cumulative += p;
            // Past the mode the remaining tail is dominated by a geometric series
            // with ratio mean / (c + 2), which bounds the omitted mass.
            let next_ln = ln_p + ln_mean - ((c + 1) as f64).ln();
            let ratio = mean / (c as f64 + 2.0);
            let tail_bound = if ratio < 1.0 { next_ln.exp() / (1.0 - ratio) } else { f64::INFINITY };
            if cumulative >= 1.0 - mass_tol || tail_bound < mass_tol {
                break;
            }
            ln_p = next_ln;
            c += 1;
        }
        Ok(PoissonTable { mean, probs })
    }

    pub fn mean(&self) -> f64 {
        self.mean
    }

    /// Largest retained count.
    pub fn cutoff(&self) -> usize {
        self.probs.len() - 1
    }

    pub fn probs(&self) -> &[f64] {
        &self.probs
    }

    pub fn expect<F: FnMut(usize) -> f64>(&self, mut g: F) -> Result<f64> {
        let mut acc = 0.0;
        for (c, &p) in self.probs.iter().enumerate() {
            let value = g(c);
            if !value.is_finite() {
                return Err(Error::domain(format!("g({c}) is not finite")));
            }
            acc += p * value;
        }
        Ok(acc)
    }
}

/// `Σ_{c=0}^{C} P(c; mu_b) g(c)` with the Poisson tail beyond `C` below `mass_tol`.
pub fn poisson_truncated_expect<F: FnMut(usize) -> f64>(mu_b: f64, g: F, mass_tol: f64) -> Result<f64> {
    PoissonTable::new(mu_b, mass_tol)?.expect(g)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn poisson_mean_and_second_moment() {
        let mean = poisson_truncated_expect(1.0, |c| c as f64, DEFAULT_MASS_TOL).unwrap();
        assert!((mean - 1.0).abs() < 1e-11);
        // E[c^2] = mu + mu^2, checked against a long direct summation.
        let second = poisson_truncated_expect(1.0, |c| (c * c) as f64, DEFAULT_MASS_TOL).unwrap();
        let mut direct = 0.0;
        let mut p = (-1.0f64).exp();
        for c in 0..60 {
            direct += p * (c * c) as f64;
            p /= (c + 1) as f64;
        }
        assert!((direct - 2.0).abs() < 1e-14);
        assert!((second - 2.0).abs() < 1e-10);
    }

    #[test]
    fn total_mass() {
        let tol = 1e-12;
        let total = poisson_truncated_expect(2.0, |_| 1.0, tol).unwrap();
        assert!((total - 1.0).abs() <= tol + 1e-15);
        assert!(total <= 1.0 + 1e-15);
    }

    #[test]
    fn exact_for_polynomials_at_tight_tolerance() {
        for &mu in &[0.3, 1.0, 2.0, 7.5, 50.0] {
            let table = PoissonTable::new(mu, 1e-300).unwrap();
            let e1 = table.expect(|c| c as f64).unwrap();
            let e2 = table.expect(|c| (c * c) as f64).unwrap();
            let e3 = table.expect(|c| (c * c * c) as f64).unwrap();
            let eps = 1e-13 * (1.0 + mu.powi(3));
            assert!((e1 - mu).abs() < eps, "mu {mu}");
            assert!((e2 - (mu + mu * mu)).abs() < eps, "mu {mu}");
            assert!((e3 - (mu.powi(3) + 3.0 * mu * mu + mu)).abs() < eps, "mu {mu}");
        }
    }

    #[test]
    fn polynomial_error_tracks_mass_tolerance() {
        // Omitted mass below 1e-14 weighted by c^2 near the cutoff.
        for &mu in &[0.3, 1.0, 7.5] {
            let table = PoissonTable::new(mu, 1e-14).unwrap();
            let c = table.cutoff() as f64;
            let e2 = table.expect(|c| (c * c) as f64).unwrap();
            assert!((e2 - (mu + mu * mu)).abs() < 1e-14 * (c + 2.0).powi(3), "mu {mu}");
        }
    }

    #[test]
    fn cutoff_grows_with_mean() {
        let small = PoissonTable::new(1.0, 1e-12).unwrap().cutoff();
        let large = PoissonTable::new(50.0, 1e-12).unwrap().cutoff();
        assert!(small < large);
        assert!(large > 50);
    }

    #[test]
    fn rejects_bad_inputs() {
        assert!(PoissonTable::new(0.0, 1e-12).is_err());
        assert!(PoissonTable::new(1.0, 1e-3).is_err());
        assert!(poisson_truncated_expect(1.0, |c| if c == 2 { f64::NAN } else { 1.0 }, 1e-12).is_err());
    }
}
